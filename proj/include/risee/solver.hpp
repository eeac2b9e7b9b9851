#pragma once

#include "risee/gradients.hpp"
#include "risee/objectives.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace risee {

enum class GammaUpdate {
  Standard,  // gamma += G / omega
  Paper,     // gamma += H / omega; diverges as omega shrinks, kept for comparison
};

/// Penalty bookkeeping and iteration controls.
struct PddState {
  double gamma = 0.0;
  double omega = 10.0;
  double psi = 0.1;
  double epsilon = 1e-3;      // inner stopping tolerance on |delta H|
  double penalty_tol = 1e-8;  // |G| at which an outer round counts as converged
  double fairness_slack = 1e-3;
  double initial_step = 1.0;
  double max_step = 1.0;
  int max_halvings = 40;
  int max_inner = 2000;
  int max_outer = 16;
  GammaUpdate gamma_update = GammaUpdate::Standard;

  void validate() const;
};

struct IterationRecord {
  int outer = 0;
  int inner = 0;
  double lagrangian = 0.0;
  double ee = 0.0;
  double jain = 1.0;
  double penalty = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double omega = 0.0;
  std::array<double, 4> steps{};  // D, a, theta, C
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  std::vector<std::size_t> round_starts;  // index of the first record of each outer round
};

struct SolveResult {
  DesignVariables vars;
  SolveTrace trace;
  double ee = 0.0;          // lower-bound EE in the units of the power model's bandwidth
  double lagrangian = 0.0;  // final H at the final gamma, omega
  double penalty = 0.0;
  double jain = 1.0;
  double gamma = 0.0;
  double omega = 0.0;
  int outer_rounds = 0;
  int iterations = 0;
  bool constraint_met = false;  // Jain index >= rho - fairness_slack
  bool converged = false;       // constraint met with |G| <= penalty_tol
};

Eigen::MatrixXcd project_D(const Eigen::MatrixXcd& d, double p_max);
/// Entries to modulus 1/sqrt(N_T); zero entries map to 1/sqrt(N_T).
Eigen::VectorXcd project_a(const Eigen::VectorXcd& a, int antennas_per_subarray);
/// Entries to unit modulus; zero entries map to 1.
Eigen::VectorXcd project_theta(const Eigen::VectorXcd& theta);
/// Columns to unit norm; zero columns map to e_1.
Eigen::MatrixXcd project_C(const Eigen::MatrixXcd& c);

/// max(0, (sum r)^2 - rho K sum r^2 - gamma omega).
double update_mu(const Eigen::VectorXd& weighted_rates, double rho, double gamma, double omega);
double update_mu(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm,
                 const FairnessSpec& spec, double gamma, double omega);

/// Random feasible point: ||D||_F^2 = P_max, random phases, unit combiners.
DesignVariables random_feasible_point(const SystemDims& dims, const PowerModel& pm,
                                      std::uint64_t seed);

/// Step sizes carried across inner iterations, one per block.
struct StepSizes {
  std::array<double, 4> alpha{1.0, 1.0, 1.0, 1.0};
};

/// One Gauss-Seidel pass over D, a, theta, C with projected ascent and
/// per-block backtracking (halve on a decrease of H), then the closed-form
/// mu update. Appends exactly one record to `trace`. Throws
/// std::runtime_error if H becomes non-finite.
DesignVariables inner_sweep(const DesignVariables& vars, const ChannelRealization& ch,
                            const PowerModel& pm, const FairnessSpec& spec, const PddState& state,
                            StepSizes& steps, SolveTrace& trace, int outer = 0);

/// Penalty dual decomposition with projected-gradient alternating ascent.
///
/// The objective is evaluated with the power model as given; callers that
/// want a well-scaled problem pass a unit bandwidth and rescale the EE.
SolveResult solve(const ChannelRealization& ch, const PowerModel& pm, const FairnessSpec& spec,
                  const PddState& state, const DesignVariables& init);
SolveResult solve(const ChannelRealization& ch, const PowerModel& pm, const FairnessSpec& spec,
                  const PddState& state, std::uint64_t seed);

struct MultistartResult {
  SolveResult best;
  std::vector<SolveResult> runs;  // by start index
  int best_index = 0;
};

/// Runs `starts` solves from independent random points and keeps the
/// constraint-satisfying run with the largest EE (largest H if none).
MultistartResult multistart(const ChannelRealization& ch, const PowerModel& pm,
                            const FairnessSpec& spec, const PddState& state, int starts,
                            std::uint64_t seed);

}  // namespace risee
