#pragma once

#include "risee/gradients.hpp"
#include "risee/objectives.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace risee {

struct OracleReport {
  std::string name;
  std::string instance;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;
  bool pass = true;
  std::string witness;  // worst sample, human readable
  int resamples = 0;    // points rejected for sitting in a guard region

  /// One line: "<PASS|FAIL> name instance max_rel_error=... samples=...".
  std::string summary() const;
};

/// A complete problem at which oracles are evaluated.
struct OracleInstance {
  ChannelRealization channel;
  PowerModel power;
  FairnessSpec fairness;
  DesignVariables vars;
  std::string descriptor;
};

/// Random instance with i.i.d. complex Gaussian links, CSI error radius
/// beta ||Hhat_k||_F, random weights in [1, 5] and a random feasible point
/// with a nonzero slack mu. Noise and powers are O(1).
OracleInstance random_oracle_instance(const SystemDims& dims, double beta, std::uint64_t seed);

/// Scalar function whose gradient is being checked.
enum class GradientTarget {
  StreamRate,  // lower-bound rate of one stream
  Penalty,     // G
  Lagrangian,  // H at the given gamma, omega
};

struct GradientCheckOptions {
  GradientTarget target = GradientTarget::Lagrangian;
  Block block = Block::Digital;
  int user = 0;
  int stream = 0;
  double gamma = 0.3;
  double omega = 2.0;
  int directions = 100;
  double step = 1e-6;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  /// Applied to the analytic gradient before comparison (oracle sensitivity).
  std::function<void(Eigen::MatrixXcd&)> corrupt;
};

/// Central differences of the target along random complex directions Z and
/// iZ, compared with Re<g, Z> and Re<g, iZ> for the analytic gradient g.
/// The error of one directional derivative is
/// |fd - an| / (max(|fd|, |an|) + 1e-3 ||g||), so directions nearly
/// orthogonal to g are not judged on round-off alone.
OracleReport fd_gradient_check(const OracleInstance& instance, const GradientCheckOptions& opt);

/// Runs `fd_gradient_check` on a freshly drawn instance, redrawing (up to
/// `max_retries` times) when the analytic gradient touches a guard floor or
/// some coupling magnitude is below 1e-6.
OracleReport fd_gradient_check_random(const SystemDims& dims, double beta, std::uint64_t seed,
                                      const GradientCheckOptions& opt, int max_retries = 10);

/// Sampled-adversary check of true_rate >= robust_rate_lb for every stream.
/// Each sample draws one error matrix per user (cycling through uniform-ball,
/// boundary and the closed-form Delta* = -delta_k Hhat_k / ||Hhat_k||_F) and
/// evaluates the true rate on Hhat_k + Delta_k. `max_rel_error` holds the
/// largest (lb - true) in bits/s/Hz, so pass means it is <= `slack`.
OracleReport bound_dominance_check(const OracleInstance& instance, std::size_t samples,
                                   std::uint64_t seed, double slack = 1e-9);

/// Error matrix for `user` that lowers the desired-signal magnitude of
/// `stream` by the full delta_k sqrt(N_RIS) ||d_s|| allowed by the
/// Cauchy-Schwarz step, aligned against the signal. It lies on the error
/// sphere but is not of the form -delta Hhat / ||Hhat||.
Eigen::MatrixXcd signal_adversary(const OracleInstance& instance, int user, int stream);

/// True rate of stream (user, stream) when user `user` sees Hhat + delta.
double rate_under_error(const OracleInstance& instance, int user, int stream,
                        const Eigen::MatrixXcd& delta);

/// vec(A B C) = (C^T kron A) vec(B) on random matrices and the Khatri-Rao
/// form of the cascaded channel against H_R diag(theta) H_T, including
/// theta = 1. Reports the largest relative residual against 1e-12.
OracleReport identity_checks(std::uint64_t seed);

/// Dimensions of the small gradient-check instances:
/// K=2, L=1, M=2, N_T=2, N_RIS=4 (2x2), N_R=2.
SystemDims small_oracle_dims();

/// Every (target, block) pair on `instances` random instances, 100
/// directions each, h = 1e-6, tolerance 1e-4.
std::vector<OracleReport> gradient_suite(int instances, std::uint64_t seed, double beta = 0.1);

/// bound_dominance_check on `instances` random instances with random
/// feasible designs.
std::vector<OracleReport> bound_suite(int instances, std::size_t samples, std::uint64_t seed,
                                      double beta = 0.2);

/// CSV: name,instance,max_rel_error,tolerance,samples,resamples,pass,witness
void write_oracle_csv(std::ostream& os, const std::vector<OracleReport>& reports);

}  // namespace risee
