#pragma once

#include "risee/channel_model.hpp"
#include "risee/objectives.hpp"
#include "risee/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace risee {

inline constexpr int kConfigSchemaVersion = 1;

enum class Profile { Desk, Paper };
enum class SweepAxis { Rho, Beta, PMax, NRis };

/// Everything an experiment needs. Powers are kept in the units used to
/// state them (dBW, dBm); `power_model` converts.
struct ExperimentConfig {
  Profile profile = Profile::Desk;
  SystemDims dims;

  double bs_static_dbw = 9.0;
  double amplifier = 1.2;
  double bs_phase_shifter_dbm = 1.0;
  double ris_element_dbm = 1.0;
  double ue_static_dbm = 5.0;
  double ue_receive_dbm = 5.0;
  double p_max_dbm = 40.0;
  double noise_dbm = -37.0;
  double bandwidth_hz = 200e6;

  double rho = 0.75;
  double weight_min = 1.0;
  double weight_max = 5.0;

  Vec3 bs{0.0, 0.0, 10.0};
  Vec3 ris{15.0, -15.0, 5.0};
  Vec3 ue_min{15.0, -15.0, 0.0};
  Vec3 ue_max{30.0, 15.0, 2.0};
  PathStatistics paths;

  double beta = 0.2;
  ErrorSampling error_sampling = ErrorSampling::UniformBall;
  int true_draws = 20;  // error matrices averaged for the true EE

  PddState pdd;

  int trials = 50;
  int starts = 5;
  int convergence_starts = 8;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  std::vector<double> rho_grid{0.25, 0.5, 0.75, 1.0};
  std::vector<double> beta_grid{0.0, 0.05, 0.1, 0.2};
  std::vector<double> pmax_grid_dbm{20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0};
  std::vector<double> nris_grid{4, 16, 64, 256};
  double nris_ris_element_dbm = 10.0;

  static ExperimentConfig defaults(Profile profile);
  /// Throws std::invalid_argument on any inconsistency.
  void validate() const;
  const std::vector<double>& grid(SweepAxis axis) const;
};

/// Parses a JSON document over the defaults of `profile` (or of the
/// document's own "profile" key when `profile` is empty). Unknown keys and a
/// mismatched schema_version are errors.
ExperimentConfig parse_config(const std::string& json_text,
                              std::optional<Profile> profile = std::nullopt);
ExperimentConfig load_config(const std::string& path, std::optional<Profile> profile = std::nullopt);
/// Canonical JSON (sorted keys, fixed number formatting).
std::string config_to_json(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

Profile parse_profile(const std::string& name);
std::string profile_name(Profile p);
SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);
GammaUpdate parse_gamma_mode(const std::string& name);

/// Power model in SI units (bandwidth in Hz).
PowerModel power_model(const ExperimentConfig& cfg);
/// Same model with the bandwidth in MHz, so EE values come out in Mbit/J.
/// The solver works in these units.
PowerModel solver_power_model(const ExperimentConfig& cfg);

/// The random ingredients of one Monte Carlo trial.
struct TrialSetup {
  std::uint64_t seed = 0;
  Geometry geometry;
  FairnessSpec fairness;
  ChannelRealization channel;      // true channel with its estimate and error radius
  std::uint64_t solve_seed = 0;
  std::vector<ChannelRealization> draws;  // channels the true EE is averaged over
};

/// Deterministic in (cfg.seed, index).
TrialSetup make_trial(const ExperimentConfig& cfg, int index);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double ee_lb = kNaN;            // Mbit/J
  double true_ee = kNaN;          // Mbit/J, averaged over the error draws
  double perfect_csi_ee = kNaN;   // Mbit/J, design that ignores the error
  double jain = kNaN;
  bool constraint_met = false;
  bool converged = false;
  int iterations = 0;
  int outer_rounds = 0;
  int best_start = 0;
  double wall_seconds = 0.0;      // not written to CSV
};

struct Aggregate {
  int ok = 0;
  int failed = 0;
  double mean_ee = kNaN;
  double se_ee = kNaN;
  double mean_true_ee = kNaN;
  double mean_perfect_csi_ee = kNaN;
  double mean_jain = kNaN;
  double satisfaction_rate = kNaN;
  int unmet = 0;
};

Aggregate aggregate(const std::vector<TrialResult>& trials);

struct TrialSet {
  std::vector<TrialResult> trials;  // by index
  Aggregate summary;
};

/// One multistart solve per trial on a fresh geometry, weights, channel and
/// CSI error. With `perfect_csi`, also solves with the error radius zeroed
/// and reports the true EE of that design. Trials run on a worker pool;
/// failures are recorded per trial.
TrialResult run_trial(const ExperimentConfig& cfg, int index, bool perfect_csi);
TrialSet run_trials(const ExperimentConfig& cfg, bool perfect_csi = false);

/// Configuration for one grid point of a sweep. A rho below 1/K is raised to
/// 1/K (both leave the constraint vacuous); an N_RIS value n uses the most
/// square rows x cols factorisation and the sweep's RIS element power.
ExperimentConfig sweep_point(const ExperimentConfig& cfg, SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  Aggregate summary;
  std::vector<TrialResult> trials;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::Rho;
  std::vector<SweepRow> rows;
};

/// The beta axis also solves the perfect-CSI design at every point.
SweepTable sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& grid);
SweepTable sweep(const ExperimentConfig& cfg, SweepAxis axis);

struct ConvergenceReport {
  std::vector<SolveResult> runs;  // by start index, on trial 0's channel
};

ConvergenceReport convergence_report(const ExperimentConfig& cfg, int starts);

// CSV writers. Column orders are fixed; see the README.
void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials);
void write_sweep_csv(std::ostream& os, const SweepTable& table);
/// Per-trial rows of a sweep, prefixed with the axis value.
void write_sweep_trials_csv(std::ostream& os, const SweepTable& table);
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);
/// Provenance: schema version, command, seed, config hash, the canonical
/// config and the output file names.
void write_sidecar(std::ostream& os, const ExperimentConfig& cfg, const std::string& command,
                   const std::vector<std::string>& outputs);

/// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& text);
/// Round-trip exact decimal ("%.17g"); empty for NaN.
std::string csv_number(double value);

}  // namespace risee
