#pragma once

#include "risee/channel_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace risee {

/// The optimisation blocks. Stream s = k * L + l owns column s of D and C.
struct DesignVariables {
  Eigen::MatrixXcd D;      // M x KL digital precoder
  Eigen::VectorXcd a;      // M N_T stacked analog precoder, block m is a_m
  Eigen::VectorXcd theta;  // N_RIS reflection coefficients
  Eigen::MatrixXcd C;      // N_R x KL unit-norm combiners
  double mu = 0.0;         // fairness slack

  /// Throws std::invalid_argument on a shape mismatch with `dims`.
  void check_shapes(const SystemDims& dims) const;
};

/// Power consumption constants, all in watts except the unitless amplifier
/// factor and the bandwidth in Hz.
struct PowerModel {
  double bs_static = 0.0;
  double amplifier = 1.0;
  double bs_phase_shifter = 0.0;
  double ris_element = 0.0;
  std::vector<double> ue_static;
  std::vector<double> ue_receive;
  double p_max = 1.0;
  double noise = 1.0;
  double bandwidth = 1.0;

  /// Table defaults: P_BS = 9 dBW, xi = 1.2, P_RF,T = P_theta = 1 dBm,
  /// P_UE = P_R = 5 dBm, P_max = 40 dBm, sigma^2 = -37 dBm, 200 MHz.
  static PowerModel defaults(int users);
  void validate(int users) const;
};

struct FairnessSpec {
  double rho = 0.75;
  std::vector<double> weights;  // w_k > 0

  void validate(int users) const;
};

/// Hybrid precoding vector A d for the array-of-subarrays layout.
Eigen::VectorXcd hybrid_precoder(const Eigen::VectorXcd& a, const Eigen::VectorXcd& d,
                                 int antennas_per_subarray);

/// Quantities shared by every lower-bound rate at one design point.
///
/// `coupling(s, j)` is c_s^H Ghat_k(s) A d_j; the rate of stream s is
/// log2(1 + signal_s / (interference_s + sigma^2)) with
/// signal_s = varrho_k |coupling(s,s)|^2 and
/// interference_s = sum_{j != s} (|coupling(s,j)| + inflation_k ||d_j||)^2.
struct RateTerms {
  std::vector<Eigen::MatrixXcd> channel;  // Ghat_k, N_R x M N_T
  Eigen::MatrixXcd coupling;
  Eigen::VectorXd precoder_norm;  // ||d_j||
  Eigen::VectorXd inflation;      // delta_k sqrt(N_RIS), per user
  Eigen::VectorXd varrho;         // (1 - delta_k / ||Hhat_k||_F)^2, per user
  Eigen::VectorXd interference;   // per stream, excludes noise
  Eigen::VectorXd rate;           // per stream, bits/s/Hz
  double noise = 0.0;
};

/// Throws std::invalid_argument if some ||Hhat_k||_F < delta_k.
RateTerms evaluate_rate_terms(const DesignVariables& vars, const ChannelRealization& ch,
                              double noise);

/// Rate of stream (k, l) on the true channel with an arbitrary nonzero
/// combiner (defaults to column k*L+l of vars.C).
double true_rate(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm,
                 int user, int stream,
                 const std::optional<Eigen::VectorXcd>& combiner = std::nullopt);
Eigen::VectorXd true_rates(const DesignVariables& vars, const ChannelRealization& ch,
                           const PowerModel& pm);

double robust_rate_lb(const DesignVariables& vars, const ChannelRealization& ch,
                      const PowerModel& pm, int user, int stream);
Eigen::VectorXd robust_rates(const DesignVariables& vars, const ChannelRealization& ch,
                             const PowerModel& pm);
double sum_rate_lb(const DesignVariables& vars, const ChannelRealization& ch,
                   const PowerModel& pm);

double total_power(const DesignVariables& vars, const SystemDims& dims, const PowerModel& pm);

/// bandwidth * sum_rate_lb / total_power, in bit/J.
double ee_lb(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm);

/// Same ratio on the true channel.
double true_ee(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm);

/// r_k = (1 / w_k) sum_l R_{k,l}.
Eigen::VectorXd weighted_user_rates(const Eigen::VectorXd& stream_rates, const FairnessSpec& spec,
                                    int streams_per_user);

/// (sum r)^2 / (K sum r^2). The all-zero vector is defined to be perfectly
/// fair (index 1).
double jain_index(const Eigen::VectorXd& weighted_rates);

/// rho K sum r_k^2 - (sum r_k)^2: nonpositive iff the Jain index is >= rho.
double fairness_violation(const Eigen::VectorXd& weighted_rates, double rho);

double penalty_G(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm,
                 const FairnessSpec& spec);

/// ee_lb - gamma G - G^2 / (2 omega). Throws for omega <= 0.
double augmented_lagrangian(const DesignVariables& vars, const ChannelRealization& ch,
                            const PowerModel& pm, const FairnessSpec& spec, double gamma,
                            double omega);

/// Everything the solver tracks, evaluated from a single RateTerms pass.
struct ObjectiveSnapshot {
  RateTerms terms;
  double sum_rate = 0.0;
  double power = 0.0;
  double ee = 0.0;
  Eigen::VectorXd weighted;
  double jain = 1.0;
  double violation = 0.0;
  double penalty = 0.0;
  double lagrangian = 0.0;
};

ObjectiveSnapshot evaluate_objectives(const DesignVariables& vars, const ChannelRealization& ch,
                                      const PowerModel& pm, const FairnessSpec& spec, double gamma,
                                      double omega);

}  // namespace risee
