#pragma once

#include "risee/objectives.hpp"

#include <Eigen/Dense>

namespace risee {

/// Gradient convention: for a real f of complex z, grad f = 2 df/dz*, so the
/// first-order change along dz is Re(<grad f, dz>) and z + alpha grad f is an
/// ascent step. Every block gradient is returned as a column-major matrix
/// (vectors as n x 1).

enum class Block { Digital, Analog, Reflection, Combiner };

/// Ratios that divide by |coupling| or ||d|| use this floor.
inline constexpr double kGuardFloor = 1e-12;

struct BlockGradient {
  Eigen::MatrixXcd value;
  int guard_hits = 0;
};

/// sum_s weights(s) * grad R_s, with R_s the lower-bound rate of stream s,
/// evaluated from precomputed rate terms at `vars`.
BlockGradient weighted_rate_gradient(const DesignVariables& vars, const ChannelRealization& ch,
                                     const RateTerms& terms, const Eigen::VectorXd& weights,
                                     Block block);

BlockGradient grad_rate_wrt_D(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, int user, int stream);
BlockGradient grad_rate_wrt_a(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, int user, int stream);
BlockGradient grad_rate_wrt_theta(const DesignVariables& vars, const ChannelRealization& ch,
                                  const PowerModel& pm, int user, int stream);
/// Only column k*L+l is nonzero.
BlockGradient grad_rate_wrt_C(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, int user, int stream);

/// dG/dR_s = 2 rho K r_k / w_k - 2 (sum_i r_i) / w_k for every stream s of user k.
Eigen::VectorXd penalty_rate_sensitivity(const Eigen::VectorXd& weighted_rates,
                                         const FairnessSpec& spec, int streams_per_user);

BlockGradient grad_penalty(const DesignVariables& vars, const ChannelRealization& ch,
                           const PowerModel& pm, const FairnessSpec& spec, Block block);

/// grad H = grad eta - gamma grad G - (G / omega) grad G, where for the
/// digital block grad eta includes the quotient term -R_sum 2 xi D / P^2.
BlockGradient grad_lagrangian(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, const FairnessSpec& spec, double gamma,
                              double omega, Block block);

/// Same, reusing an objective snapshot evaluated at `vars` with the same
/// gamma and omega.
BlockGradient grad_lagrangian(const ObjectiveSnapshot& snapshot, const DesignVariables& vars,
                              const ChannelRealization& ch, const PowerModel& pm,
                              const FairnessSpec& spec, double gamma, double omega, Block block);

struct GradientBundle {
  Eigen::MatrixXcd gD;
  Eigen::VectorXcd ga;
  Eigen::VectorXcd gtheta;
  Eigen::MatrixXcd gC;
};

GradientBundle lagrangian_gradients(const DesignVariables& vars, const ChannelRealization& ch,
                                    const PowerModel& pm, const FairnessSpec& spec, double gamma,
                                    double omega);

}  // namespace risee
