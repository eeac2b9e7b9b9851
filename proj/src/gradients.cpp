#include "risee/gradients.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace risee {

namespace {

constexpr double kTwoOverLn2 = 2.0 / std::numbers::ln2;

int stream_index(const SystemDims& dims, int user, int stream) {
  if (user < 0 || user >= dims.users || stream < 0 || stream >= dims.streams_per_user) {
    throw std::out_of_range("stream index");
  }
  return user * dims.streams_per_user + stream;
}

Eigen::VectorXd unit_weight(const SystemDims& dims, int s) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dims.total_streams());
  w(s) = 1.0;
  return w;
}

}  // namespace

BlockGradient weighted_rate_gradient(const DesignVariables& vars, const ChannelRealization& ch,
                                     const RateTerms& terms, const Eigen::VectorXd& weights,
                                     Block block) {
  const SystemDims& dims = ch.dims;
  const int streams = dims.total_streams();
  const int per_user = dims.streams_per_user;
  const int nt = dims.antennas_per_subarray;
  const bool conj_coupling = block == Block::Combiner;

  BlockGradient out;
  switch (block) {
    case Block::Digital:
      out.value = Eigen::MatrixXcd::Zero(vars.D.rows(), vars.D.cols());
      break;
    case Block::Analog:
      out.value = Eigen::MatrixXcd::Zero(vars.a.size(), 1);
      break;
    case Block::Reflection:
      out.value = Eigen::MatrixXcd::Zero(vars.theta.size(), 1);
      break;
    case Block::Combiner:
      out.value = Eigen::MatrixXcd::Zero(vars.C.rows(), vars.C.cols());
      break;
  }

  Eigen::MatrixXcd hybrid;
  if (block == Block::Reflection || block == Block::Combiner) {
    hybrid.resize(vars.a.size(), streams);
    for (int j = 0; j < streams; ++j) hybrid.col(j) = hybrid_precoder(vars.a, vars.D.col(j), nt);
  }

  Eigen::RowVectorXcd coef(streams);
  for (int s = 0; s < streams; ++s) {
    if (weights(s) == 0.0) continue;
    const int k = s / per_user;
    const double infl = terms.inflation(k);
    const double signal = terms.varrho(k) * std::norm(terms.coupling(s, s));
    const double den_interf = terms.interference(s) + terms.noise;
    const double den_total = signal + den_interf;
    const double scale = kTwoOverLn2 * weights(s);
    const double cross = scale * (1.0 / den_total - 1.0 / den_interf);

    // coef(j) multiplies the vector x_sj for which coupling(s, j) = x_sj^H z
    // (conjugated coupling for the combiner block).
    for (int j = 0; j < streams; ++j) {
      const cd u = conj_coupling ? std::conj(terms.coupling(s, j)) : terms.coupling(s, j);
      if (j == s) {
        coef(j) = scale * terms.varrho(k) / den_total * u;
        continue;
      }
      double ratio = 0.0;
      if (infl > 0.0) {
        double mag = std::abs(u);
        if (mag < kGuardFloor) {
          mag = kGuardFloor;
          ++out.guard_hits;
        }
        ratio = infl * terms.precoder_norm(j) / mag;
      }
      coef(j) = cross * (1.0 + ratio) * u;

      // ||d_j|| enters the inflation term, which only depends on D.
      if (block == Block::Digital && infl > 0.0) {
        double dn = terms.precoder_norm(j);
        if (dn < kGuardFloor) {
          dn = kGuardFloor;
          ++out.guard_hits;
        }
        const double g = cross * (infl * std::abs(terms.coupling(s, j)) / dn + infl * infl);
        out.value.col(j) += g * vars.D.col(j);
      }
    }

    const Eigen::MatrixXcd& gk = terms.channel[k];
    switch (block) {
      case Block::Digital: {
        // b_s = A^H Ghat_k^H c_s
        const Eigen::VectorXcd h = gk.adjoint() * vars.C.col(s);
        Eigen::VectorXcd b(dims.rf_chains);
        for (int m = 0; m < dims.rf_chains; ++m) {
          b(m) = vars.a.segment(m * nt, nt).dot(h.segment(m * nt, nt));
        }
        out.value.noalias() += b * coef;
        break;
      }
      case Block::Analog: {
        // e_sj = Dtilde_j^H Ghat_k^H c_s, so sum_j coef_j e_sj = h .* expand(conj(D) coef^T)
        const Eigen::VectorXcd h = gk.adjoint() * vars.C.col(s);
        const Eigen::VectorXcd v = vars.D.conjugate() * coef.transpose();
        for (int m = 0; m < dims.rf_chains; ++m) {
          out.value.col(0).segment(m * nt, nt) += v(m) * h.segment(m * nt, nt);
        }
        break;
      }
      case Block::Reflection: {
        // f_sj = Hhat_k^H kron(conj(A d_j), c_s)
        const Eigen::VectorXcd z = hybrid.conjugate() * coef.transpose();
        const int nr = dims.ue_antennas;
        Eigen::VectorXcd w(z.size() * nr);
        for (Eigen::Index p = 0; p < z.size(); ++p) w.segment(p * nr, nr) = z(p) * vars.C.col(s);
        out.value.col(0).noalias() += ch.estimated[k].adjoint() * w;
        break;
      }
      case Block::Combiner: {
        // J_kj = Ghat_k A d_j
        out.value.col(s).noalias() += gk * (hybrid * coef.transpose());
        break;
      }
    }
  }
  return out;
}

BlockGradient grad_rate_wrt_D(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, int user, int stream) {
  const int s = stream_index(ch.dims, user, stream);
  return weighted_rate_gradient(vars, ch, evaluate_rate_terms(vars, ch, pm.noise),
                                unit_weight(ch.dims, s), Block::Digital);
}

BlockGradient grad_rate_wrt_a(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, int user, int stream) {
  const int s = stream_index(ch.dims, user, stream);
  return weighted_rate_gradient(vars, ch, evaluate_rate_terms(vars, ch, pm.noise),
                                unit_weight(ch.dims, s), Block::Analog);
}

BlockGradient grad_rate_wrt_theta(const DesignVariables& vars, const ChannelRealization& ch,
                                  const PowerModel& pm, int user, int stream) {
  const int s = stream_index(ch.dims, user, stream);
  return weighted_rate_gradient(vars, ch, evaluate_rate_terms(vars, ch, pm.noise),
                                unit_weight(ch.dims, s), Block::Reflection);
}

BlockGradient grad_rate_wrt_C(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, int user, int stream) {
  const int s = stream_index(ch.dims, user, stream);
  return weighted_rate_gradient(vars, ch, evaluate_rate_terms(vars, ch, pm.noise),
                                unit_weight(ch.dims, s), Block::Combiner);
}

Eigen::VectorXd penalty_rate_sensitivity(const Eigen::VectorXd& weighted_rates,
                                         const FairnessSpec& spec, int streams_per_user) {
  const Eigen::Index users = weighted_rates.size();
  const double total = weighted_rates.sum();
  const double rho_k = spec.rho * static_cast<double>(users);
  Eigen::VectorXd out(users * streams_per_user);
  for (Eigen::Index k = 0; k < users; ++k) {
    const double v = 2.0 * (rho_k * weighted_rates(k) - total) / spec.weights[k];
    out.segment(k * streams_per_user, streams_per_user).setConstant(v);
  }
  return out;
}

BlockGradient grad_penalty(const DesignVariables& vars, const ChannelRealization& ch,
                           const PowerModel& pm, const FairnessSpec& spec, Block block) {
  const RateTerms terms = evaluate_rate_terms(vars, ch, pm.noise);
  const Eigen::VectorXd r = weighted_user_rates(terms.rate, spec, ch.dims.streams_per_user);
  return weighted_rate_gradient(vars, ch, terms,
                                penalty_rate_sensitivity(r, spec, ch.dims.streams_per_user), block);
}

BlockGradient grad_lagrangian(const ObjectiveSnapshot& snap, const DesignVariables& vars,
                              const ChannelRealization& ch, const PowerModel& pm,
                              const FairnessSpec& spec, double gamma, double omega, Block block) {
  if (!(omega > 0.0)) throw std::invalid_argument("grad_lagrangian: omega must be > 0");
  const Eigen::VectorXd dg = penalty_rate_sensitivity(snap.weighted, spec, ch.dims.streams_per_user);
  const double penalty_scale = gamma + snap.penalty / omega;
  const Eigen::VectorXd weights =
      Eigen::VectorXd::Constant(dg.size(), pm.bandwidth / snap.power) - penalty_scale * dg;
  BlockGradient g = weighted_rate_gradient(vars, ch, snap.terms, weights, block);
  if (block == Block::Digital) {
    g.value -= (pm.bandwidth * snap.sum_rate * 2.0 * pm.amplifier / (snap.power * snap.power)) *
               vars.D;
  }
  return g;
}

BlockGradient grad_lagrangian(const DesignVariables& vars, const ChannelRealization& ch,
                              const PowerModel& pm, const FairnessSpec& spec, double gamma,
                              double omega, Block block) {
  const ObjectiveSnapshot snap = evaluate_objectives(vars, ch, pm, spec, gamma, omega);
  return grad_lagrangian(snap, vars, ch, pm, spec, gamma, omega, block);
}

GradientBundle lagrangian_gradients(const DesignVariables& vars, const ChannelRealization& ch,
                                    const PowerModel& pm, const FairnessSpec& spec, double gamma,
                                    double omega) {
  const ObjectiveSnapshot snap = evaluate_objectives(vars, ch, pm, spec, gamma, omega);
  GradientBundle b;
  b.gD = grad_lagrangian(snap, vars, ch, pm, spec, gamma, omega, Block::Digital).value;
  b.ga = grad_lagrangian(snap, vars, ch, pm, spec, gamma, omega, Block::Analog).value.col(0);
  b.gtheta = grad_lagrangian(snap, vars, ch, pm, spec, gamma, omega, Block::Reflection).value.col(0);
  b.gC = grad_lagrangian(snap, vars, ch, pm, spec, gamma, omega, Block::Combiner).value;
  return b;
}

}  // namespace risee
