#include "risee/objectives.hpp"

#include "risee/units.hpp"

#include <cmath>
#include <stdexcept>

namespace risee {

namespace {

// Columns are A d_j for every stream.
Eigen::MatrixXcd hybrid_precoders(const DesignVariables& vars, int antennas_per_subarray) {
  Eigen::MatrixXcd f(vars.a.size(), vars.D.cols());
  for (Eigen::Index j = 0; j < vars.D.cols(); ++j) {
    f.col(j) = hybrid_precoder(vars.a, vars.D.col(j), antennas_per_subarray);
  }
  return f;
}

}  // namespace

void DesignVariables::check_shapes(const SystemDims& dims) const {
  const int s = dims.total_streams();
  if (D.rows() != dims.rf_chains || D.cols() != s || a.size() != dims.bs_antennas() ||
      theta.size() != dims.ris_elements() || C.rows() != dims.ue_antennas || C.cols() != s) {
    throw std::invalid_argument("DesignVariables: shape does not match SystemDims");
  }
  if (!(mu >= 0.0)) throw std::invalid_argument("DesignVariables: mu must be >= 0");
}

PowerModel PowerModel::defaults(int users) {
  PowerModel pm;
  pm.bs_static = dbw_to_watt(9.0);
  pm.amplifier = 1.2;
  pm.bs_phase_shifter = dbm_to_watt(1.0);
  pm.ris_element = dbm_to_watt(1.0);
  pm.ue_static.assign(users, dbm_to_watt(5.0));
  pm.ue_receive.assign(users, dbm_to_watt(5.0));
  pm.p_max = dbm_to_watt(40.0);
  pm.noise = dbm_to_watt(-37.0);
  pm.bandwidth = 200e6;
  return pm;
}

void PowerModel::validate(int users) const {
  if (static_cast<int>(ue_static.size()) != users || static_cast<int>(ue_receive.size()) != users) {
    throw std::invalid_argument("PowerModel: per-user constants must have K entries");
  }
  auto bad = [](double x) { return !(x >= 0.0) || !std::isfinite(x); };
  if (bad(bs_static) || bad(bs_phase_shifter) || bad(ris_element) || bad(p_max) || bad(noise) ||
      bad(bandwidth)) {
    throw std::invalid_argument("PowerModel: constants must be finite and nonnegative");
  }
  for (double x : ue_static) {
    if (bad(x)) throw std::invalid_argument("PowerModel: negative UE power");
  }
  for (double x : ue_receive) {
    if (bad(x)) throw std::invalid_argument("PowerModel: negative UE receive power");
  }
  if (!(amplifier >= 1.0)) throw std::invalid_argument("PowerModel: amplifier factor must be >= 1");
}

void FairnessSpec::validate(int users) const {
  if (static_cast<int>(weights.size()) != users) {
    throw std::invalid_argument("FairnessSpec: one weight per user required");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("FairnessSpec: weights must be positive");
  }
  if (!(rho >= 1.0 / users - 1e-12 && rho <= 1.0)) {
    throw std::invalid_argument("FairnessSpec: rho must lie in [1/K, 1]");
  }
}

Eigen::VectorXcd hybrid_precoder(const Eigen::VectorXcd& a, const Eigen::VectorXcd& d,
                                 int antennas_per_subarray) {
  Eigen::VectorXcd f(a.size());
  for (Eigen::Index m = 0; m < d.size(); ++m) {
    f.segment(m * antennas_per_subarray, antennas_per_subarray) =
        d(m) * a.segment(m * antennas_per_subarray, antennas_per_subarray);
  }
  return f;
}

RateTerms evaluate_rate_terms(const DesignVariables& vars, const ChannelRealization& ch,
                              double noise) {
  const SystemDims& dims = ch.dims;
  const int users = dims.users;
  const int per_user = dims.streams_per_user;
  const int streams = dims.total_streams();
  const double sqrt_n = std::sqrt(static_cast<double>(dims.ris_elements()));

  RateTerms t;
  t.noise = noise;
  t.inflation.resize(users);
  t.varrho.resize(users);
  for (int k = 0; k < users; ++k) {
    const double hn = ch.estimated[k].norm();
    const double delta = ch.error_radius.empty() ? 0.0 : ch.error_radius[k];
    if (hn < delta) {
      throw std::invalid_argument("rate bound requires ||Hhat_k||_F >= delta_k");
    }
    t.inflation(k) = delta * sqrt_n;
    const double r = hn > 0.0 ? 1.0 - delta / hn : 1.0;
    t.varrho(k) = r * r;
  }

  const Eigen::MatrixXcd f = hybrid_precoders(vars, dims.antennas_per_subarray);
  t.precoder_norm = vars.D.colwise().norm().transpose();
  t.coupling.resize(streams, streams);
  t.channel.resize(users);
  for (int k = 0; k < users; ++k) {
    t.channel[k] = devectorize(ch.estimated[k] * vars.theta, dims.ue_antennas);
    const Eigen::MatrixXcd w = t.channel[k] * f;
    for (int l = 0; l < per_user; ++l) {
      const int s = k * per_user + l;
      t.coupling.row(s) = vars.C.col(s).adjoint() * w;
    }
  }

  t.interference.resize(streams);
  t.rate.resize(streams);
  for (int s = 0; s < streams; ++s) {
    const int k = s / per_user;
    double interf = 0.0;
    for (int j = 0; j < streams; ++j) {
      if (j == s) continue;
      const double amp = std::abs(t.coupling(s, j)) + t.inflation(k) * t.precoder_norm(j);
      interf += amp * amp;
    }
    t.interference(s) = interf;
    const double signal = t.varrho(k) * std::norm(t.coupling(s, s));
    t.rate(s) = std::log2(1.0 + signal / (interf + noise));
  }
  return t;
}

double true_rate(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm,
                 int user, int stream, const std::optional<Eigen::VectorXcd>& combiner) {
  const SystemDims& dims = ch.dims;
  if (user < 0 || user >= dims.users || stream < 0 || stream >= dims.streams_per_user) {
    throw std::out_of_range("true_rate: stream index");
  }
  const int s = user * dims.streams_per_user + stream;
  const Eigen::VectorXcd c = combiner ? *combiner : Eigen::VectorXcd(vars.C.col(s));
  const double cn2 = c.squaredNorm();
  if (!(cn2 > 0.0)) throw std::invalid_argument("true_rate: zero combiner");

  const Eigen::MatrixXcd g = devectorize(ch.cascaded[user] * vars.theta, dims.ue_antennas);
  const Eigen::RowVectorXcd row = c.adjoint() * g;
  double signal = 0.0;
  double interf = 0.0;
  for (Eigen::Index j = 0; j < vars.D.cols(); ++j) {
    const cd u = row * hybrid_precoder(vars.a, vars.D.col(j), dims.antennas_per_subarray);
    (j == s ? signal : interf) += std::norm(u);
  }
  return std::log2(1.0 + signal / (interf + cn2 * pm.noise));
}

Eigen::VectorXd true_rates(const DesignVariables& vars, const ChannelRealization& ch,
                           const PowerModel& pm) {
  const int per_user = ch.dims.streams_per_user;
  Eigen::VectorXd r(ch.dims.total_streams());
  for (int s = 0; s < r.size(); ++s) r(s) = true_rate(vars, ch, pm, s / per_user, s % per_user);
  return r;
}

double robust_rate_lb(const DesignVariables& vars, const ChannelRealization& ch,
                      const PowerModel& pm, int user, int stream) {
  if (user < 0 || user >= ch.dims.users || stream < 0 || stream >= ch.dims.streams_per_user) {
    throw std::out_of_range("robust_rate_lb: stream index");
  }
  return evaluate_rate_terms(vars, ch, pm.noise).rate(user * ch.dims.streams_per_user + stream);
}

Eigen::VectorXd robust_rates(const DesignVariables& vars, const ChannelRealization& ch,
                             const PowerModel& pm) {
  return evaluate_rate_terms(vars, ch, pm.noise).rate;
}

double sum_rate_lb(const DesignVariables& vars, const ChannelRealization& ch,
                   const PowerModel& pm) {
  return robust_rates(vars, ch, pm).sum();
}

double total_power(const DesignVariables& vars, const SystemDims& dims, const PowerModel& pm) {
  double p = pm.bs_static + pm.amplifier * vars.D.squaredNorm() +
             dims.bs_antennas() * pm.bs_phase_shifter + dims.ris_elements() * pm.ris_element;
  for (int k = 0; k < dims.users; ++k) p += pm.ue_static[k] + pm.ue_receive[k];
  return p;
}

double ee_lb(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm) {
  return pm.bandwidth * sum_rate_lb(vars, ch, pm) / total_power(vars, ch.dims, pm);
}

double true_ee(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm) {
  return pm.bandwidth * true_rates(vars, ch, pm).sum() / total_power(vars, ch.dims, pm);
}

Eigen::VectorXd weighted_user_rates(const Eigen::VectorXd& stream_rates, const FairnessSpec& spec,
                                    int streams_per_user) {
  const Eigen::Index users = stream_rates.size() / streams_per_user;
  Eigen::VectorXd r(users);
  for (Eigen::Index k = 0; k < users; ++k) {
    r(k) = stream_rates.segment(k * streams_per_user, streams_per_user).sum() / spec.weights[k];
  }
  return r;
}

double jain_index(const Eigen::VectorXd& weighted_rates) {
  const double sq = weighted_rates.squaredNorm();
  if (sq == 0.0) return 1.0;
  const double s = weighted_rates.sum();
  return s * s / (static_cast<double>(weighted_rates.size()) * sq);
}

double fairness_violation(const Eigen::VectorXd& weighted_rates, double rho) {
  const double s = weighted_rates.sum();
  return rho * static_cast<double>(weighted_rates.size()) * weighted_rates.squaredNorm() - s * s;
}

double penalty_G(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm,
                 const FairnessSpec& spec) {
  const Eigen::VectorXd r =
      weighted_user_rates(robust_rates(vars, ch, pm), spec, ch.dims.streams_per_user);
  return fairness_violation(r, spec.rho) + vars.mu;
}

ObjectiveSnapshot evaluate_objectives(const DesignVariables& vars, const ChannelRealization& ch,
                                      const PowerModel& pm, const FairnessSpec& spec, double gamma,
                                      double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("augmented Lagrangian needs omega > 0");
  ObjectiveSnapshot o;
  o.terms = evaluate_rate_terms(vars, ch, pm.noise);
  o.sum_rate = o.terms.rate.sum();
  o.power = total_power(vars, ch.dims, pm);
  o.ee = pm.bandwidth * o.sum_rate / o.power;
  o.weighted = weighted_user_rates(o.terms.rate, spec, ch.dims.streams_per_user);
  o.jain = jain_index(o.weighted);
  o.violation = fairness_violation(o.weighted, spec.rho);
  o.penalty = o.violation + vars.mu;
  o.lagrangian = o.ee - gamma * o.penalty - o.penalty * o.penalty / (2.0 * omega);
  return o;
}

double augmented_lagrangian(const DesignVariables& vars, const ChannelRealization& ch,
                            const PowerModel& pm, const FairnessSpec& spec, double gamma,
                            double omega) {
  return evaluate_objectives(vars, ch, pm, spec, gamma, omega).lagrangian;
}

}  // namespace risee
