#include "risee/verification.hpp"

#include "risee/solver.hpp"
#include "risee/units.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace risee {

namespace {

Eigen::MatrixXcd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cd(normal(rng), normal(rng));
  }
  return m;
}

std::string describe(const SystemDims& d, double beta, std::uint64_t seed) {
  std::ostringstream os;
  os << "K=" << d.users << ",L=" << d.streams_per_user << ",M=" << d.rf_chains
     << ",N_T=" << d.antennas_per_subarray << ",N_RIS=" << d.ris_elements()
     << ",N_R=" << d.ue_antennas << ",beta=" << beta << ",seed=" << seed;
  return os.str();
}

DesignVariables perturbed(const DesignVariables& v, Block block, const Eigen::MatrixXcd& dz) {
  DesignVariables out = v;
  switch (block) {
    case Block::Digital:
      out.D += dz;
      break;
    case Block::Analog:
      out.a += dz.col(0);
      break;
    case Block::Reflection:
      out.theta += dz.col(0);
      break;
    case Block::Combiner:
      out.C += dz;
      break;
  }
  return out;
}

double target_value(const OracleInstance& in, const GradientCheckOptions& opt,
                    const DesignVariables& v) {
  switch (opt.target) {
    case GradientTarget::StreamRate:
      return robust_rate_lb(v, in.channel, in.power, opt.user, opt.stream);
    case GradientTarget::Penalty:
      return penalty_G(v, in.channel, in.power, in.fairness);
    case GradientTarget::Lagrangian:
      return augmented_lagrangian(v, in.channel, in.power, in.fairness, opt.gamma, opt.omega);
  }
  return 0.0;
}

BlockGradient target_gradient(const OracleInstance& in, const GradientCheckOptions& opt) {
  const auto& v = in.vars;
  switch (opt.target) {
    case GradientTarget::StreamRate:
      switch (opt.block) {
        case Block::Digital:
          return grad_rate_wrt_D(v, in.channel, in.power, opt.user, opt.stream);
        case Block::Analog:
          return grad_rate_wrt_a(v, in.channel, in.power, opt.user, opt.stream);
        case Block::Reflection:
          return grad_rate_wrt_theta(v, in.channel, in.power, opt.user, opt.stream);
        case Block::Combiner:
          return grad_rate_wrt_C(v, in.channel, in.power, opt.user, opt.stream);
      }
      break;
    case GradientTarget::Penalty:
      return grad_penalty(v, in.channel, in.power, in.fairness, opt.block);
    case GradientTarget::Lagrangian:
      return grad_lagrangian(v, in.channel, in.power, in.fairness, opt.gamma, opt.omega,
                             opt.block);
  }
  return {};
}

const char* target_name(GradientTarget t) {
  switch (t) {
    case GradientTarget::StreamRate:
      return "rate";
    case GradientTarget::Penalty:
      return "penalty";
    case GradientTarget::Lagrangian:
      return "lagrangian";
  }
  return "?";
}

const char* block_name(Block b) {
  switch (b) {
    case Block::Digital:
      return "D";
    case Block::Analog:
      return "a";
    case Block::Reflection:
      return "theta";
    case Block::Combiner:
      return "C";
  }
  return "?";
}

double min_coupling(const OracleInstance& in) {
  const RateTerms t = evaluate_rate_terms(in.vars, in.channel, in.power.noise);
  return t.coupling.cwiseAbs().minCoeff();
}

}  // namespace

std::string OracleReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS " : "FAIL ") << name << " [" << instance << "] max_rel_error="
     << std::setprecision(3) << std::scientific << max_rel_error << " tol=" << tolerance
     << " samples=" << samples;
  if (resamples > 0) os << " resamples=" << resamples;
  if (!pass && !witness.empty()) os << " witness: " << witness;
  return os.str();
}

OracleInstance random_oracle_instance(const SystemDims& dims, double beta, std::uint64_t seed) {
  dims.validate();
  std::mt19937_64 rng(seed);
  OracleInstance in;
  Eigen::MatrixXcd ht = gaussian(dims.ris_elements(), dims.bs_antennas(), rng);
  std::vector<Eigen::MatrixXcd> hr;
  for (int k = 0; k < dims.users; ++k) hr.push_back(gaussian(dims.ue_antennas, dims.ris_elements(), rng));
  in.channel = assemble_channels(dims, std::move(ht), std::move(hr));
  if (beta > 0.0) in.channel = apply_csi_error(in.channel, beta, rng());

  in.power.bs_static = 1.0;
  in.power.amplifier = 1.2;
  in.power.bs_phase_shifter = 0.01;
  in.power.ris_element = 0.01;
  in.power.ue_static.assign(dims.users, 0.05);
  in.power.ue_receive.assign(dims.users, 0.05);
  in.power.p_max = 2.0;
  in.power.noise = 1.0;
  in.power.bandwidth = 1.0;

  std::uniform_real_distribution<double> weight(1.0, 5.0);
  in.fairness.rho = 0.75;
  for (int k = 0; k < dims.users; ++k) in.fairness.weights.push_back(weight(rng));
  if (in.fairness.rho < 1.0 / dims.users) in.fairness.rho = 1.0 / dims.users;

  in.vars = random_feasible_point(dims, in.power, rng());
  in.vars.D *= 0.8;  // strictly inside the power ball
  in.vars.mu = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
  in.descriptor = describe(dims, beta, seed);
  return in;
}

OracleReport fd_gradient_check(const OracleInstance& in, const GradientCheckOptions& opt) {
  OracleReport rep;
  rep.name = std::string("fd_gradient/") + target_name(opt.target) + "/" + block_name(opt.block);
  rep.instance = in.descriptor;
  rep.tolerance = opt.tolerance;

  BlockGradient g = target_gradient(in, opt);
  if (opt.corrupt) opt.corrupt(g.value);
  const double gnorm = g.value.norm();

  std::mt19937_64 rng(opt.seed);
  const double h = opt.step;
  for (int d = 0; d < opt.directions; ++d) {
    Eigen::MatrixXcd z = gaussian(g.value.rows(), g.value.cols(), rng);
    z /= z.norm();
    for (int part = 0; part < 2; ++part) {
      const Eigen::MatrixXcd dir = part == 0 ? z : Eigen::MatrixXcd(cd(0.0, 1.0) * z);
      const double fp = target_value(in, opt, perturbed(in.vars, opt.block, h * dir));
      const double fm = target_value(in, opt, perturbed(in.vars, opt.block, -h * dir));
      const double fd = (fp - fm) / (2.0 * h);
      const double an = (g.value.array().conjugate() * dir.array()).sum().real();
      const double err = std::abs(fd - an) / (std::max(std::abs(fd), std::abs(an)) + 1e-3 * gnorm);
      ++rep.samples;
      if (err > rep.max_rel_error || !std::isfinite(err)) {
        rep.max_rel_error = std::isfinite(err) ? err : INFINITY;
        std::ostringstream os;
        os << "direction " << d << (part == 0 ? " (real)" : " (imag)") << " fd=" << fd
           << " analytic=" << an;
        rep.witness = os.str();
      }
    }
  }
  rep.pass = rep.max_rel_error <= rep.tolerance;
  return rep;
}

OracleReport fd_gradient_check_random(const SystemDims& dims, double beta, std::uint64_t seed,
                                      const GradientCheckOptions& opt, int max_retries) {
  int rejected = 0;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : mix_seed(seed, 0x9e37u + attempt);
    OracleInstance in = random_oracle_instance(dims, beta, s);
    const BlockGradient probe = target_gradient(in, opt);
    if (probe.guard_hits > 0 || min_coupling(in) < 1e-6) {
      ++rejected;
      continue;
    }
    OracleReport rep = fd_gradient_check(in, opt);
    rep.resamples = rejected;
    return rep;
  }
  throw std::runtime_error("fd_gradient_check_random: every draw hit a guard region");
}

double rate_under_error(const OracleInstance& in, int user, int stream,
                        const Eigen::MatrixXcd& delta) {
  ChannelRealization ch = in.channel;
  ch.cascaded[user] = ch.estimated[user] + delta;
  return true_rate(in.vars, ch, in.power, user, stream);
}

Eigen::MatrixXcd signal_adversary(const OracleInstance& in, int user, int stream) {
  const SystemDims& dims = in.channel.dims;
  const int s = user * dims.streams_per_user + stream;
  const Eigen::VectorXcd f = hybrid_precoder(in.vars.a, in.vars.D.col(s), dims.antennas_per_subarray);
  const Eigen::VectorXcd c = in.vars.C.col(s);
  // c^H devec(Delta theta) f = v^H Delta theta with v = kron(conj(f), c).
  Eigen::VectorXcd v(f.size() * c.size());
  for (Eigen::Index p = 0; p < f.size(); ++p) v.segment(p * c.size(), c.size()) = std::conj(f(p)) * c;
  const Eigen::MatrixXcd g = devectorize(in.channel.estimated[user] * in.vars.theta, dims.ue_antennas);
  const cd signal = c.dot(g * f);
  const cd phase = std::abs(signal) > 0.0 ? signal / std::abs(signal) : cd(1.0, 0.0);
  const double delta = in.channel.error_radius[user];
  return (-delta * phase / (v.norm() * in.vars.theta.norm())) * (v * in.vars.theta.adjoint());
}

OracleReport bound_dominance_check(const OracleInstance& in, std::size_t samples,
                                   std::uint64_t seed, double slack) {
  OracleReport rep;
  rep.name = "bound_dominance";
  rep.instance = in.descriptor;
  rep.tolerance = slack;
  rep.max_rel_error = -INFINITY;

  const SystemDims& dims = in.channel.dims;
  const Eigen::VectorXd lb = robust_rates(in.vars, in.channel, in.power);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ChannelRealization ch = in.channel;
  for (std::size_t n = 0; n < samples; ++n) {
    const int mode = static_cast<int>(n % 3);  // 0 uniform, 1 boundary, 2 closed-form worst case
    for (int k = 0; k < dims.users; ++k) {
      const Eigen::MatrixXcd& hhat = in.channel.estimated[k];
      const double delta = in.channel.error_radius[k];
      Eigen::MatrixXcd err;
      if (mode == 2) {
        err = (-delta / hhat.norm()) * hhat;
      } else {
        err = gaussian(hhat.rows(), hhat.cols(), rng);
        double radius = delta;
        if (mode == 0) radius *= std::pow(uniform(rng), 1.0 / (2.0 * static_cast<double>(hhat.size())));
        err *= radius / err.norm();
      }
      ch.cascaded[k] = hhat + err;
    }
    const Eigen::VectorXd tr = true_rates(in.vars, ch, in.power);
    ++rep.samples;
    for (Eigen::Index s = 0; s < tr.size(); ++s) {
      const double gap = lb(s) - tr(s);
      if (gap > rep.max_rel_error) {
        rep.max_rel_error = gap;
        std::ostringstream os;
        os << "sample " << n << " mode " << mode << " stream " << s << " lb=" << lb(s)
           << " true=" << tr(s);
        rep.witness = os.str();
      }
    }
  }
  rep.pass = rep.max_rel_error <= slack;
  return rep;
}

OracleReport identity_checks(std::uint64_t seed) {
  OracleReport rep;
  rep.name = "identities";
  rep.instance = "seed=" + std::to_string(seed);
  rep.tolerance = 1e-12;
  std::mt19937_64 rng(seed);

  auto note = [&](double err, const std::string& what) {
    ++rep.samples;
    if (err > rep.max_rel_error) {
      rep.max_rel_error = err;
      rep.witness = what;
    }
  };
  auto kron = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
      }
    }
    return out;
  };
  auto vec = [](const Eigen::MatrixXcd& x) {
    return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(x.data(), x.size()));
  };

  const int shapes[][4] = {{1, 1, 1, 1}, {3, 2, 2, 4}, {2, 5, 3, 2}, {4, 4, 4, 4}};
  for (const auto& sh : shapes) {
    const Eigen::MatrixXcd a = gaussian(sh[0], sh[1], rng);
    const Eigen::MatrixXcd b = gaussian(sh[1], sh[2], rng);
    const Eigen::MatrixXcd c = gaussian(sh[2], sh[3], rng);
    const Eigen::VectorXcd lhs = vec(a * b * c);
    const Eigen::VectorXcd rhs = kron(c.transpose(), a) * vec(b);
    note((lhs - rhs).norm() / std::max(lhs.norm(), 1e-300), "vec(ABC) shape " +
                                                                  std::to_string(sh[0]) + "x" +
                                                                  std::to_string(sh[3]));
  }

  SystemDims dims;
  dims.rf_chains = 2;
  dims.antennas_per_subarray = 2;
  dims.ris_rows = 2;
  dims.ris_cols = 3;
  dims.users = 2;
  dims.ue_antennas = 3;
  const Eigen::MatrixXcd ht = gaussian(dims.ris_elements(), dims.bs_antennas(), rng);
  std::vector<Eigen::MatrixXcd> hr{gaussian(dims.ue_antennas, dims.ris_elements(), rng),
                                   gaussian(dims.ue_antennas, dims.ris_elements(), rng)};
  const ChannelRealization ch = assemble_channels(dims, ht, hr);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 2; ++trial) {
    Eigen::VectorXcd theta(dims.ris_elements());
    for (Eigen::Index n = 0; n < theta.size(); ++n) {
      theta(n) = trial == 0 ? cd(1.0, 0.0) : std::polar(1.0, phase(rng));
    }
    for (int k = 0; k < dims.users; ++k) {
      Eigen::MatrixXcd direct = hr[k] * theta.asDiagonal() * ht;
      if (trial == 0) direct = hr[k] * ht;
      const Eigen::MatrixXcd via = devectorize(ch.cascaded[k] * theta, dims.ue_antennas);
      note((direct - via).norm() / direct.norm(),
           trial == 0 ? "cascaded, theta = 1" : "cascaded, random theta");
    }
  }
  rep.pass = rep.max_rel_error <= rep.tolerance;
  return rep;
}

SystemDims small_oracle_dims() {
  SystemDims d;
  d.rf_chains = 2;
  d.antennas_per_subarray = 2;
  d.ris_rows = 2;
  d.ris_cols = 2;
  d.users = 2;
  d.streams_per_user = 1;
  d.ue_antennas = 2;
  return d;
}

std::vector<OracleReport> gradient_suite(int instances, std::uint64_t seed, double beta) {
  const SystemDims dims = small_oracle_dims();
  std::vector<OracleReport> out;
  for (GradientTarget target :
       {GradientTarget::StreamRate, GradientTarget::Penalty, GradientTarget::Lagrangian}) {
    for (Block block : {Block::Digital, Block::Analog, Block::Reflection, Block::Combiner}) {
      for (int i = 0; i < instances; ++i) {
        GradientCheckOptions opt;
        opt.target = target;
        opt.block = block;
        opt.user = i % dims.users;
        opt.seed = mix_seed(seed, 1000 + static_cast<std::uint64_t>(i));
        out.push_back(fd_gradient_check_random(dims, beta, mix_seed(seed, i), opt));
      }
    }
  }
  return out;
}

std::vector<OracleReport> bound_suite(int instances, std::size_t samples, std::uint64_t seed,
                                      double beta) {
  const SystemDims dims = small_oracle_dims();
  std::vector<OracleReport> out;
  for (int i = 0; i < instances; ++i) {
    const OracleInstance in = random_oracle_instance(dims, beta, mix_seed(seed, i));
    out.push_back(bound_dominance_check(in, samples, mix_seed(seed, 5000 + i)));
  }
  return out;
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleReport>& reports) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  os << "name,instance,max_rel_error,tolerance,samples,resamples,pass,witness\r\n";
  char buf[32];
  for (const auto& r : reports) {
    os << field(r.name) << ',' << field(r.instance) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.max_rel_error);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.tolerance);
    os << buf << ',' << r.samples << ',' << r.resamples << ',' << (r.pass ? 1 : 0) << ','
       << field(r.witness) << "\r\n";
  }
}

}  // namespace risee
