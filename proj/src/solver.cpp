#include "risee/solver.hpp"

#include "risee/units.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace risee {

namespace {

constexpr std::array<Block, 4> kBlockOrder{Block::Digital, Block::Analog, Block::Reflection,
                                           Block::Combiner};

cd unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

void apply_step(DesignVariables& v, Block block, const Eigen::MatrixXcd& grad, double alpha,
                const SystemDims& dims, double p_max) {
  switch (block) {
    case Block::Digital:
      v.D = project_D(v.D + alpha * grad, p_max);
      break;
    case Block::Analog:
      v.a = project_a(v.a + alpha * grad.col(0), dims.antennas_per_subarray);
      break;
    case Block::Reflection:
      v.theta = project_theta(v.theta + alpha * grad.col(0));
      break;
    case Block::Combiner:
      v.C = project_C(v.C + alpha * grad);
      break;
  }
}

}  // namespace

void PddState::validate() const {
  if (!(omega > 0.0)) throw std::invalid_argument("PddState: omega must be > 0");
  if (!(psi > 0.0 && psi <= 1.0)) throw std::invalid_argument("PddState: psi must lie in (0, 1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("PddState: epsilon must be > 0");
  if (!(initial_step > 0.0 && max_step >= initial_step)) {
    throw std::invalid_argument("PddState: step sizes must be positive");
  }
  if (max_inner < 1 || max_outer < 1 || max_halvings < 0) {
    throw std::invalid_argument("PddState: iteration caps must be positive");
  }
}

Eigen::MatrixXcd project_D(const Eigen::MatrixXcd& d, double p_max) {
  const double n = d.norm();
  const double limit = std::sqrt(p_max);
  if (n <= limit) return d;
  return d * (limit / n);
}

Eigen::VectorXcd project_a(const Eigen::VectorXcd& a, int antennas_per_subarray) {
  const double mag = 1.0 / std::sqrt(static_cast<double>(antennas_per_subarray));
  Eigen::VectorXcd out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double r = std::abs(a(i));
    out(i) = r > 0.0 ? a(i) * (mag / r) : cd(mag, 0.0);
  }
  return out;
}

Eigen::VectorXcd project_theta(const Eigen::VectorXcd& theta) {
  Eigen::VectorXcd out(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double r = std::abs(theta(i));
    out(i) = r > 0.0 ? theta(i) / r : cd(1.0, 0.0);
  }
  return out;
}

Eigen::MatrixXcd project_C(const Eigen::MatrixXcd& c) {
  Eigen::MatrixXcd out(c.rows(), c.cols());
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const double n = c.col(j).norm();
    if (n > 0.0) {
      out.col(j) = c.col(j) / n;
    } else {
      out.col(j).setZero();
      out(0, j) = 1.0;
    }
  }
  return out;
}

double update_mu(const Eigen::VectorXd& weighted_rates, double rho, double gamma, double omega) {
  return std::max(0.0, -fairness_violation(weighted_rates, rho) - gamma * omega);
}

double update_mu(const DesignVariables& vars, const ChannelRealization& ch, const PowerModel& pm,
                 const FairnessSpec& spec, double gamma, double omega) {
  const Eigen::VectorXd r =
      weighted_user_rates(robust_rates(vars, ch, pm), spec, ch.dims.streams_per_user);
  return update_mu(r, spec.rho, gamma, omega);
}

DesignVariables random_feasible_point(const SystemDims& dims, const PowerModel& pm,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cd(normal(rng), normal(rng));
    }
    return m;
  };

  DesignVariables v;
  v.D = gaussian(dims.rf_chains, dims.total_streams());
  v.D *= std::sqrt(pm.p_max) / v.D.norm();
  const double amag = 1.0 / std::sqrt(static_cast<double>(dims.antennas_per_subarray));
  v.a.resize(dims.bs_antennas());
  for (Eigen::Index i = 0; i < v.a.size(); ++i) v.a(i) = amag * unit_phasor(phase(rng));
  v.theta.resize(dims.ris_elements());
  for (Eigen::Index i = 0; i < v.theta.size(); ++i) v.theta(i) = unit_phasor(phase(rng));
  v.C = project_C(gaussian(dims.ue_antennas, dims.total_streams()));
  v.mu = 0.0;
  return v;
}

DesignVariables inner_sweep(const DesignVariables& vars, const ChannelRealization& ch,
                            const PowerModel& pm, const FairnessSpec& spec, const PddState& state,
                            StepSizes& steps, SolveTrace& trace, int outer) {
  const double gamma = state.gamma;
  const double omega = state.omega;
  auto evaluate = [&](const DesignVariables& v) {
    return evaluate_objectives(v, ch, pm, spec, gamma, omega);
  };

  DesignVariables cur = vars;
  ObjectiveSnapshot snap = evaluate(cur);
  if (!std::isfinite(snap.lagrangian)) {
    throw std::runtime_error("inner_sweep: non-finite augmented Lagrangian");
  }

  for (std::size_t b = 0; b < kBlockOrder.size(); ++b) {
    const Block block = kBlockOrder[b];
    double& alpha = steps.alpha[b];
    alpha = std::min(state.max_step, 2.0 * alpha);

    const BlockGradient g = grad_lagrangian(snap, cur, ch, pm, spec, gamma, omega, block);
    if (!g.value.allFinite()) {
      throw std::runtime_error("inner_sweep: non-finite gradient");
    }
    if (g.value.squaredNorm() == 0.0) continue;

    for (int h = 0; h <= state.max_halvings; ++h) {
      DesignVariables cand = cur;
      apply_step(cand, block, g.value, alpha, ch.dims, pm.p_max);
      ObjectiveSnapshot cs = evaluate(cand);
      if (std::isfinite(cs.lagrangian) && cs.lagrangian >= snap.lagrangian) {
        cur = std::move(cand);
        snap = std::move(cs);
        break;
      }
      alpha *= 0.5;
    }
  }

  cur.mu = update_mu(snap.weighted, spec.rho, gamma, omega);
  snap.penalty = snap.violation + cur.mu;
  snap.lagrangian = snap.ee - gamma * snap.penalty - snap.penalty * snap.penalty / (2.0 * omega);
  if (!std::isfinite(snap.lagrangian)) {
    throw std::runtime_error("inner_sweep: non-finite augmented Lagrangian");
  }

  IterationRecord rec;
  rec.outer = outer;
  rec.inner = trace.records.empty() || trace.records.back().outer != outer
                  ? 0
                  : trace.records.back().inner + 1;
  rec.lagrangian = snap.lagrangian;
  rec.ee = snap.ee;
  rec.jain = snap.jain;
  rec.penalty = snap.penalty;
  rec.mu = cur.mu;
  rec.gamma = gamma;
  rec.omega = omega;
  rec.steps = steps.alpha;
  trace.records.push_back(rec);
  return cur;
}

SolveResult solve(const ChannelRealization& ch, const PowerModel& pm, const FairnessSpec& spec,
                  const PddState& initial, const DesignVariables& init) {
  initial.validate();
  pm.validate(ch.dims.users);
  spec.validate(ch.dims.users);
  init.check_shapes(ch.dims);

  PddState state = initial;
  SolveResult res;
  DesignVariables cur = init;
  cur.mu = update_mu(cur, ch, pm, spec, state.gamma, state.omega);

  bool have_fallback = false;
  SolveResult fallback;

  auto finish = [&](const DesignVariables& v, bool converged) {
    const ObjectiveSnapshot s = evaluate_objectives(v, ch, pm, spec, state.gamma, state.omega);
    res.vars = v;
    res.ee = s.ee;
    res.lagrangian = s.lagrangian;
    res.penalty = s.penalty;
    res.jain = s.jain;
    res.gamma = state.gamma;
    res.omega = state.omega;
    res.constraint_met = s.jain >= spec.rho - state.fairness_slack;
    res.converged = converged && res.constraint_met;
  };

  for (int round = 0; round < state.max_outer; ++round) {
    res.outer_rounds = round + 1;
    res.trace.round_starts.push_back(res.trace.records.size());
    StepSizes steps;
    steps.alpha.fill(state.initial_step / 2.0);  // doubled back at the first sweep

    double previous = evaluate_objectives(cur, ch, pm, spec, state.gamma, state.omega).lagrangian;
    for (int it = 0; it < state.max_inner; ++it) {
      cur = inner_sweep(cur, ch, pm, spec, state, steps, res.trace, round);
      ++res.iterations;
      const double now = res.trace.records.back().lagrangian;
      if (std::abs(now - previous) <= state.epsilon) break;
      previous = now;
    }

    const ObjectiveSnapshot s = evaluate_objectives(cur, ch, pm, spec, state.gamma, state.omega);
    const bool met = s.jain >= spec.rho - state.fairness_slack;
    if (met && std::abs(s.penalty) <= state.penalty_tol) {
      finish(cur, true);
      return res;
    }
    if (met && (!have_fallback || s.ee > fallback.ee)) {
      finish(cur, false);
      fallback = res;
      have_fallback = true;
    }

    const double increment = state.gamma_update == GammaUpdate::Standard ? s.penalty : s.lagrangian;
    state.gamma += increment / state.omega;
    state.omega *= state.psi;
    cur.mu = update_mu(s.weighted, spec.rho, state.gamma, state.omega);
  }

  finish(cur, false);
  if (!res.constraint_met && have_fallback) {
    SolveTrace trace = std::move(res.trace);
    const int rounds = res.outer_rounds;
    const int iterations = res.iterations;
    res = fallback;
    res.trace = std::move(trace);
    res.outer_rounds = rounds;
    res.iterations = iterations;
  }
  return res;
}

SolveResult solve(const ChannelRealization& ch, const PowerModel& pm, const FairnessSpec& spec,
                  const PddState& state, std::uint64_t seed) {
  return solve(ch, pm, spec, state, random_feasible_point(ch.dims, pm, seed));
}

MultistartResult multistart(const ChannelRealization& ch, const PowerModel& pm,
                            const FairnessSpec& spec, const PddState& state, int starts,
                            std::uint64_t seed) {
  if (starts < 1) throw std::invalid_argument("multistart: need at least one start");
  MultistartResult out;
  out.runs.reserve(starts);
  for (int i = 0; i < starts; ++i) {
    out.runs.push_back(solve(ch, pm, spec, state, mix_seed(seed, static_cast<std::uint64_t>(i))));
  }
  auto better = [](const SolveResult& a, const SolveResult& b) {
    if (a.constraint_met != b.constraint_met) return a.constraint_met;
    return a.constraint_met ? a.ee > b.ee : a.lagrangian > b.lagrangian;
  };
  for (int i = 1; i < starts; ++i) {
    if (better(out.runs[i], out.runs[out.best_index])) out.best_index = i;
  }
  out.best = out.runs[out.best_index];
  return out;
}

}  // namespace risee
