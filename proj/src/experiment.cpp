#include "risee/experiment.hpp"

#include "risee/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace risee {

using nlohmann::json;

namespace {

// ---- config <-> JSON ------------------------------------------------------

std::string sampling_name(ErrorSampling s) {
  return s == ErrorSampling::Boundary ? "boundary" : "uniform";
}

ErrorSampling parse_sampling(const std::string& s) {
  if (s == "uniform") return ErrorSampling::UniformBall;
  if (s == "boundary") return ErrorSampling::Boundary;
  throw std::invalid_argument("unknown error sampling '" + s + "' (uniform|boundary)");
}

std::string gain_law_name(GainLaw g) {
  return g == GainLaw::FreeSpace ? "free_space" : "log_distance";
}

GainLaw parse_gain_law(const std::string& s) {
  if (s == "log_distance") return GainLaw::LogDistance;
  if (s == "free_space") return GainLaw::FreeSpace;
  throw std::invalid_argument("unknown gain law '" + s + "' (log_distance|free_space)");
}

std::string gamma_mode_name(GammaUpdate g) {
  return g == GammaUpdate::Paper ? "paper" : "standard";
}

json vec3(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 read_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["profile"] = profile_name(c.profile);
  j["system"] = {{"rf_chains", c.dims.rf_chains},
                 {"antennas_per_subarray", c.dims.antennas_per_subarray},
                 {"ris_rows", c.dims.ris_rows},
                 {"ris_cols", c.dims.ris_cols},
                 {"users", c.dims.users},
                 {"streams_per_user", c.dims.streams_per_user},
                 {"ue_antennas", c.dims.ue_antennas},
                 {"subarray_spacing", c.dims.subarray_spacing}};
  j["power"] = {{"bs_static_dbw", c.bs_static_dbw},
                {"amplifier_factor", c.amplifier},
                {"bs_phase_shifter_dbm", c.bs_phase_shifter_dbm},
                {"ris_element_dbm", c.ris_element_dbm},
                {"ue_static_dbm", c.ue_static_dbm},
                {"ue_receive_dbm", c.ue_receive_dbm},
                {"p_max_dbm", c.p_max_dbm},
                {"noise_dbm", c.noise_dbm},
                {"bandwidth_hz", c.bandwidth_hz}};
  j["fairness"] = {{"rho", c.rho}, {"weight_min", c.weight_min}, {"weight_max", c.weight_max}};
  j["geometry"] = {
      {"bs", vec3(c.bs)}, {"ris", vec3(c.ris)}, {"ue_min", vec3(c.ue_min)}, {"ue_max", vec3(c.ue_max)}};
  j["paths"] = {{"bs_ris_paths", c.paths.bs_ris_paths},
                {"ris_ue_paths", c.paths.ris_ue_paths},
                {"nlos_attenuation_db", c.paths.nlos_attenuation_db},
                {"gain_law", gain_law_name(c.paths.gain_law)},
                {"reference_loss_db", c.paths.reference_loss_db},
                {"path_loss_exponent", c.paths.path_loss_exponent},
                {"carrier_hz", c.paths.carrier_hz}};
  j["csi"] = {{"beta", c.beta},
              {"sampling", sampling_name(c.error_sampling)},
              {"true_draws", c.true_draws}};
  const PddState& p = c.pdd;
  j["solver"] = {{"gamma", p.gamma},
                 {"omega", p.omega},
                 {"psi", p.psi},
                 {"epsilon", p.epsilon},
                 {"penalty_tol", p.penalty_tol},
                 {"fairness_slack", p.fairness_slack},
                 {"initial_step", p.initial_step},
                 {"max_step", p.max_step},
                 {"max_halvings", p.max_halvings},
                 {"max_inner", p.max_inner},
                 {"max_outer", p.max_outer},
                 {"gamma_update", gamma_mode_name(p.gamma_update)}};
  j["run"] = {{"trials", c.trials},
              {"starts", c.starts},
              {"convergence_starts", c.convergence_starts},
              {"seed", c.seed},
              {"threads", c.threads}};
  j["sweeps"] = {{"rho", c.rho_grid},
                 {"beta", c.beta_grid},
                 {"pmax_dbm", c.pmax_grid_dbm},
                 {"nris", c.nris_grid},
                 {"nris_ris_element_dbm", c.nris_ris_element_dbm}};
  return j;
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  c.profile = parse_profile(j.at("profile").get<std::string>());
  const json& s = j.at("system");
  c.dims.rf_chains = s.at("rf_chains").get<int>();
  c.dims.antennas_per_subarray = s.at("antennas_per_subarray").get<int>();
  c.dims.ris_rows = s.at("ris_rows").get<int>();
  c.dims.ris_cols = s.at("ris_cols").get<int>();
  c.dims.users = s.at("users").get<int>();
  c.dims.streams_per_user = s.at("streams_per_user").get<int>();
  c.dims.ue_antennas = s.at("ue_antennas").get<int>();
  c.dims.subarray_spacing = s.at("subarray_spacing").get<double>();

  const json& pw = j.at("power");
  c.bs_static_dbw = pw.at("bs_static_dbw").get<double>();
  c.amplifier = pw.at("amplifier_factor").get<double>();
  c.bs_phase_shifter_dbm = pw.at("bs_phase_shifter_dbm").get<double>();
  c.ris_element_dbm = pw.at("ris_element_dbm").get<double>();
  c.ue_static_dbm = pw.at("ue_static_dbm").get<double>();
  c.ue_receive_dbm = pw.at("ue_receive_dbm").get<double>();
  c.p_max_dbm = pw.at("p_max_dbm").get<double>();
  c.noise_dbm = pw.at("noise_dbm").get<double>();
  c.bandwidth_hz = pw.at("bandwidth_hz").get<double>();

  const json& f = j.at("fairness");
  c.rho = f.at("rho").get<double>();
  c.weight_min = f.at("weight_min").get<double>();
  c.weight_max = f.at("weight_max").get<double>();

  const json& g = j.at("geometry");
  c.bs = read_vec3(g.at("bs"));
  c.ris = read_vec3(g.at("ris"));
  c.ue_min = read_vec3(g.at("ue_min"));
  c.ue_max = read_vec3(g.at("ue_max"));

  const json& pa = j.at("paths");
  c.paths.bs_ris_paths = pa.at("bs_ris_paths").get<int>();
  c.paths.ris_ue_paths = pa.at("ris_ue_paths").get<int>();
  c.paths.nlos_attenuation_db = pa.at("nlos_attenuation_db").get<double>();
  c.paths.gain_law = parse_gain_law(pa.at("gain_law").get<std::string>());
  c.paths.reference_loss_db = pa.at("reference_loss_db").get<double>();
  c.paths.path_loss_exponent = pa.at("path_loss_exponent").get<double>();
  c.paths.carrier_hz = pa.at("carrier_hz").get<double>();

  const json& e = j.at("csi");
  c.beta = e.at("beta").get<double>();
  c.error_sampling = parse_sampling(e.at("sampling").get<std::string>());
  c.true_draws = e.at("true_draws").get<int>();

  const json& so = j.at("solver");
  c.pdd.gamma = so.at("gamma").get<double>();
  c.pdd.omega = so.at("omega").get<double>();
  c.pdd.psi = so.at("psi").get<double>();
  c.pdd.epsilon = so.at("epsilon").get<double>();
  c.pdd.penalty_tol = so.at("penalty_tol").get<double>();
  c.pdd.fairness_slack = so.at("fairness_slack").get<double>();
  c.pdd.initial_step = so.at("initial_step").get<double>();
  c.pdd.max_step = so.at("max_step").get<double>();
  c.pdd.max_halvings = so.at("max_halvings").get<int>();
  c.pdd.max_inner = so.at("max_inner").get<int>();
  c.pdd.max_outer = so.at("max_outer").get<int>();
  c.pdd.gamma_update = parse_gamma_mode(so.at("gamma_update").get<std::string>());

  const json& r = j.at("run");
  c.trials = r.at("trials").get<int>();
  c.starts = r.at("starts").get<int>();
  c.convergence_starts = r.at("convergence_starts").get<int>();
  c.seed = r.at("seed").get<std::uint64_t>();
  c.threads = r.at("threads").get<int>();

  const json& sw = j.at("sweeps");
  c.rho_grid = sw.at("rho").get<std::vector<double>>();
  c.beta_grid = sw.at("beta").get<std::vector<double>>();
  c.pmax_grid_dbm = sw.at("pmax_dbm").get<std::vector<double>>();
  c.nris_grid = sw.at("nris").get<std::vector<double>>();
  c.nris_ris_element_dbm = sw.at("nris_ris_element_dbm").get<double>();
  return c;
}

// Rejects keys of `user` that the reference document does not have.
void check_keys(const json& user, const json& reference, const std::string& where) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!reference.contains(it.key())) throw std::invalid_argument("unknown config key '" + path + "'");
    const json& ref = reference.at(it.key());
    if (ref.is_object()) {
      if (!it->is_object()) throw std::invalid_argument("config key '" + path + "' must be an object");
      check_keys(*it, ref, path);
    }
  }
}

// ---- numerics ------------------------------------------------------------

std::pair<int, int> square_factorisation(int n) {
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (rows > 1 && n % rows != 0) --rows;
  return {rows, n / rows};
}

double mean_true_ee(const DesignVariables& vars, const std::vector<ChannelRealization>& draws,
                    const PowerModel& pm) {
  double sum = 0.0;
  for (const auto& ch : draws) sum += true_ee(vars, ch, pm);
  return sum / static_cast<double>(draws.size());
}

template <class F>
void parallel_for(int count, int threads, F&& body) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---- profiles and config -------------------------------------------------

ExperimentConfig ExperimentConfig::defaults(Profile profile) {
  ExperimentConfig c;
  c.profile = profile;
  if (profile == Profile::Paper) {
    c.dims.rf_chains = 8;
    c.dims.antennas_per_subarray = 4;
    c.dims.ris_rows = 8;
    c.dims.ris_cols = 8;
    c.dims.users = 4;
    c.dims.streams_per_user = 2;
    c.dims.ue_antennas = 4;
    c.trials = 1000;
  }
  return c;
}

void ExperimentConfig::validate() const {
  dims.validate();
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(bs_static_dbw) || !finite(bs_phase_shifter_dbm) || !finite(ris_element_dbm) ||
      !finite(ue_static_dbm) || !finite(ue_receive_dbm) || !finite(p_max_dbm) ||
      !finite(noise_dbm) || !(bandwidth_hz > 0.0) || !(amplifier >= 1.0)) {
    throw std::invalid_argument("config: invalid power parameters");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("config: rho must lie in (0, 1]");
  if (!(weight_min > 0.0 && weight_max >= weight_min)) {
    throw std::invalid_argument("config: need 0 < weight_min <= weight_max");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(ue_min[i] <= ue_max[i])) throw std::invalid_argument("config: empty user box");
  }
  if (paths.bs_ris_paths < 1 || paths.ris_ue_paths < 1 || !(paths.carrier_hz > 0.0)) {
    throw std::invalid_argument("config: invalid path statistics");
  }
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("config: beta must lie in [0, 1)");
  if (true_draws < 1) throw std::invalid_argument("config: true_draws must be >= 1");
  pdd.validate();
  if (trials < 1 || starts < 1 || convergence_starts < 1) {
    throw std::invalid_argument("config: trials and starts must be >= 1");
  }
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  for (SweepAxis axis : {SweepAxis::Rho, SweepAxis::Beta, SweepAxis::PMax, SweepAxis::NRis}) {
    const auto& g = grid(axis);
    if (g.empty()) throw std::invalid_argument("config: empty " + axis_name(axis) + " grid");
    if (!std::is_sorted(g.begin(), g.end())) {
      throw std::invalid_argument("config: " + axis_name(axis) + " grid must be sorted");
    }
  }
  for (double r : rho_grid) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("config: rho grid outside (0, 1]");
  }
  for (double b : beta_grid) {
    if (!(b >= 0.0 && b < 1.0)) throw std::invalid_argument("config: beta grid outside [0, 1)");
  }
  for (double n : nris_grid) {
    if (!(n >= 1.0) || n != std::floor(n)) {
      throw std::invalid_argument("config: nris grid needs positive integers");
    }
  }
}

const std::vector<double>& ExperimentConfig::grid(SweepAxis axis) const {
  switch (axis) {
    case SweepAxis::Rho:
      return rho_grid;
    case SweepAxis::Beta:
      return beta_grid;
    case SweepAxis::PMax:
      return pmax_grid_dbm;
    case SweepAxis::NRis:
      return nris_grid;
  }
  return rho_grid;
}

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper") return Profile::Paper;
  throw std::invalid_argument("unknown profile '" + name + "' (desk|paper)");
}

std::string profile_name(Profile p) { return p == Profile::Paper ? "paper" : "desk"; }

SweepAxis parse_axis(const std::string& name) {
  if (name == "rho") return SweepAxis::Rho;
  if (name == "beta") return SweepAxis::Beta;
  if (name == "pmax") return SweepAxis::PMax;
  if (name == "nris") return SweepAxis::NRis;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (rho|beta|pmax|nris)");
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Rho:
      return "rho";
    case SweepAxis::Beta:
      return "beta";
    case SweepAxis::PMax:
      return "pmax";
    case SweepAxis::NRis:
      return "nris";
  }
  return "?";
}

GammaUpdate parse_gamma_mode(const std::string& name) {
  if (name == "standard") return GammaUpdate::Standard;
  if (name == "paper") return GammaUpdate::Paper;
  throw std::invalid_argument("unknown gamma mode '" + name + "' (paper|standard)");
}

ExperimentConfig parse_config(const std::string& text, std::optional<Profile> profile) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  if (!user.is_object()) throw std::invalid_argument("config: top level must be an object");
  if (user.contains("schema_version") && user["schema_version"] != kConfigSchemaVersion) {
    throw std::invalid_argument("config: unsupported schema_version " +
                                user["schema_version"].dump());
  }
  Profile p = Profile::Desk;
  if (profile) {
    p = *profile;
  } else if (user.contains("profile")) {
    p = parse_profile(user["profile"].get<std::string>());
  }
  json merged = to_json(ExperimentConfig::defaults(p));
  check_keys(user, merged, "");
  user.erase("profile");
  merged.merge_patch(user);
  ExperimentConfig cfg;
  try {
    cfg = from_json(merged);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<Profile> profile) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), profile);
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PowerModel power_model(const ExperimentConfig& cfg) {
  PowerModel pm;
  pm.bs_static = dbw_to_watt(cfg.bs_static_dbw);
  pm.amplifier = cfg.amplifier;
  pm.bs_phase_shifter = dbm_to_watt(cfg.bs_phase_shifter_dbm);
  pm.ris_element = dbm_to_watt(cfg.ris_element_dbm);
  pm.ue_static.assign(cfg.dims.users, dbm_to_watt(cfg.ue_static_dbm));
  pm.ue_receive.assign(cfg.dims.users, dbm_to_watt(cfg.ue_receive_dbm));
  pm.p_max = dbm_to_watt(cfg.p_max_dbm);
  pm.noise = dbm_to_watt(cfg.noise_dbm);
  pm.bandwidth = cfg.bandwidth_hz;
  return pm;
}

PowerModel solver_power_model(const ExperimentConfig& cfg) {
  PowerModel pm = power_model(cfg);
  pm.bandwidth = cfg.bandwidth_hz * 1e-6;
  return pm;
}

// ---- trials --------------------------------------------------------------

TrialSetup make_trial(const ExperimentConfig& cfg, int index) {
  TrialSetup t;
  t.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
  std::mt19937_64 rng(t.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  t.geometry.bs = cfg.bs;
  t.geometry.ris = cfg.ris;
  for (int k = 0; k < cfg.dims.users; ++k) {
    Vec3 p;
    for (int i = 0; i < 3; ++i) p[i] = cfg.ue_min[i] + (cfg.ue_max[i] - cfg.ue_min[i]) * unit(rng);
    t.geometry.users.push_back(p);
  }
  t.fairness.rho = std::max(cfg.rho, 1.0 / cfg.dims.users);
  for (int k = 0; k < cfg.dims.users; ++k) {
    t.fairness.weights.push_back(cfg.weight_min + (cfg.weight_max - cfg.weight_min) * unit(rng));
  }
  const std::uint64_t channel_seed = rng();
  const std::uint64_t error_seed = rng();
  t.solve_seed = rng();
  const std::uint64_t draw_seed = rng();

  t.channel = synthesize_channels(cfg.dims, t.geometry, cfg.paths, channel_seed);
  t.channel = apply_csi_error(t.channel, cfg.beta, error_seed, cfg.error_sampling);

  // Draw 0 is the channel itself; the rest keep the estimate and radius and
  // redraw the error inside the same ball.
  t.draws.push_back(t.channel);
  std::mt19937_64 drng(draw_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int d = 1; d < cfg.true_draws; ++d) {
    ChannelRealization ch = t.channel;
    for (int k = 0; k < cfg.dims.users; ++k) {
      const Eigen::MatrixXcd& hhat = ch.estimated[k];
      Eigen::MatrixXcd err(hhat.rows(), hhat.cols());
      for (Eigen::Index j = 0; j < err.cols(); ++j) {
        for (Eigen::Index i = 0; i < err.rows(); ++i) err(i, j) = cd(normal(drng), normal(drng));
      }
      double radius = ch.error_radius[k];
      if (cfg.error_sampling == ErrorSampling::UniformBall) {
        radius *= std::pow(unit(drng), 1.0 / (2.0 * static_cast<double>(err.size())));
      }
      const double n = err.norm();
      if (n > 0.0) err *= radius / n;
      ch.error[k] = err;
      ch.cascaded[k] = hhat + err;
    }
    t.draws.push_back(std::move(ch));
  }
  return t;
}

TrialResult run_trial(const ExperimentConfig& cfg, int index, bool perfect_csi) {
  const auto start = std::chrono::steady_clock::now();
  TrialResult r;
  r.index = index;
  r.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
  try {
    const TrialSetup t = make_trial(cfg, index);
    const PowerModel pm = solver_power_model(cfg);
    const MultistartResult ms = multistart(t.channel, pm, t.fairness, cfg.pdd, cfg.starts, t.solve_seed);
    const SolveResult& best = ms.best;
    r.ee_lb = best.ee;
    r.jain = best.jain;
    r.constraint_met = best.constraint_met;
    r.converged = best.converged;
    r.iterations = best.iterations;
    r.outer_rounds = best.outer_rounds;
    r.best_start = ms.best_index;
    r.true_ee = mean_true_ee(best.vars, t.draws, pm);
    if (perfect_csi) {
      ChannelRealization naive = t.channel;
      naive.error_radius.assign(cfg.dims.users, 0.0);
      const MultistartResult ps = multistart(naive, pm, t.fairness, cfg.pdd, cfg.starts, t.solve_seed);
      r.perfect_csi_ee = mean_true_ee(ps.best.vars, t.draws, pm);
    }
    if (!std::isfinite(r.ee_lb) || !std::isfinite(r.true_ee) || !std::isfinite(r.jain)) {
      throw std::runtime_error("non-finite trial result");
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Aggregate aggregate(const std::vector<TrialResult>& trials) {
  Aggregate a;
  double ee = 0.0, ee2 = 0.0, tee = 0.0, pee = 0.0, jain = 0.0;
  int perfect = 0, met = 0;
  for (const auto& t : trials) {
    if (!t.ok) {
      ++a.failed;
      continue;
    }
    ++a.ok;
    ee += t.ee_lb;
    ee2 += t.ee_lb * t.ee_lb;
    tee += t.true_ee;
    jain += t.jain;
    if (!std::isnan(t.perfect_csi_ee)) {
      pee += t.perfect_csi_ee;
      ++perfect;
    }
    met += t.constraint_met ? 1 : 0;
  }
  if (a.ok == 0) return a;
  const double n = a.ok;
  a.mean_ee = ee / n;
  a.se_ee = 0.0;
  if (a.ok > 1) {
    const double var = std::max(0.0, (ee2 - n * a.mean_ee * a.mean_ee) / (n - 1.0));
    a.se_ee = std::sqrt(var / n);
  }
  a.mean_true_ee = tee / n;
  a.mean_jain = jain / n;
  if (perfect == a.ok) a.mean_perfect_csi_ee = pee / n;
  a.satisfaction_rate = met / n;
  a.unmet = a.ok - met;
  return a;
}

TrialSet run_trials(const ExperimentConfig& cfg, bool perfect_csi) {
  cfg.validate();
  TrialSet set;
  set.trials.resize(cfg.trials);
  parallel_for(cfg.trials, cfg.threads,
               [&](int i) { set.trials[i] = run_trial(cfg, i, perfect_csi); });
  set.summary = aggregate(set.trials);
  return set;
}

ExperimentConfig sweep_point(const ExperimentConfig& cfg, SweepAxis axis, double value) {
  ExperimentConfig c = cfg;
  switch (axis) {
    case SweepAxis::Rho:
      c.rho = std::max(value, 1.0 / cfg.dims.users);
      break;
    case SweepAxis::Beta:
      c.beta = value;
      break;
    case SweepAxis::PMax:
      c.p_max_dbm = value;
      break;
    case SweepAxis::NRis: {
      const auto [rows, cols] = square_factorisation(static_cast<int>(value));
      c.dims.ris_rows = rows;
      c.dims.ris_cols = cols;
      c.ris_element_dbm = cfg.nris_ris_element_dbm;
      break;
    }
  }
  return c;
}

SweepTable sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  SweepTable table;
  table.axis = axis;
  for (double v : grid) {
    const ExperimentConfig point = sweep_point(cfg, axis, v);
    TrialSet set = run_trials(point, axis == SweepAxis::Beta);
    table.rows.push_back({v, set.summary, std::move(set.trials)});
  }
  return table;
}

SweepTable sweep(const ExperimentConfig& cfg, SweepAxis axis) {
  return sweep(cfg, axis, cfg.grid(axis));
}

ConvergenceReport convergence_report(const ExperimentConfig& cfg, int starts) {
  cfg.validate();
  if (starts < 1) throw std::invalid_argument("convergence_report: starts must be >= 1");
  const TrialSetup t = make_trial(cfg, 0);
  const PowerModel pm = solver_power_model(cfg);
  ConvergenceReport rep;
  rep.runs.resize(starts);
  parallel_for(starts, cfg.threads, [&](int i) {
    rep.runs[i] = solve(t.channel, pm, t.fairness, cfg.pdd,
                        mix_seed(t.solve_seed, static_cast<std::uint64_t>(i)));
  });
  return rep;
}

// ---- output --------------------------------------------------------------

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_number(double value) { return format_number(value); }

namespace {

constexpr const char* kTrialColumns =
    "trial,seed,status,ee_lb,true_ee,perfect_csi_ee,jain,constraint_met,converged,"
    "iterations,outer_rounds,best_start,error";

void write_trial_row(std::ostream& os, const TrialResult& t) {
  os << t.index << ',' << t.seed << ',' << (t.ok ? "ok" : "failed") << ','
     << csv_number(t.ee_lb) << ',' << csv_number(t.true_ee) << ','
     << csv_number(t.perfect_csi_ee) << ',' << csv_number(t.jain) << ','
     << (t.constraint_met ? 1 : 0) << ',' << (t.converged ? 1 : 0) << ',' << t.iterations << ','
     << t.outer_rounds << ',' << t.best_start << ',' << csv_field(t.error) << "\r\n";
}

}  // namespace

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials) {
  os << kTrialColumns << "\r\n";
  for (const auto& t : trials) write_trial_row(os, t);
}

void write_sweep_trials_csv(std::ostream& os, const SweepTable& table) {
  os << "axis,value," << kTrialColumns << "\r\n";
  for (const auto& row : table.rows) {
    for (const auto& t : row.trials) {
      os << axis_name(table.axis) << ',' << csv_number(row.value) << ',';
      write_trial_row(os, t);
    }
  }
}

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
  os << "axis,value,trials_ok,trials_failed,mean_ee,se_ee,mean_jain,satisfaction_rate,"
        "mean_true_ee,mean_lb_ee,mean_perfect_csi_ee\r\n";
  for (const auto& row : table.rows) {
    const Aggregate& a = row.summary;
    os << axis_name(table.axis) << ',' << csv_number(row.value) << ',' << a.ok << ',' << a.failed
       << ',' << csv_number(a.mean_ee) << ',' << csv_number(a.se_ee) << ','
       << csv_number(a.mean_jain) << ',' << csv_number(a.satisfaction_rate) << ','
       << csv_number(a.mean_true_ee) << ',' << csv_number(a.mean_ee) << ','
       << csv_number(a.mean_perfect_csi_ee) << "\r\n";
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  os << "start,iteration,outer,inner,lagrangian,ee_lb,penalty,mu,gamma,omega,jain\r\n";
  for (std::size_t s = 0; s < report.runs.size(); ++s) {
    const auto& recs = report.runs[s].trace.records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const IterationRecord& r = recs[i];
      os << s << ',' << i << ',' << r.outer << ',' << r.inner << ',' << csv_number(r.lagrangian)
         << ',' << csv_number(r.ee) << ',' << csv_number(r.penalty) << ',' << csv_number(r.mu)
         << ',' << csv_number(r.gamma) << ',' << csv_number(r.omega) << ','
         << csv_number(r.jain) << "\r\n";
    }
  }
}

void write_sidecar(std::ostream& os, const ExperimentConfig& cfg, const std::string& command,
                   const std::vector<std::string>& outputs) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["config"] = to_json(cfg);
  j["outputs"] = outputs;
  j["ee_unit"] = "Mbit/J";
  os << j.dump(2) << '\n';
}

}  // namespace risee
