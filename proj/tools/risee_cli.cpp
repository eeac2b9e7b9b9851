// risee: command-line front end for the experiment harness and the oracles.
//
// Exit status: 0 success, 2 when most trials (or starts) end with the
// fairness constraint unmet, 1 on any error or failed oracle.

#include "risee/experiment.hpp"
#include "risee/verification.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace risee;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnmet = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> starts;
  std::optional<std::string> profile;
  std::optional<std::string> gamma_mode;
  std::string out = "risee-out";
  std::string axis = "rho";
};

ExperimentConfig build_config(const Options& o) {
  std::optional<Profile> profile;
  if (o.profile) profile = parse_profile(*o.profile);
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig::defaults(profile.value_or(Profile::Desk))
                                          : load_config(o.config, profile);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.starts) {
    cfg.starts = *o.starts;
    cfg.convergence_starts = *o.starts;
  }
  if (o.gamma_mode) cfg.pdd.gamma_update = parse_gamma_mode(*o.gamma_mode);
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(dir / name, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  return os;
}

void sidecar(const Options& o, const ExperimentConfig& cfg, const std::string& command,
             const std::vector<std::string>& outputs) {
  auto os = open_output(o.out, command + ".json");
  write_sidecar(os, cfg, command, outputs);
}

int unmet_status(int unmet, int total) { return 2 * unmet > total ? kExitUnmet : kExitOk; }

void print_summary(const Aggregate& a) {
  std::printf("trials ok=%d failed=%d  mean EE %.4f Mbit/J (se %.4f)  true EE %.4f  Jain %.4f  "
              "satisfied %.3f\n",
              a.ok, a.failed, a.mean_ee, a.se_ee, a.mean_true_ee, a.mean_jain,
              a.satisfaction_rate);
}

int cmd_solve(const Options& o) {
  ExperimentConfig cfg = build_config(o);
  const TrialResult r = run_trial(cfg, 0, false);
  {
    auto os = open_output(o.out, "solve.csv");
    write_trials_csv(os, {r});
  }
  sidecar(o, cfg, "solve", {"solve.csv"});
  if (!r.ok) {
    std::fprintf(stderr, "solve failed: %s\n", r.error.c_str());
    return kExitError;
  }
  std::printf("EE %.6f Mbit/J  true EE %.6f  Jain %.6f  constraint %s  converged %s  "
              "iterations %d  (%.2fs)\n",
              r.ee_lb, r.true_ee, r.jain, r.constraint_met ? "met" : "unmet",
              r.converged ? "yes" : "no", r.iterations, r.wall_seconds);
  return r.constraint_met ? kExitOk : kExitUnmet;
}

int cmd_trials(const Options& o) {
  ExperimentConfig cfg = build_config(o);
  const TrialSet set = run_trials(cfg);
  {
    auto os = open_output(o.out, "trials.csv");
    write_trials_csv(os, set.trials);
  }
  sidecar(o, cfg, "trials", {"trials.csv"});
  print_summary(set.summary);
  if (set.summary.ok == 0) return kExitError;
  return unmet_status(set.summary.unmet, set.summary.ok);
}

int cmd_sweep(const Options& o) {
  ExperimentConfig cfg = build_config(o);
  const SweepAxis axis = parse_axis(o.axis);
  const SweepTable table = sweep(cfg, axis);
  const std::string base = "sweep_" + axis_name(axis);
  {
    auto os = open_output(o.out, base + ".csv");
    write_sweep_csv(os, table);
  }
  {
    auto os = open_output(o.out, base + "_trials.csv");
    write_sweep_trials_csv(os, table);
  }
  sidecar(o, cfg, base, {base + ".csv", base + "_trials.csv"});
  int ok = 0;
  int unmet = 0;
  for (const auto& row : table.rows) {
    std::printf("%s=%g  ", axis_name(axis).c_str(), row.value);
    print_summary(row.summary);
    ok += row.summary.ok;
    unmet += row.summary.unmet;
  }
  if (ok == 0) return kExitError;
  return unmet_status(unmet, ok);
}

int cmd_convergence(const Options& o) {
  ExperimentConfig cfg = build_config(o);
  const ConvergenceReport rep = convergence_report(cfg, cfg.convergence_starts);
  {
    auto os = open_output(o.out, "convergence.csv");
    write_convergence_csv(os, rep);
  }
  sidecar(o, cfg, "convergence", {"convergence.csv"});
  int unmet = 0;
  for (std::size_t s = 0; s < rep.runs.size(); ++s) {
    const SolveResult& r = rep.runs[s];
    unmet += r.constraint_met ? 0 : 1;
    std::printf("start %zu: iterations %d rounds %d  EE %.6f  H %.6f  |H-EE|/EE %.2e  G %.2e  "
                "Jain %.6f  %s\n",
                s, r.iterations, r.outer_rounds, r.ee, r.lagrangian,
                std::abs(r.lagrangian - r.ee) / std::abs(r.ee), r.penalty, r.jain,
                r.converged ? "converged" : (r.constraint_met ? "constraint met" : "unmet"));
  }
  return unmet_status(unmet, static_cast<int>(rep.runs.size()));
}

int report_oracles(const Options& o, const std::string& name,
                   const std::vector<OracleReport>& reports) {
  {
    auto os = open_output(o.out, name + ".csv");
    write_oracle_csv(os, reports);
  }
  int failed = 0;
  for (const auto& r : reports) {
    if (!r.pass) {
      ++failed;
      std::printf("%s\n", r.summary().c_str());
    }
  }
  std::printf("%s: %zu checks, %d failed\n", name.c_str(), reports.size(), failed);
  return failed == 0 ? kExitOk : kExitError;
}

int cmd_gradcheck(const Options& o) {
  const int instances = o.trials.value_or(20);
  const std::uint64_t seed = o.seed.value_or(1);
  auto reports = gradient_suite(instances, seed);
  reports.push_back(identity_checks(seed));
  return report_oracles(o, "gradcheck", reports);
}

int cmd_verify_bound(const Options& o) {
  const int instances = o.trials.value_or(10);
  const std::uint64_t seed = o.seed.value_or(1);
  return report_oracles(o, "verify_bound", bound_suite(instances, 10000, seed));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust energy-efficient RIS-assisted hybrid beamforming with a fairness constraint"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--trials", o.trials, "Monte Carlo trials (oracle instances for checks)")
      ->check(CLI::PositiveNumber);
  app.add_option("--starts", o.starts, "random initial points per solve")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--profile", o.profile, "dimension profile")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--gamma-mode", o.gamma_mode, "multiplier update rule")
      ->check(CLI::IsMember({"paper", "standard"}));

  auto* solve = app.add_subcommand("solve", "solve one instance (trial 0)");
  auto* trials = app.add_subcommand("trials", "Monte Carlo trials");
  auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
  sweep->add_option("--axis", o.axis, "rho | beta | pmax | nris")
      ->check(CLI::IsMember({"rho", "beta", "pmax", "nris"}))
      ->capture_default_str();
  auto* convergence = app.add_subcommand("convergence", "per-iteration traces from several starts");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient oracle");
  auto* verify = app.add_subcommand("verify-bound", "sampled check of the rate lower bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    int status = kExitError;
    if (*solve) status = cmd_solve(o);
    if (*trials) status = cmd_trials(o);
    if (*sweep) status = cmd_sweep(o);
    if (*convergence) status = cmd_convergence(o);
    if (*gradcheck) status = cmd_gradcheck(o);
    if (*verify) status = cmd_verify_bound(o);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "done in %.1fs, outputs in %s\n", secs, o.out.c_str());
    return status;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}
