// Python bindings. Configurations cross the boundary as canonical JSON text;
// results come back as plain dicts and lists.

#include "risee/experiment.hpp"
#include "risee/objectives.hpp"
#include "risee/solver.hpp"
#include "risee/verification.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace risee;

namespace {

ExperimentConfig config_from(const std::optional<std::string>& text) {
  return text ? parse_config(*text) : ExperimentConfig::defaults(Profile::Desk);
}

py::dict trial_dict(const TrialResult& t) {
  py::dict d;
  d["trial"] = t.index;
  d["seed"] = t.seed;
  d["ok"] = t.ok;
  d["error"] = t.error;
  d["ee_lb"] = t.ee_lb;
  d["true_ee"] = t.true_ee;
  d["perfect_csi_ee"] = t.perfect_csi_ee;
  d["jain"] = t.jain;
  d["constraint_met"] = t.constraint_met;
  d["converged"] = t.converged;
  d["iterations"] = t.iterations;
  d["outer_rounds"] = t.outer_rounds;
  d["best_start"] = t.best_start;
  return d;
}

py::dict aggregate_dict(const Aggregate& a) {
  py::dict d;
  d["trials_ok"] = a.ok;
  d["trials_failed"] = a.failed;
  d["mean_ee"] = a.mean_ee;
  d["se_ee"] = a.se_ee;
  d["mean_true_ee"] = a.mean_true_ee;
  d["mean_perfect_csi_ee"] = a.mean_perfect_csi_ee;
  d["mean_jain"] = a.mean_jain;
  d["satisfaction_rate"] = a.satisfaction_rate;
  d["unmet"] = a.unmet;
  return d;
}

py::list trials_list(const std::vector<TrialResult>& trials) {
  py::list out;
  for (const auto& t : trials) out.append(trial_dict(t));
  return out;
}

py::dict oracle_dict(const OracleReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["instance"] = r.instance;
  d["max_rel_error"] = r.max_rel_error;
  d["tolerance"] = r.tolerance;
  d["samples"] = r.samples;
  d["resamples"] = r.resamples;
  d["pass"] = r.pass;
  d["witness"] = r.witness;
  return d;
}

py::list oracle_list(const std::vector<OracleReport>& reports) {
  py::list out;
  for (const auto& r : reports) out.append(oracle_dict(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust energy-efficient RIS-assisted hybrid beamforming";
  m.attr("SCHEMA_VERSION") = kConfigSchemaVersion;

  m.def(
      "default_config",
      [](const std::string& profile) { return config_to_json(ExperimentConfig::defaults(parse_profile(profile))); },
      py::arg("profile") = "desk", "Canonical JSON of the profile defaults.");
  m.def(
      "normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
      py::arg("config"), "Validates a (partial) JSON document and returns the canonical form.");
  m.def(
      "config_hash", [](const std::string& text) { return config_hash(parse_config(text)); },
      py::arg("config"));

  m.def(
      "run_trials",
      [](const std::optional<std::string>& text, bool perfect_csi) {
        const ExperimentConfig cfg = config_from(text);
        TrialSet set;
        {
          py::gil_scoped_release release;
          set = run_trials(cfg, perfect_csi);
        }
        py::dict d;
        d["trials"] = trials_list(set.trials);
        d["summary"] = aggregate_dict(set.summary);
        return d;
      },
      py::arg("config") = py::none(), py::arg("perfect_csi") = false);

  m.def(
      "sweep",
      [](const std::optional<std::string>& text, const std::string& axis,
         const std::optional<std::vector<double>>& grid) {
        const ExperimentConfig cfg = config_from(text);
        const SweepAxis ax = parse_axis(axis);
        SweepTable table;
        {
          py::gil_scoped_release release;
          table = grid ? sweep(cfg, ax, *grid) : sweep(cfg, ax);
        }
        py::list rows;
        for (const auto& row : table.rows) {
          py::dict d = aggregate_dict(row.summary);
          d["axis"] = axis_name(ax);
          d["value"] = row.value;
          d["trials"] = trials_list(row.trials);
          rows.append(d);
        }
        return rows;
      },
      py::arg("config") = py::none(), py::arg("axis") = "rho", py::arg("grid") = py::none());

  m.def(
      "convergence",
      [](const std::optional<std::string>& text, int starts) {
        const ExperimentConfig cfg = config_from(text);
        ConvergenceReport rep;
        {
          py::gil_scoped_release release;
          rep = convergence_report(cfg, starts);
        }
        py::list runs;
        for (const auto& r : rep.runs) {
          py::list records;
          for (const auto& rec : r.trace.records) {
            py::dict d;
            d["outer"] = rec.outer;
            d["inner"] = rec.inner;
            d["lagrangian"] = rec.lagrangian;
            d["ee_lb"] = rec.ee;
            d["penalty"] = rec.penalty;
            d["mu"] = rec.mu;
            d["gamma"] = rec.gamma;
            d["omega"] = rec.omega;
            d["jain"] = rec.jain;
            records.append(d);
          }
          py::dict d;
          d["ee_lb"] = r.ee;
          d["lagrangian"] = r.lagrangian;
          d["penalty"] = r.penalty;
          d["jain"] = r.jain;
          d["converged"] = r.converged;
          d["constraint_met"] = r.constraint_met;
          d["records"] = records;
          runs.append(d);
        }
        return runs;
      },
      py::arg("config") = py::none(), py::arg("starts") = 8);

  m.def(
      "gradient_suite",
      [](int instances, std::uint64_t seed) {
        std::vector<OracleReport> r;
        {
          py::gil_scoped_release release;
          r = gradient_suite(instances, seed);
        }
        return oracle_list(r);
      },
      py::arg("instances") = 20, py::arg("seed") = 1);
  m.def(
      "bound_suite",
      [](int instances, std::size_t samples, std::uint64_t seed) {
        std::vector<OracleReport> r;
        {
          py::gil_scoped_release release;
          r = bound_suite(instances, samples, seed);
        }
        return oracle_list(r);
      },
      py::arg("instances") = 10, py::arg("samples") = 10000, py::arg("seed") = 1);
  m.def("identity_checks", [](std::uint64_t seed) { return oracle_dict(identity_checks(seed)); },
        py::arg("seed") = 1);

  m.def("jain_index", [](const Eigen::VectorXd& r) { return jain_index(r); }, py::arg("rates"));
  m.def("project_D", &project_D, py::arg("D"), py::arg("p_max"));
  m.def("project_a", &project_a, py::arg("a"), py::arg("antennas_per_subarray"));
  m.def("project_theta", &project_theta, py::arg("theta"));
  m.def("project_C", &project_C, py::arg("C"));
}
