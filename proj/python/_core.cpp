#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sativ/config.hpp"
#include "sativ/effects.hpp"
#include "sativ/error.hpp"
#include "sativ/moments.hpp"
#include "sativ/montecarlo.hpp"

namespace py = pybind11;
using namespace sativ;

namespace {

AppConfig config_from(const std::string& text) { return parse_config(Json::parse(text)); }

// Columns arrive as flat arrays, one entry per individual.
ExperimentData data_from_columns(const std::vector<std::int64_t>& group_id,
                                 const std::vector<double>& saturation, const std::vector<int>& z,
                                 const std::vector<int>& d, const std::vector<double>& y) {
  const std::size_t rows = group_id.size();
  if (saturation.size() != rows || z.size() != rows || d.size() != rows || y.size() != rows) {
    throw ValidationError("data columns must have equal length");
  }
  std::map<std::int64_t, Group> groups;
  for (std::size_t r = 0; r < rows; ++r) {
    auto [it, fresh] = groups.try_emplace(group_id[r]);
    Group& g = it->second;
    if (fresh) {
      g.id = group_id[r];
      g.saturation = saturation[r];
    } else if (g.saturation != saturation[r]) {
      throw ValidationError("row " + std::to_string(r) + ": saturation differs within group " +
                            std::to_string(group_id[r]));
    }
    g.z.push_back(z[r]);
    g.d.push_back(d[r]);
    g.y.push_back(y[r]);
  }
  ExperimentData data;
  for (auto& [id, g] : groups) data.groups.push_back(std::move(g));
  data.validate();
  return data;
}

py::dict columns_of(const ExperimentData& data) {
  std::vector<std::int64_t> id;
  std::vector<double> sat, y;
  std::vector<int> z, d, complier;
  for (const auto& g : data.groups) {
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      id.push_back(g.id);
      sat.push_back(g.saturation);
      z.push_back(g.z[i]);
      d.push_back(g.d[i]);
      y.push_back(g.y[i]);
      if (g.latent) complier.push_back(g.latent->complier[i]);
    }
  }
  py::dict out;
  out["group_id"] = py::array(py::cast(id));
  out["saturation"] = py::array(py::cast(sat));
  out["z"] = py::array(py::cast(z));
  out["d"] = py::array(py::cast(d));
  out["y"] = py::array(py::cast(y));
  if (data.has_latent()) out["complier"] = py::array(py::cast(complier));
  return out;
}

EstimatorOptions options_for(AppConfig& cfg, const std::string& pure_control, bool small_sample) {
  if (pure_control == "gmm") cfg.estimation.pure_control = PureControlPolicy::gmm;
  else if (pure_control == "drop") cfg.estimation.pure_control = PureControlPolicy::drop;
  else if (!pure_control.empty()) throw ValidationError("pure_control must be 'gmm' or 'drop'");
  if (small_sample) cfg.estimation.small_sample_correction = true;
  return cfg.estimation.options();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Randomized-saturation IV estimators (compiled core)";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "simulate",
      [](const std::string& config, std::optional<std::uint64_t> seed) {
        SimConfig sim = config_from(config).require_sim();
        if (seed) sim.seed = *seed;
        ExperimentData data;
        {
          py::gil_scoped_release release;
          data = simulate_experiment(sim);
        }
        return columns_of(data);
      },
      py::arg("config"), py::arg("seed") = py::none());

  m.def(
      "estimate",
      [](const std::string& config, const std::vector<std::int64_t>& group_id,
         const std::vector<double>& saturation, const std::vector<int>& z, const std::vector<int>& d,
         const std::vector<double>& y, const std::string& target, const std::string& pure_control,
         bool small_sample) {
        AppConfig cfg = config_from(config);
        const EstimatorOptions opts = options_for(cfg, pure_control, small_sample);
        const ExperimentData data = data_from_columns(group_id, saturation, z, d, y);
        const EstimateResult r = estimate(data, BasisSpec::from_name(cfg.basis), cfg.require_design(),
                                          target_from_string(target), opts);
        return to_json(r).dump();
      },
      py::arg("config"), py::arg("group_id"), py::arg("saturation"), py::arg("z"), py::arg("d"),
      py::arg("y"), py::arg("target") = "joint", py::arg("pure_control") = "",
      py::arg("small_sample") = false);

  m.def(
      "effect_curve",
      [](const std::string& config, const std::vector<std::int64_t>& group_id,
         const std::vector<double>& saturation, const std::vector<int>& z, const std::vector<int>& d,
         const std::vector<double>& y, const std::string& kind, int grid_points, double delta,
         const std::string& pure_control) {
        AppConfig cfg = config_from(config);
        const EstimatorOptions opts = options_for(cfg, pure_control, false);
        const EffectKind k = parse_effect_kind(kind);
        const Target target = required_target(k);
        const ExperimentData data = data_from_columns(group_id, saturation, z, d, y);
        const BasisSpec basis = BasisSpec::from_name(cfg.basis);
        const EstimateResult est = estimate(data, basis, cfg.require_design(), target, opts);
        const bool indirect = k.effect == Effect::indirect_0 || k.effect == Effect::indirect_1;
        const auto grid = uniform_grid(grid_points, indirect ? 1.0 - delta : 1.0);
        const EffectCurve c = effect_curve(est, basis, k, grid, delta);
        py::dict out;
        out["kind"] = to_string(c.kind);
        out["dbar"] = py::array(py::cast(c.grid));
        out["estimate"] = py::array(py::cast(c.point));
        out["se"] = py::array(py::cast(c.se));
        out["ci_low"] = py::array(py::cast(c.ci_low));
        out["ci_high"] = py::array(py::cast(c.ci_high));
        return out;
      },
      py::arg("config"), py::arg("group_id"), py::arg("saturation"), py::arg("z"), py::arg("d"),
      py::arg("y"), py::arg("kind"), py::arg("grid_points") = 101, py::arg("delta") = 0.1,
      py::arg("pure_control") = "");

  m.def(
      "ior_test",
      [](const std::vector<std::int64_t>& group_id, const std::vector<double>& saturation,
         const std::vector<int>& z, const std::vector<int>& d, const std::vector<double>& y) {
        return to_json(ior_test(data_from_columns(group_id, saturation, z, d, y))).dump();
      },
      py::arg("group_id"), py::arg("saturation"), py::arg("z"), py::arg("d"), py::arg("y"));

  m.def(
      "validate_design",
      [](const std::string& config, const std::vector<int>& n, int cbar_points, double threshold) {
        const AppConfig cfg = config_from(config);
        if (cbar_points < 2) throw ValidationError("cbar_points must be at least 2");
        std::vector<double> cbar(static_cast<std::size_t>(cbar_points));
        for (int i = 0; i < cbar_points; ++i) cbar[std::size_t(i)] = double(i) / (cbar_points - 1);
        return to_json(validate_design(cfg.require_design(), BasisSpec::from_name(cfg.basis), n, cbar,
                                       threshold))
            .dump();
      },
      py::arg("config"), py::arg("n") = std::vector<int>{11, 21, 101}, py::arg("cbar_points") = 11,
      py::arg("threshold") = 1e-10);

  m.def(
      "montecarlo",
      [](const std::string& config, std::optional<int> reps, std::optional<int> jobs,
         std::optional<std::size_t> oracle_draws) {
        AppConfig cfg = config_from(config);
        MCOptions opts;
        opts.reps = reps.value_or(cfg.mc.reps);
        opts.jobs = jobs.value_or(cfg.mc.jobs);
        opts.oracle_draws = oracle_draws.value_or(cfg.mc.oracle_draws);
        opts.estimator = cfg.estimation.options();
        MCReport report;
        {
          py::gil_scoped_release release;
          report = run_mc(cfg.require_sim(), opts);
        }
        return to_json(report).dump();
      },
      py::arg("config"), py::arg("reps") = py::none(), py::arg("jobs") = py::none(),
      py::arg("oracle_draws") = py::none());

  m.def(
      "q_exact",
      [](const std::string& config, double cbar, int n, bool condition_on_positive) {
        const AppConfig cfg = config_from(config);
        const MomentMatrices mm = q_exact(BasisSpec::from_name(cfg.basis), cbar, n, cfg.require_design(),
                                          condition_on_positive);
        return py::make_tuple(mm.q0, mm.q1, mm.q);
      },
      py::arg("config"), py::arg("cbar"), py::arg("n"), py::arg("condition_on_positive") = false);
}
