#include "sativ/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sativ/config.hpp"
#include "sativ/data_io.hpp"
#include "sativ/effects.hpp"
#include "sativ/error.hpp"
#include "sativ/montecarlo.hpp"

namespace sativ {

namespace {

// Writes to `path`, or to `fallback` when path is empty or "-".
void emit(const std::string& path, std::ostream& fallback, const std::string& text) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  f << text;
}

// CSV outputs keep their fixed schema; the configuration goes next to them.
void emit_sidecar(const std::string& path, const Json& echo) {
  if (path.empty() || path == "-") return;
  emit(path + ".config.json", std::cout, echo.dump(2) + "\n");
}

std::optional<PureControlPolicy> parse_policy(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "gmm") return PureControlPolicy::gmm;
  if (s == "drop") return PureControlPolicy::drop;
  throw ValidationError("--pure-control must be gmm or drop");
}

struct SimulateArgs {
  std::string config, out, latent;
  std::optional<std::uint64_t> seed;
};

struct EstimateArgs {
  std::string design, data, target = "joint", pure_control, out;
  bool small_sample = false;
};

struct EffectsArgs {
  std::string design, data, pure_control, out;
  std::vector<std::string> kinds;
  int points = 101;
  double delta = 0.1;
};

struct MonteCarloArgs {
  std::string config, out, replications_csv;
  std::optional<int> reps, jobs;
  std::optional<std::size_t> oracle_draws;
};

struct IorArgs {
  std::string data, out;
};

struct ValidateArgs {
  std::string config, out;
  std::vector<int> n{11, 21, 101};
  int cbar_points = 11;
  double threshold = 1e-10;
};

AppConfig estimation_config(const std::string& path, const std::string& policy, bool small_sample) {
  AppConfig cfg = load_config(path);
  cfg.require_design();
  if (auto p = parse_policy(policy)) cfg.estimation.pure_control = p;
  if (small_sample) cfg.estimation.small_sample_correction = true;
  return cfg;
}

void run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  AppConfig cfg = load_config(a.config);
  SimConfig sim = cfg.require_sim();
  if (a.seed) sim.seed = *a.seed;
  cfg.sim = sim;
  const ExperimentData data = simulate_experiment(sim);
  std::ostringstream csv;
  write_data_csv(data, csv);
  emit(a.out, out, csv.str());
  emit_sidecar(a.out, config_to_json(cfg));
  if (!a.latent.empty()) {
    std::ostringstream latent;
    write_latent_csv(data, latent);
    emit(a.latent, out, latent.str());
  }
  err << "simulated " << data.groups.size() << " groups, " << data.num_individuals()
      << " individuals\n";
}

void run_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = estimation_config(a.design, a.pure_control, a.small_sample);
  const ExperimentData data = ingest_csv(a.data);
  const Target target = target_from_string(a.target);
  const BasisSpec basis = BasisSpec::from_name(cfg.basis);
  const EstimateResult result =
      estimate(data, basis, cfg.require_design(), target, cfg.estimation.options());
  Json j = to_json(result);
  Json echo = config_to_json(cfg);
  echo["data"] = a.data;
  j["config"] = echo;
  emit(a.out, out, j.dump(2) + "\n");
  if (result.diagnostics.pseudo_inverted > 0) {
    err << "warning: " << result.diagnostics.pseudo_inverted
        << " instrument evaluations used a pseudo-inverse\n";
  }
}

void run_effects(const EffectsArgs& a, std::ostream& out, std::ostream&) {
  const AppConfig cfg = estimation_config(a.design, a.pure_control, false);
  const ExperimentData data = ingest_csv(a.data);
  const BasisSpec basis = BasisSpec::from_name(cfg.basis);
  std::vector<EffectKind> kinds;
  if (a.kinds.empty()) {
    kinds = identified_kinds();
  } else {
    for (const auto& k : a.kinds) kinds.push_back(parse_effect_kind(k));
  }
  // Fail on unidentified kinds before any estimation work.
  for (const auto& k : kinds) required_target(k);

  std::map<Target, EstimateResult> cache;
  std::ostringstream csv;
  csv << "kind,dbar,estimate,se,ci_low,ci_high\n";
  for (const auto& kind : kinds) {
    const Target target = required_target(kind);
    auto it = cache.find(target);
    if (it == cache.end()) {
      it = cache.emplace(target, estimate(data, basis, cfg.require_design(), target,
                                          cfg.estimation.options()))
               .first;
    }
    const bool indirect = kind.effect == Effect::indirect_0 || kind.effect == Effect::indirect_1;
    const auto grid = uniform_grid(a.points, indirect ? 1.0 - a.delta : 1.0);
    const EffectCurve curve = effect_curve(it->second, basis, kind, grid, a.delta);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      csv << to_string(kind) << ',' << format_double(curve.grid[i]) << ','
          << format_double(curve.point[i]) << ',' << format_double(curve.se[i]) << ','
          << format_double(curve.ci_low[i]) << ',' << format_double(curve.ci_high[i]) << '\n';
    }
  }
  emit(a.out, out, csv.str());
  Json echo = config_to_json(cfg);
  echo["data"] = a.data;
  echo["grid_points"] = a.points;
  echo["delta"] = a.delta;
  emit_sidecar(a.out, echo);
}

void run_montecarlo(const MonteCarloArgs& a, std::ostream& out, std::ostream& err) {
  AppConfig cfg = load_config(a.config);
  const SimConfig& sim = cfg.require_sim();
  if (a.reps) cfg.mc.reps = *a.reps;
  if (a.jobs) cfg.mc.jobs = *a.jobs;
  if (a.oracle_draws) cfg.mc.oracle_draws = *a.oracle_draws;
  MCOptions options;
  options.reps = cfg.mc.reps;
  options.jobs = cfg.mc.jobs;
  options.oracle_draws = cfg.mc.oracle_draws;
  options.estimator = cfg.estimation.options();
  const MCReport report = run_mc(sim, options);
  emit(a.out, out, to_json(report).dump(2) + "\n");
  if (!a.replications_csv.empty()) {
    std::ostringstream csv;
    write_replications_csv(report, csv);
    emit(a.replications_csv, out, csv.str());
  }
  err << "montecarlo: " << options.reps << " replications in " << report.runtime_seconds
      << " s (" << report.excluded_rsiv << " RS-IV and " << report.excluded_naive
      << " naive replications excluded as singular)\n";
}

void run_ior(const IorArgs& a, std::ostream& out, std::ostream&) {
  const ExperimentData data = ingest_csv(a.data);
  Json j = to_json(ior_test(data));
  j["config"] = Json{{"data", a.data}};
  emit(a.out, out, j.dump(2) + "\n");
}

void run_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = load_config(a.config);
  if (a.cbar_points < 2) throw ValidationError("--cbar-points must be at least 2");
  std::vector<double> cbar(static_cast<std::size_t>(a.cbar_points));
  for (int i = 0; i < a.cbar_points; ++i) cbar[std::size_t(i)] = double(i) / (a.cbar_points - 1);
  const DesignDiagnostics d = validate_design(cfg.require_design(), BasisSpec::from_name(cfg.basis),
                                              a.n, cbar, a.threshold);
  Json j = to_json(d);
  j["config"] = config_to_json(cfg);
  emit(a.out, out, j.dump(2) + "\n");
  if (d.singular_everywhere) err << "design does not identify the model (Q singular everywhere)\n";
  else if (d.weak_identification) err << "warning: weak identification on part of the grid\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized saturation experiments: simulation and spillover IV estimation", "sativ"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate an experiment to CSV");
  simulate->add_option("--config", sim.config, "JSON configuration with design and sim blocks")->required();
  simulate->add_option("--out", sim.out, "Data CSV (default stdout)");
  simulate->add_option("--latent", sim.latent, "Also write latent truth CSV");
  simulate->add_option("--seed", sim.seed, "Override sim.seed");

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate mean coefficients");
  estimate_cmd->add_option("--design", est.design, "JSON configuration with a design block")->required();
  estimate_cmd->add_option("--data", est.data, "Data CSV")->required();
  estimate_cmd->add_option("--target", est.target, "Estimation target")
      ->check(CLI::IsMember({"joint", "complier-psi", "never-taker", "population", "complier-theta", "naive"}));
  estimate_cmd->add_option("--pure-control", est.pure_control, "Pure-control handling")
      ->check(CLI::IsMember({"drop", "gmm"}));
  estimate_cmd->add_flag("--small-sample", est.small_sample, "Scale the cluster covariance by G/(G-1)");
  estimate_cmd->add_option("--out", est.out, "Result JSON (default stdout)");

  EffectsArgs eff;
  auto* effects = app.add_subcommand("effects", "Direct and indirect effect curves as CSV");
  effects->add_option("--design", eff.design, "JSON configuration with a design block")->required();
  effects->add_option("--data", eff.data, "Data CSV")->required();
  effects->add_option("--kind", eff.kinds, "Effect kind (repeatable; default all identified)");
  effects->add_option("--grid-points", eff.points, "Grid size")->check(CLI::PositiveNumber);
  effects->add_option("--delta", eff.delta, "Increment for indirect effects")->check(CLI::Range(1e-9, 1.0));
  effects->add_option("--pure-control", eff.pure_control, "Pure-control handling")
      ->check(CLI::IsMember({"drop", "gmm"}));
  effects->add_option("--out", eff.out, "Curve CSV (default stdout)");

  MonteCarloArgs mc;
  auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo bias and coverage study");
  montecarlo->add_option("--config", mc.config, "JSON configuration with design and sim blocks")->required();
  montecarlo->add_option("--reps", mc.reps, "Replications (overrides mc.reps)");
  montecarlo->add_option("--jobs", mc.jobs, "Worker threads (overrides mc.jobs)");
  montecarlo->add_option("--oracle-draws", mc.oracle_draws, "Individuals drawn for oracle truths");
  montecarlo->add_option("--out", mc.out, "Report JSON (default stdout)");
  montecarlo->add_option("--replications-csv", mc.replications_csv, "Per-replication estimates CSV");

  IorArgs ior;
  auto* ior_cmd = app.add_subcommand("ior-test", "Test that take-up does not depend on saturation");
  ior_cmd->add_option("--data", ior.data, "Data CSV")->required();
  ior_cmd->add_option("--out", ior.out, "Result JSON (default stdout)");

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate-design", "Check that a design identifies the model");
  validate->add_option("--config", val.config, "JSON configuration with a design block")->required();
  validate->add_option("--n", val.n, "Group sizes to check")->check(CLI::Range(2, 100000000));
  validate->add_option("--cbar-points", val.cbar_points, "Points on the complier-share grid");
  validate->add_option("--threshold", val.threshold, "Relative determinant flagged as weak");
  validate->add_option("--out", val.out, "Result JSON (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) run_simulate(sim, out, err);
    else if (*estimate_cmd) run_estimate(est, out, err);
    else if (*effects) run_effects(eff, out, err);
    else if (*montecarlo) run_montecarlo(mc, out, err);
    else if (*ior_cmd) run_ior(ior, out, err);
    else if (*validate) run_validate(val, out, err);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace sativ
