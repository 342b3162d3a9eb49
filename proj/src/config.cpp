#include "sativ/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "sativ/error.hpp"

namespace sativ {

namespace {

void reject_unknown(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_as(const Json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

std::array<double, 4> get_quad(const Json& j, const std::string& key, const std::string& where) {
  const auto v = get_as<std::vector<double>>(j, key, where);
  if (v.size() != 4) {
    throw ValidationError(where + "." + key + " needs 4 values (alpha, beta, gamma, delta)");
  }
  return {v[0], v[1], v[2], v[3]};
}

SaturationDesign parse_design(const Json& j) {
  reject_unknown(j, "design", {"saturations", "counts", "probs"});
  if (!j.contains("saturations")) throw ValidationError("design.saturations is required");
  const auto s = get_as<std::vector<double>>(j, "saturations", "design");
  const bool has_counts = j.contains("counts");
  const bool has_probs = j.contains("probs");
  if (has_counts == has_probs) throw ValidationError("design needs exactly one of counts or probs");
  if (has_counts) return SaturationDesign::from_counts(s, get_as<std::vector<int>>(j, "counts", "design"));
  return SaturationDesign::from_probabilities(s, get_as<std::vector<double>>(j, "probs", "design"));
}

SimConfig parse_sim(const Json& j, const SaturationDesign& design) {
  reject_unknown(j, "sim",
                 {"G", "n", "complier_shares", "complier_probs", "means", "kappa", "sigma", "seed"});
  SimConfig cfg;
  cfg.design = design;
  if (j.contains("G")) cfg.num_groups = get_as<int>(j, "G", "sim");
  if (j.contains("n")) cfg.group_size = get_as<int>(j, "n", "sim");
  if (j.contains("complier_shares")) {
    cfg.complier_shares = get_as<std::vector<double>>(j, "complier_shares", "sim");
    if (!j.contains("complier_probs")) {
      cfg.complier_probs.assign(cfg.complier_shares.size(), 1.0 / cfg.complier_shares.size());
    }
  }
  if (j.contains("complier_probs")) {
    cfg.complier_probs = get_as<std::vector<double>>(j, "complier_probs", "sim");
  }
  if (j.contains("means")) cfg.means = get_quad(j, "means", "sim");
  if (j.contains("kappa")) cfg.kappa = get_quad(j, "kappa", "sim");
  if (j.contains("sigma")) cfg.sigma = get_quad(j, "sigma", "sim");
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed", "sim");
  cfg.validate();
  return cfg;
}

PureControlPolicy policy_from_string(const std::string& s) {
  if (s == "gmm") return PureControlPolicy::gmm;
  if (s == "drop") return PureControlPolicy::drop;
  throw ValidationError("pure_control must be 'gmm' or 'drop', got '" + s + "'");
}

std::string policy_name(PureControlPolicy p) { return p == PureControlPolicy::gmm ? "gmm" : "drop"; }

EstimationConfig parse_estimation(const Json& j) {
  reject_unknown(j, "estimation", {"targets", "pure_control", "small_sample_correction", "max_condition"});
  EstimationConfig cfg;
  if (j.contains("targets")) {
    cfg.targets.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "targets", "estimation")) {
      cfg.targets.push_back(target_from_string(name));
    }
  }
  if (j.contains("pure_control")) {
    cfg.pure_control = policy_from_string(get_as<std::string>(j, "pure_control", "estimation"));
  }
  if (j.contains("small_sample_correction")) {
    cfg.small_sample_correction = get_as<bool>(j, "small_sample_correction", "estimation");
  }
  if (j.contains("max_condition")) {
    cfg.max_condition = get_as<double>(j, "max_condition", "estimation");
    if (!(cfg.max_condition > 1.0)) throw ValidationError("estimation.max_condition must exceed 1");
  }
  return cfg;
}

MCConfig parse_mc(const Json& j) {
  reject_unknown(j, "mc", {"reps", "jobs", "oracle_draws"});
  MCConfig cfg;
  if (j.contains("reps")) cfg.reps = get_as<int>(j, "reps", "mc");
  if (j.contains("jobs")) cfg.jobs = get_as<int>(j, "jobs", "mc");
  if (j.contains("oracle_draws")) cfg.oracle_draws = get_as<std::size_t>(j, "oracle_draws", "mc");
  if (cfg.reps < 2) throw ValidationError("mc.reps must be at least 2");
  if (cfg.jobs < 1) throw ValidationError("mc.jobs must be at least 1");
  return cfg;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

Json mean_json(const MeanCoefficients& m) {
  Json out{{"label", to_string(m.label)}, {"theta", vector_json(m.theta_mean)}};
  if (m.contrast_mean) out["contrast"] = vector_json(*m.contrast_mean);
  return out;
}

}  // namespace

EstimatorOptions EstimationConfig::options() const {
  EstimatorOptions o;
  if (pure_control) o.pure_control = *pure_control;
  o.small_sample_correction = small_sample_correction;
  o.max_condition = max_condition;
  return o;
}

const SaturationDesign& AppConfig::require_design() const {
  if (!design) throw ValidationError("configuration has no design block");
  return *design;
}

const SimConfig& AppConfig::require_sim() const {
  if (!sim) throw ValidationError("configuration has no sim block");
  return *sim;
}

AppConfig parse_config(const Json& j) {
  reject_unknown(j, "configuration", {"design", "basis", "sim", "estimation", "mc"});
  AppConfig cfg;
  if (j.contains("design")) cfg.design = parse_design(j.at("design"));
  if (j.contains("basis")) {
    cfg.basis = get_as<std::string>(j, "basis", "configuration");
    BasisSpec::from_name(cfg.basis);
  }
  if (j.contains("sim")) {
    if (!cfg.design) throw ValidationError("the sim block needs a design block");
    cfg.sim = parse_sim(j.at("sim"), *cfg.design);
  }
  if (j.contains("estimation")) cfg.estimation = parse_estimation(j.at("estimation"));
  if (j.contains("mc")) cfg.mc = parse_mc(j.at("mc"));
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open configuration '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("configuration '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Json design_to_json(const SaturationDesign& design) {
  Json out{{"saturations", design.saturations()}};
  if (design.counts()) {
    out["counts"] = *design.counts();
  } else {
    out["probs"] = design.weights();
  }
  return out;
}

Json sim_to_json(const SimConfig& sim) {
  return Json{{"G", sim.num_groups},
              {"n", sim.group_size},
              {"complier_shares", sim.complier_shares},
              {"complier_probs", sim.complier_probs},
              {"means", sim.means},
              {"kappa", sim.kappa},
              {"sigma", sim.sigma},
              {"seed", sim.seed}};
}

Json config_to_json(const AppConfig& config) {
  Json out = Json::object();
  if (config.design) out["design"] = design_to_json(*config.design);
  out["basis"] = config.basis;
  if (config.sim) out["sim"] = sim_to_json(*config.sim);
  Json est{{"targets", Json::array()}};
  for (Target t : config.estimation.targets) est["targets"].push_back(to_string(t));
  if (config.estimation.pure_control) est["pure_control"] = policy_name(*config.estimation.pure_control);
  est["small_sample_correction"] = config.estimation.small_sample_correction;
  est["max_condition"] = config.estimation.max_condition;
  out["estimation"] = est;
  out["mc"] = Json{{"reps", config.mc.reps},
                   {"jobs", config.mc.jobs},
                   {"oracle_draws", config.mc.oracle_draws}};
  return out;
}

Json to_json(const EstimateResult& r) {
  const auto& d = r.diagnostics;
  return Json{{"target", to_string(r.target)},
              {"names", r.names},
              {"coefficients", vector_json(r.coefficients)},
              {"se", vector_json(r.se())},
              {"vcov", matrix_json(r.vcov)},
              {"diagnostics",
               {{"groups_used", r.groups_used},
                {"individuals_used", r.individuals_used},
                {"pseudo_inverted", d.pseudo_inverted},
                {"min_abs_det", number_or_null(d.min_abs_det)},
                {"condition_number", number_or_null(d.condition_number)},
                {"dropped_pure_control_groups", d.dropped_pure_control_groups},
                {"overidentification", d.overidentification}}}};
}

Json to_json(const DesignDiagnostics& d) {
  Json out{{"saturations", d.saturations}, {"weights", d.weights}};
  if (d.counts) out["counts"] = *d.counts;
  out["interior_count"] = d.interior_count;
  out["cluster_randomized"] = d.cluster_randomized;
  out["min_relative_det_q0"] = d.min_relative_det_q0;
  out["min_relative_det_q1"] = d.min_relative_det_q1;
  out["min_det_q0"] = d.min_det_q0;
  out["min_det_q1"] = d.min_det_q1;
  out["min_eigenvalue"] = d.min_eigenvalue;
  out["singular_everywhere"] = d.singular_everywhere;
  out["weak_identification"] = d.weak_identification;
  out["threshold"] = d.threshold;
  return out;
}

Json to_json(const IORTestResult& r) {
  Json bins = Json::array();
  for (std::size_t k = 0; k < r.saturations.size(); ++k) {
    bins.push_back(Json{{"saturation", r.saturations[k]},
                        {"take_up", r.take_up[k]},
                        {"se", number_or_null(r.take_up_se[k])},
                        {"offered", r.offered[k]}});
  }
  return Json{{"bins", bins}, {"wald", r.wald}, {"df", r.df}, {"p_value", r.p_value}};
}

Json to_json(const OracleMeans& o) {
  return Json{{"population", mean_json(o.population)},
              {"complier", mean_json(o.complier)},
              {"never_taker", mean_json(o.never_taker)},
              {"complier_rate", o.complier_rate},
              {"naive_iv", o.naive_iv},
              {"draws", o.draws}};
}

Json to_json(const MCReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r{{"name", row.name},
           {"estimator", row.estimator},
           {"truth", number_or_null(row.truth)},
           {"mean", number_or_null(row.mean)},
           {"sd", number_or_null(row.sd)},
           {"coverage", row.coverage ? Json(*row.coverage) : Json("NA")},
           {"replications", row.replications}};
    if (row.structural_truth) r["structural_truth"] = number_or_null(*row.structural_truth);
    rows.push_back(r);
  }
  const auto& o = report.options;
  return Json{{"reps", o.reps},
              {"excluded_rsiv", report.excluded_rsiv},
              {"excluded_naive", report.excluded_naive},
              {"rows", rows},
              {"oracle", to_json(report.oracle)},
              {"config",
               {{"design", design_to_json(report.config.design)},
                {"sim", sim_to_json(report.config)},
                {"estimation",
                 {{"pure_control", policy_name(o.estimator.pure_control)},
                  {"small_sample_correction", o.estimator.small_sample_correction},
                  {"max_condition", o.estimator.max_condition}}},
                {"mc", {{"reps", o.reps}, {"oracle_draws", o.oracle_draws}}}}}};
}

}  // namespace sativ
