#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "sativ/design.hpp"
#include "sativ/dgp.hpp"
#include "sativ/effects.hpp"
#include "sativ/estimator.hpp"
#include "sativ/montecarlo.hpp"

namespace sativ {

using Json = nlohmann::ordered_json;

struct EstimationConfig {
  std::vector<Target> targets{Target::joint, Target::complier_psi, Target::never_taker,
                              Target::population, Target::complier_theta, Target::naive_iv};
  /// Empty means "gmm when the design has a 0% arm" (the estimator default).
  std::optional<PureControlPolicy> pure_control;
  bool small_sample_correction = false;
  double max_condition = 1e12;

  EstimatorOptions options() const;
};

struct MCConfig {
  int reps = 200;
  int jobs = 1;
  std::size_t oracle_draws = 1000000;
};

/// Configuration file contents. Blocks: "design", "basis", "sim",
/// "estimation", "mc". Unknown keys anywhere are rejected.
///
///   {"design": {"saturations": [...], "counts": [...]},      // or "probs"
///    "basis": "linear",
///    "sim": {"G": 235, "n": 116, "complier_shares": [...], "complier_probs": [...],
///            "means": [4], "kappa": [4], "sigma": [4], "seed": 1},
///    "estimation": {"targets": [...], "pure_control": "gmm",
///                   "small_sample_correction": false, "max_condition": 1e12},
///    "mc": {"reps": 200, "jobs": 1, "oracle_draws": 1000000}}
struct AppConfig {
  std::optional<SaturationDesign> design;
  std::string basis = "linear";
  /// Present when the file has a "sim" block; its design is the design block.
  std::optional<SimConfig> sim;
  EstimationConfig estimation;
  MCConfig mc;

  const SaturationDesign& require_design() const;
  const SimConfig& require_sim() const;
};

AppConfig parse_config(const Json& j);
AppConfig load_config(const std::string& path);
/// Fully expanded configuration; parse_config(config_to_json(c)) reproduces c.
Json config_to_json(const AppConfig& config);

Json design_to_json(const SaturationDesign& design);
Json sim_to_json(const SimConfig& sim);

Json to_json(const EstimateResult& result);
Json to_json(const DesignDiagnostics& diag);
Json to_json(const IORTestResult& result);
Json to_json(const OracleMeans& oracle);
/// Excludes runtime so that reports are byte-stable.
Json to_json(const MCReport& report);

}  // namespace sativ
