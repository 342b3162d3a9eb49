#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "sativ/estimator.hpp"
#include "sativ/model.hpp"

namespace sativ {

enum class Effect {
  direct,            // DE(dbar)
  indirect_0,        // IE_0(dbar, delta)
  indirect_1,        // IE_1(dbar, delta)
  outcome_0,         // average Y(0, dbar)
  outcome_1,         // average Y(1, dbar)
};

/// An effect for a sub-population. `complier` is the treated sub-population:
/// under one-sided non-compliance everyone with D = 1 is a complier.
struct EffectKind {
  Effect effect = Effect::direct;
  Subpopulation group = Subpopulation::complier;
};

/// Names: DE_treated, IE0_population, IE0_treated, IE1_treated,
/// IE0_never_taker, and potential-outcome lines PO0_population,
/// PO0_treated, PO1_treated, PO0_never_taker. Other combinations parse but
/// are rejected as unidentified by effect_curve.
EffectKind parse_effect_kind(const std::string& name);
std::string to_string(const EffectKind& kind);

/// Only direct effects and d = 1 quantities for the treated, plus d = 0
/// quantities for every group, are identified.
bool is_identified(const EffectKind& kind);
/// Every identified kind, in a fixed order.
std::vector<EffectKind> identified_kinds();

/// Estimator target whose coefficients an effect kind is read from.
Target required_target(const EffectKind& kind);

struct EffectCurve {
  EffectKind kind;
  std::vector<double> grid;
  std::vector<double> point;
  std::vector<double> se;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  double delta = 0.0;
  std::string source_target;
};

/// Linear functional g with effect(dbar) = g' coefficients for the given
/// estimate layout.
Eigen::VectorXd effect_gradient(const EffectKind& kind, Target target, const BasisSpec& basis,
                                double dbar, double delta);

/// Point estimates with 95% pointwise delta-method bands (+-1.96 se).
EffectCurve effect_curve(const EstimateResult& estimate, const BasisSpec& basis,
                         const EffectKind& kind, const std::vector<double>& grid,
                         double delta = 0.1);

/// `points` equally spaced values on [0, upper].
std::vector<double> uniform_grid(int points = 101, double upper = 1.0);

}  // namespace sativ
