#include "sativ/effects.hpp"

#include <cmath>

#include "sativ/error.hpp"

namespace sativ {

namespace {

constexpr double kNormalQuantile975 = 1.96;

bool is_indirect(Effect e) { return e == Effect::indirect_0 || e == Effect::indirect_1; }

}  // namespace

EffectKind parse_effect_kind(const std::string& name) {
  const auto underscore = name.find('_');
  if (underscore == std::string::npos) throw ValidationError("unknown effect kind '" + name + "'");
  const std::string head = name.substr(0, underscore);
  const std::string tail = name.substr(underscore + 1);
  EffectKind kind;
  if (head == "DE") kind.effect = Effect::direct;
  else if (head == "IE0") kind.effect = Effect::indirect_0;
  else if (head == "IE1") kind.effect = Effect::indirect_1;
  else if (head == "PO0") kind.effect = Effect::outcome_0;
  else if (head == "PO1") kind.effect = Effect::outcome_1;
  else throw ValidationError("unknown effect kind '" + name + "'");

  if (tail == "treated" || tail == "complier") kind.group = Subpopulation::complier;
  else if (tail == "population") kind.group = Subpopulation::population;
  else if (tail == "never_taker") kind.group = Subpopulation::never_taker;
  else throw ValidationError("unknown sub-population in effect kind '" + name + "'");
  return kind;
}

std::string to_string(const EffectKind& kind) {
  std::string head;
  switch (kind.effect) {
    case Effect::direct: head = "DE"; break;
    case Effect::indirect_0: head = "IE0"; break;
    case Effect::indirect_1: head = "IE1"; break;
    case Effect::outcome_0: head = "PO0"; break;
    case Effect::outcome_1: head = "PO1"; break;
  }
  const std::string tail = kind.group == Subpopulation::complier ? "treated" : to_string(kind.group);
  return head + "_" + tail;
}

bool is_identified(const EffectKind& kind) {
  switch (kind.effect) {
    case Effect::direct:
    case Effect::indirect_1:
    case Effect::outcome_1:
      return kind.group == Subpopulation::complier;
    case Effect::indirect_0:
    case Effect::outcome_0:
      return true;
  }
  return false;
}

std::vector<EffectKind> identified_kinds() {
  return {
      {Effect::direct, Subpopulation::complier},
      {Effect::indirect_0, Subpopulation::population},
      {Effect::indirect_0, Subpopulation::complier},
      {Effect::indirect_1, Subpopulation::complier},
      {Effect::indirect_0, Subpopulation::never_taker},
      {Effect::outcome_0, Subpopulation::population},
      {Effect::outcome_0, Subpopulation::complier},
      {Effect::outcome_1, Subpopulation::complier},
      {Effect::outcome_0, Subpopulation::never_taker},
  };
}

Target required_target(const EffectKind& kind) {
  if (!is_identified(kind)) {
    throw ValidationError(to_string(kind) + " is not identified under one-sided non-compliance");
  }
  switch (kind.effect) {
    case Effect::direct: return Target::joint;
    case Effect::indirect_1:
    case Effect::outcome_1: return Target::complier_psi;
    case Effect::indirect_0:
    case Effect::outcome_0:
      switch (kind.group) {
        case Subpopulation::population: return Target::population;
        case Subpopulation::complier: return Target::complier_theta;
        case Subpopulation::never_taker: return Target::never_taker;
      }
  }
  throw ValidationError("unknown effect kind");
}

Eigen::VectorXd effect_gradient(const EffectKind& kind, Target target, const BasisSpec& basis,
                                double dbar, double delta) {
  const Target needed = required_target(kind);
  // The joint estimate also carries E[theta] in its leading block.
  const bool compatible =
      target == needed || (needed == Target::population && target == Target::joint);
  if (!compatible) {
    throw ValidationError(to_string(kind) + " needs a " + to_string(needed) + " estimate, got " +
                          to_string(target));
  }
  if (!(dbar >= 0.0 && dbar <= 1.0)) throw ValidationError("dbar must lie in [0, 1]");
  const int k = basis.size();
  Eigen::VectorXd f;
  if (is_indirect(kind.effect)) {
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    if (dbar + delta > 1.0 + 1e-12) throw ValidationError("dbar + delta must not exceed 1");
    f = basis(std::min(dbar + delta, 1.0)) - basis(dbar);
  } else {
    f = basis(dbar);
  }
  const int width = target == Target::joint ? 2 * k : k;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(width);
  if (kind.effect == Effect::direct) {
    g.tail(k) = f;  // contrast block of the joint estimate
  } else {
    g.head(k) = f;
  }
  return g;
}

EffectCurve effect_curve(const EstimateResult& estimate, const BasisSpec& basis,
                         const EffectKind& kind, const std::vector<double>& grid, double delta) {
  if (grid.empty()) throw ValidationError("effect grid is empty");
  EffectCurve curve;
  curve.kind = kind;
  curve.grid = grid;
  curve.delta = is_indirect(kind.effect) ? delta : 0.0;
  curve.source_target = to_string(estimate.target);
  for (double x : grid) {
    const Eigen::VectorXd g = effect_gradient(kind, estimate.target, basis, x, delta);
    if (g.size() != estimate.coefficients.size()) {
      throw ValidationError("estimate size does not match the basis");
    }
    const double point = g.dot(estimate.coefficients);
    const double se = std::sqrt(std::max(0.0, g.dot(estimate.vcov * g)));
    curve.point.push_back(point);
    curve.se.push_back(se);
    curve.ci_low.push_back(point - kNormalQuantile975 * se);
    curve.ci_high.push_back(point + kNormalQuantile975 * se);
  }
  return curve;
}

std::vector<double> uniform_grid(int points, double upper) {
  if (points < 1) throw ValidationError("grid needs at least one point");
  if (!(upper >= 0.0 && upper <= 1.0)) throw ValidationError("grid upper end must lie in [0, 1]");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = points == 1 ? 0.0 : upper * i / (points - 1);
  }
  return grid;
}

}  // namespace sativ
