#include "sativ/model.hpp"

#include <cmath>

#include "sativ/error.hpp"

namespace sativ {

namespace {

void check_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0, 1], got " + std::to_string(x));
  }
}

void check_treatment(int d) {
  if (d != 0 && d != 1) throw ValidationError("treatment indicator must be 0 or 1");
}

}  // namespace

BasisSpec::BasisSpec(std::string name, std::vector<Function> functions)
    : name_(std::move(name)), functions_(std::move(functions)) {
  if (functions_.empty()) throw ValidationError("basis must contain at least one function");
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    for (const auto& f : functions_) {
      const double v = f(x);
      if (!std::isfinite(v)) {
        throw ValidationError("basis '" + name_ + "' is unbounded on [0, 1] near x = " +
                              std::to_string(x));
      }
      sup_norm_ = std::max(sup_norm_, std::abs(v));
    }
  }
}

BasisSpec BasisSpec::linear() {
  return BasisSpec("linear", {[](double) { return 1.0; }, [](double x) { return x; }});
}

BasisSpec BasisSpec::quadratic() {
  return BasisSpec("quadratic", {[](double) { return 1.0; }, [](double x) { return x; },
                                 [](double x) { return x * x; }});
}

BasisSpec BasisSpec::from_name(const std::string& name) {
  if (name == "linear") return linear();
  if (name == "quadratic") return quadratic();
  throw ValidationError("unknown basis '" + name + "' (expected linear or quadratic)");
}

Eigen::VectorXd BasisSpec::operator()(double x) const {
  Eigen::VectorXd out(size());
  evaluate(x, out);
  return out;
}

void BasisSpec::evaluate(double x, Eigen::Ref<Eigen::VectorXd> out) const {
  for (int k = 0; k < size(); ++k) out[k] = functions_[static_cast<std::size_t>(k)](x);
}

std::string to_string(Subpopulation label) {
  switch (label) {
    case Subpopulation::population: return "population";
    case Subpopulation::complier: return "complier";
    case Subpopulation::never_taker: return "never_taker";
  }
  return "unknown";
}

Subpopulation subpopulation_from_string(const std::string& s) {
  if (s == "population") return Subpopulation::population;
  if (s == "complier") return Subpopulation::complier;
  if (s == "never_taker") return Subpopulation::never_taker;
  throw ValidationError("unknown sub-population '" + s + "'");
}

Eigen::VectorXd MeanCoefficients::psi_mean() const {
  if (!contrast_mean) {
    throw ValidationError("E[psi] is not available for the " + to_string(label) + " label");
  }
  return theta_mean + *contrast_mean;
}

double potential_outcome(const Coefficients& coef, const BasisSpec& basis, int d, double dbar) {
  check_unit_interval(dbar, "dbar");
  check_treatment(d);
  const Eigen::VectorXd f = basis(dbar);
  return d == 1 ? f.dot(coef.psi) : f.dot(coef.theta);
}

double direct_effect(const MeanCoefficients& mean, const BasisSpec& basis, double dbar) {
  check_unit_interval(dbar, "dbar");
  if (mean.label == Subpopulation::never_taker) {
    throw ValidationError("direct effects are not identified for never-takers");
  }
  if (!mean.contrast_mean) {
    throw ValidationError("direct effect needs E[psi - theta] for the " + to_string(mean.label) +
                          " label");
  }
  return basis(dbar).dot(*mean.contrast_mean);
}

double indirect_effect(const MeanCoefficients& mean, const BasisSpec& basis, int d, double dbar,
                       double delta) {
  check_treatment(d);
  check_unit_interval(dbar, "dbar");
  if (!(delta > 0.0)) throw ValidationError("indirect effect increment must be positive");
  if (dbar + delta > 1.0 + 1e-12) throw ValidationError("dbar + delta must not exceed 1");
  if (d == 1 && mean.label == Subpopulation::never_taker) {
    throw ValidationError("IE with own treatment fixed at one is not identified for never-takers");
  }
  const Eigen::VectorXd df = basis(std::min(dbar + delta, 1.0)) - basis(dbar);
  return d == 1 ? df.dot(mean.psi_mean()) : df.dot(mean.theta_mean);
}

}  // namespace sativ
