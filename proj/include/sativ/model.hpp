#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sativ {

/// K bounded basis functions on [0, 1] used to expand potential outcomes in
/// the neighbour take-up share.
class BasisSpec {
 public:
  using Function = std::function<double(double)>;

  /// Checks every function is finite on a 1001-point grid of [0, 1].
  BasisSpec(std::string name, std::vector<Function> functions);

  /// f(x) = (1, x).
  static BasisSpec linear();
  /// f(x) = (1, x, x^2).
  static BasisSpec quadratic();
  /// "linear" or "quadratic"; throws ValidationError otherwise.
  static BasisSpec from_name(const std::string& name);

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(functions_.size()); }
  bool is_linear() const { return name_ == "linear"; }

  Eigen::VectorXd operator()(double x) const;
  void evaluate(double x, Eigen::Ref<Eigen::VectorXd> out) const;

  /// max_k sup |f_k| on the construction grid.
  double sup_norm() const { return sup_norm_; }

 private:
  std::string name_;
  std::vector<Function> functions_;
  double sup_norm_ = 0.0;
};

/// Individual random coefficients: theta for the untreated arm, psi for the
/// treated arm. For the linear basis theta = (alpha, gamma) and
/// psi - theta = (beta, delta).
struct Coefficients {
  Eigen::VectorXd theta;
  Eigen::VectorXd psi;

  Eigen::VectorXd contrast() const { return psi - theta; }
};

enum class Subpopulation { population, complier, never_taker };

std::string to_string(Subpopulation label);
Subpopulation subpopulation_from_string(const std::string& s);

/// Average coefficients for a sub-population. `contrast_mean` is E[psi - theta]
/// and is only present where it is identified (or supplied externally).
struct MeanCoefficients {
  Subpopulation label = Subpopulation::population;
  Eigen::VectorXd theta_mean;
  std::optional<Eigen::VectorXd> contrast_mean;

  Eigen::VectorXd psi_mean() const;
};

/// f(dbar)' [(1 - d) theta + d psi].
double potential_outcome(const Coefficients& coef, const BasisSpec& basis, int d, double dbar);

/// f(dbar)' E[psi - theta]. Never identified for never-takers.
double direct_effect(const MeanCoefficients& mean, const BasisSpec& basis, double dbar);

/// [f(dbar + delta) - f(dbar)]' E[(1 - d) theta + d psi]; delta > 0 and
/// dbar + delta <= 1. d = 1 needs psi, so it is rejected for never-takers.
double indirect_effect(const MeanCoefficients& mean, const BasisSpec& basis, int d, double dbar,
                       double delta);

}  // namespace sativ
