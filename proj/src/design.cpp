#include "sativ/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sativ/error.hpp"
#include "sativ/moments.hpp"

namespace sativ {

namespace {

void check_saturations(const std::vector<double>& s) {
  if (s.empty()) throw ValidationError("design has no saturations");
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("saturation " + std::to_string(v) + " outside [0, 1]");
    }
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (s[i] == s[j]) throw ValidationError("saturations must be pairwise distinct");
    }
  }
}

}  // namespace

SaturationDesign::SaturationDesign(std::vector<double> s, std::vector<double> w,
                                   std::optional<std::vector<int>> m)
    : saturations_(std::move(s)), weights_(std::move(w)), counts_(std::move(m)) {}

SaturationDesign SaturationDesign::from_probabilities(std::vector<double> saturations,
                                                      std::vector<double> probabilities) {
  check_saturations(saturations);
  if (probabilities.size() != saturations.size()) {
    throw ValidationError("design needs one probability per saturation");
  }
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw ValidationError("saturation probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("saturation probabilities must sum to 1 (got " + std::to_string(total) +
                          ")");
  }
  return SaturationDesign(std::move(saturations), std::move(probabilities), std::nullopt);
}

SaturationDesign SaturationDesign::from_counts(std::vector<double> saturations,
                                               std::vector<int> counts) {
  check_saturations(saturations);
  if (counts.size() != saturations.size()) {
    throw ValidationError("design needs one count per saturation");
  }
  long total = 0;
  for (int m : counts) {
    if (m < 0) throw ValidationError("saturation counts must be nonnegative");
    total += m;
  }
  if (total == 0) throw ValidationError("saturation counts sum to zero");
  std::vector<double> w(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) w[j] = static_cast<double>(counts[j]) / total;
  return SaturationDesign(std::move(saturations), std::move(w), std::move(counts));
}

double SaturationDesign::moment(int a, int b) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < size(); ++j) {
    const double s = saturations_[j];
    acc += weights_[j] * std::pow(s, a) * std::pow(1.0 - s, b);
  }
  return acc;
}

bool SaturationDesign::has_pure_control() const {
  for (std::size_t j = 0; j < size(); ++j) {
    if (saturations_[j] == 0.0 && weights_[j] > 0.0) return true;
  }
  return false;
}

int SaturationDesign::interior_count() const {
  int k = 0;
  for (std::size_t j = 0; j < size(); ++j) {
    if (saturations_[j] > 0.0 && saturations_[j] < 1.0 && weights_[j] > 0.0) ++k;
  }
  return k;
}

bool SaturationDesign::is_cluster_randomized() const {
  for (std::size_t j = 0; j < size(); ++j) {
    if (weights_[j] > 0.0 && saturations_[j] != 0.0 && saturations_[j] != 1.0) return false;
  }
  return true;
}

SaturationDesign SaturationDesign::conditional_on_positive() const {
  std::vector<double> s;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t j = 0; j < size(); ++j) {
    if (saturations_[j] > 0.0) total += weights_[j];
  }
  if (!(total > 0.0)) throw ValidationError("design has no positive saturation with positive weight");
  for (std::size_t j = 0; j < size(); ++j) {
    if (saturations_[j] > 0.0) {
      s.push_back(saturations_[j]);
      w.push_back(weights_[j] / total);
    }
  }
  return SaturationDesign(std::move(s), std::move(w), std::nullopt);
}

std::optional<std::size_t> SaturationDesign::find(double s) const {
  for (std::size_t j = 0; j < size(); ++j) {
    if (std::abs(saturations_[j] - s) <= 1e-9) return j;
  }
  return std::nullopt;
}

std::vector<double> sample_saturations(const SaturationDesign& design, int num_groups,
                                       RandomStream& rng) {
  if (num_groups <= 0) throw ValidationError("number of groups must be positive");
  if (design.size() == 0) throw ValidationError("design has no saturations");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(num_groups));
  if (const auto& counts = design.counts()) {
    const int total = std::accumulate(counts->begin(), counts->end(), 0);
    if (total != num_groups) {
      throw ValidationError("saturation counts sum to " + std::to_string(total) + " but G = " +
                            std::to_string(num_groups));
    }
    for (std::size_t j = 0; j < design.size(); ++j) {
      out.insert(out.end(), static_cast<std::size_t>((*counts)[j]), design.saturations()[j]);
    }
    rng.shuffle(std::span<double>(out));
  } else {
    for (int g = 0; g < num_groups; ++g) {
      out.push_back(design.saturations()[rng.categorical(design.weights())]);
    }
  }
  return out;
}

std::vector<int> assign_offers(int n, double s, RandomStream& rng) {
  if (n < 2) throw ValidationError("groups must have at least two members");
  if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("saturation outside [0, 1]");
  std::vector<int> z(static_cast<std::size_t>(n));
  for (auto& zi : z) zi = rng.bernoulli(s) ? 1 : 0;
  return z;
}

DesignDiagnostics validate_design(const SaturationDesign& design, const BasisSpec& basis,
                                  const std::vector<int>& n_grid,
                                  const std::vector<double>& cbar_grid, double threshold) {
  DesignDiagnostics diag;
  diag.saturations = design.saturations();
  diag.weights = design.weights();
  diag.counts = design.counts();
  diag.interior_count = design.interior_count();
  diag.cluster_randomized = design.is_cluster_randomized();
  diag.threshold = threshold;

  auto relative_det = [](const Eigen::MatrixXd& m, double det) {
    const double diag_product = m.diagonal().prod();
    return diag_product > 0.0 ? det / diag_product : 0.0;
  };

  bool first = true;
  bool all_singular = true;
  for (int n : n_grid) {
    for (double cbar : cbar_grid) {
      const Eigen::MatrixXd q0 = q_extended(basis, cbar, n, design, 0);
      const Eigen::MatrixXd q1 = q_extended(basis, cbar, n, design, 1);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(q0, Eigen::EigenvaluesOnly);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(q1, Eigen::EigenvaluesOnly);
      const double det0 = e0.eigenvalues().prod();
      const double det1 = e1.eigenvalues().prod();
      const double rel0 = relative_det(q0, det0);
      const double rel1 = relative_det(q1, det1);
      const double lo = std::min(e0.eigenvalues().minCoeff(), e1.eigenvalues().minCoeff());
      const double hi = std::max(e0.eigenvalues().maxCoeff(), e1.eigenvalues().maxCoeff());
      const bool singular = lo <= 1e-12 * std::max(hi, 1.0);
      all_singular = all_singular && singular;
      if (first) {
        diag.min_relative_det_q0 = rel0;
        diag.min_relative_det_q1 = rel1;
        diag.min_det_q0 = det0;
        diag.min_det_q1 = det1;
        diag.min_eigenvalue = lo;
        first = false;
      } else {
        diag.min_relative_det_q0 = std::min(diag.min_relative_det_q0, rel0);
        diag.min_relative_det_q1 = std::min(diag.min_relative_det_q1, rel1);
        diag.min_det_q0 = std::min(diag.min_det_q0, det0);
        diag.min_det_q1 = std::min(diag.min_det_q1, det1);
        diag.min_eigenvalue = std::min(diag.min_eigenvalue, lo);
      }
    }
  }
  diag.singular_everywhere = !first && all_singular;
  diag.weak_identification =
      diag.singular_everywhere ||
      std::min(diag.min_relative_det_q0, diag.min_relative_det_q1) < threshold;
  return diag;
}

}  // namespace sativ
