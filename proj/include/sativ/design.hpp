#pragma once

#include <optional>
#include <vector>

#include "sativ/rng.hpp"

namespace sativ {

class BasisSpec;

/// A randomized saturation design: group-level saturations s_j with
/// assignment weights, followed by per-individual Bernoulli(s) offers.
///
/// Weights always hold probabilities. When the design was given as integer
/// counts m_j they are kept in `counts` and the weights are m_j / sum(m).
class SaturationDesign {
 public:
  static SaturationDesign from_probabilities(std::vector<double> saturations,
                                             std::vector<double> probabilities);
  static SaturationDesign from_counts(std::vector<double> saturations, std::vector<int> counts);

  const std::vector<double>& saturations() const { return saturations_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::optional<std::vector<int>>& counts() const { return counts_; }
  std::size_t size() const { return saturations_.size(); }

  /// E[S^a (1 - S)^b] under the weights.
  double moment(int a, int b) const;

  bool has_pure_control() const;
  /// Number of saturations strictly inside (0, 1).
  int interior_count() const;
  /// Every saturation is 0 or 1.
  bool is_cluster_randomized() const;

  /// Same saturations with weights renormalised over s > 0 (pure control dropped).
  SaturationDesign conditional_on_positive() const;

  /// Index of the saturation equal to s within 1e-9, if any.
  std::optional<std::size_t> find(double s) const;

 private:
  SaturationDesign(std::vector<double> s, std::vector<double> w, std::optional<std::vector<int>> m);

  std::vector<double> saturations_;
  std::vector<double> weights_;
  std::optional<std::vector<int>> counts_;
};

/// Saturations for G groups. With counts, exactly m_j groups get s_j in a
/// uniformly random arrangement (counts must sum to G); with probabilities,
/// i.i.d. draws.
std::vector<double> sample_saturations(const SaturationDesign& design, int num_groups,
                                       RandomStream& rng);

/// i.i.d. Bernoulli(s) offers for a group of size n >= 2.
std::vector<int> assign_offers(int n, double s, RandomStream& rng);

struct DesignDiagnostics {
  std::vector<double> saturations;
  std::vector<double> weights;
  std::optional<std::vector<int>> counts;
  int interior_count = 0;
  bool cluster_randomized = false;

  /// Minimum over the grid of det(Q_z) / prod(diag Q_z); 0 when a diagonal vanishes.
  double min_relative_det_q0 = 0.0;
  double min_relative_det_q1 = 0.0;
  /// Minimum raw determinants over the grid.
  double min_det_q0 = 0.0;
  double min_det_q1 = 0.0;
  /// Smallest eigenvalue of Q0 or Q1 seen anywhere on the grid.
  double min_eigenvalue = 0.0;

  /// Q0 or Q1 is numerically singular at every grid point.
  bool singular_everywhere = false;
  /// Some grid point has a relative determinant below the threshold.
  bool weak_identification = false;
  double threshold = 1e-10;
};

/// Evaluates the unconditional Q0 and Q1 on every (cbar, n) grid point and
/// summarises identification.
DesignDiagnostics validate_design(const SaturationDesign& design, const BasisSpec& basis,
                                  const std::vector<int>& n_grid,
                                  const std::vector<double>& cbar_grid, double threshold = 1e-10);

}  // namespace sativ
