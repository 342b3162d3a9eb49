#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sativ/design.hpp"
#include "sativ/model.hpp"
#include "sativ/rng.hpp"

namespace sativ {

/// Per-individual latent truth kept alongside simulated data.
struct LatentTruth {
  std::vector<int> complier;
  /// Columns alpha, beta, gamma, delta (theta = (alpha, gamma), psi - theta = (beta, delta)).
  std::vector<std::array<double, 4>> coefficients;
};

struct Group {
  std::int64_t id = 0;
  double saturation = 0.0;
  std::vector<int> z;
  std::vector<int> d;
  std::vector<double> y;
  std::optional<LatentTruth> latent;

  int size() const { return static_cast<int>(z.size()); }
  /// Leave-one-out take-up share for member i.
  double dbar(int i) const;
  /// Leave-one-out complier share for member i; needs latent truth.
  double cbar(int i) const;
};

/// Grouped observations sorted by group id; the sole input to the estimators.
struct ExperimentData {
  std::vector<Group> groups;

  std::size_t num_individuals() const;
  bool has_latent() const;
  /// Checks n >= 2, binary z/d, d <= z, and equal vector lengths.
  void validate() const;
};

/// The linear random-coefficients DGP. Coefficient j of individual i in group g is
///
///   mean_j + [ (Cbar_ig - E C) / sd(C) * k_j / sqrt(k_j^2 + 1) + u / sqrt(k_j^2 + 1) ] sigma_j
///
/// with u ~ N(0, 1), Cbar_ig the leave-one-out complier share and (E C, sd C)
/// the moments of the group-level complier-share distribution. A group with
/// share c has exactly round(n c) compliers at random positions.
struct SimConfig {
  int num_groups = 235;
  int group_size = 116;
  SaturationDesign design = SaturationDesign::from_counts({0.0, 0.25, 0.5, 0.75, 1.0}, {47, 47, 47, 47, 47});
  std::vector<double> complier_shares{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> complier_probs{0.2, 0.2, 0.2, 0.2, 0.2};
  /// (alpha, beta, gamma, delta).
  std::array<double, 4> means{0.5, 0.2, -0.7, 0.8};
  std::array<double, 4> kappa{0.0, 0.0, 1.2, 1.5};
  std::array<double, 4> sigma{0.3, 0.3, 0.2, 0.4};
  std::uint64_t seed = 20240601;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;
  double complier_share_mean() const;
  double complier_share_sd() const;
};

/// One draw of a random coefficient (see SimConfig).
double draw_coefficient(double mean, double kappa, double sigma, double cbar_ig,
                        double cbar_mean, double cbar_sd, RandomStream& rng);

/// Simulates one experiment. Group g draws from rng_root.split(g); the
/// saturation assignment uses rng_root.split("design").
ExperimentData simulate_experiment(const SimConfig& cfg, const RandomStream& rng_root);
/// Same with the stream rooted at cfg.seed.
ExperimentData simulate_experiment(const SimConfig& cfg);

/// Brute-force ground truth from the DGP, averaged over simulated individuals.
struct OracleMeans {
  MeanCoefficients population;
  MeanCoefficients complier;
  MeanCoefficients never_taker;
  /// Share of compliers.
  double complier_rate = 0.0;
  /// Naive IV estimands (1, D, Dbar, D Dbar) on (1, Z, S, ZS):
  /// alpha, E[beta|C=1], E[gamma] + Cov(Cbar, gamma)/E Cbar,
  /// E[delta|C=1] + Cov(Cbar, delta|C=1)/E[Cbar|C=1].
  std::array<double, 4> naive_iv{};
  std::size_t draws = 0;
};

/// Averages over at least `n_draws` simulated individuals (whole groups,
/// stratified by complier share and reweighted by the share probabilities).
OracleMeans oracle_subpopulation_means(const SimConfig& cfg, std::size_t n_draws);

}  // namespace sativ
