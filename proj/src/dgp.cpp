#include "sativ/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "sativ/error.hpp"

namespace sativ {

namespace {

// Exact count n * share when that is an integer, otherwise the nearest
// integer (n = 116 with share 0.1 gives 12 compliers).
int complier_count(double share, int n) { return static_cast<int>(std::lround(share * n)); }

/// Complier flags and coefficients for one group; shared by the simulator
/// and the oracle so both follow the same DGP.
struct GroupDraw {
  std::vector<int> complier;
  std::vector<std::array<double, 4>> coefficients;
  int num_compliers = 0;
};

GroupDraw draw_group_population(const SimConfig& cfg, RandomStream& rng, double cbar_mean,
                                double cbar_sd, std::optional<std::size_t> forced_share = {}) {
  const int n = cfg.group_size;
  GroupDraw out;
  const std::size_t share_index = forced_share ? *forced_share : rng.categorical(cfg.complier_probs);
  out.num_compliers = complier_count(cfg.complier_shares[share_index], n);
  out.complier.assign(static_cast<std::size_t>(n), 0);
  std::fill_n(out.complier.begin(), out.num_compliers, 1);
  rng.shuffle(std::span<int>(out.complier));

  out.coefficients.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double cbar_ig = (out.num_compliers - out.complier[ui]) / double(n - 1);
    for (std::size_t j = 0; j < 4; ++j) {
      out.coefficients[ui][j] =
          draw_coefficient(cfg.means[j], cfg.kappa[j], cfg.sigma[j], cbar_ig, cbar_mean, cbar_sd, rng);
    }
  }
  return out;
}

}  // namespace

double Group::dbar(int i) const {
  const int total = std::accumulate(d.begin(), d.end(), 0);
  return (total - d[static_cast<std::size_t>(i)]) / double(size() - 1);
}

double Group::cbar(int i) const {
  if (!latent) throw ValidationError("group has no latent complier flags");
  const auto& c = latent->complier;
  const int total = std::accumulate(c.begin(), c.end(), 0);
  return (total - c[static_cast<std::size_t>(i)]) / double(size() - 1);
}

std::size_t ExperimentData::num_individuals() const {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.z.size();
  return total;
}

bool ExperimentData::has_latent() const {
  if (groups.empty()) return false;
  for (const auto& g : groups) {
    if (!g.latent) return false;
  }
  return true;
}

void ExperimentData::validate() const {
  for (const auto& g : groups) {
    const std::string where = "group " + std::to_string(g.id);
    if (g.z.size() != g.d.size() || g.z.size() != g.y.size()) {
      throw ValidationError(where + ": z, d and y have different lengths");
    }
    if (g.size() < 2) throw ValidationError(where + ": groups must have at least two members");
    if (!(g.saturation >= 0.0 && g.saturation <= 1.0)) {
      throw ValidationError(where + ": saturation outside [0, 1]");
    }
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      if ((g.z[i] != 0 && g.z[i] != 1) || (g.d[i] != 0 && g.d[i] != 1)) {
        throw ValidationError(where + ": z and d must be binary");
      }
      if (g.d[i] > g.z[i]) {
        throw ValidationError(where + ", member " + std::to_string(i) +
                              ": one-sided non-compliance violated (d = 1 with z = 0)");
      }
    }
  }
}

void SimConfig::validate() const {
  if (num_groups < 2) throw ValidationError("sim: G must be at least 2");
  if (group_size < 2) throw ValidationError("sim: n must be at least 2");
  if (complier_shares.empty()) throw ValidationError("sim: complier_shares is empty");
  if (complier_probs.size() != complier_shares.size()) {
    throw ValidationError("sim: complier_probs must match complier_shares in length");
  }
  double total = 0.0;
  for (double p : complier_probs) {
    if (!(p >= 0.0)) throw ValidationError("sim: complier_probs must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("sim: complier_probs must sum to 1");
  for (double c : complier_shares) {
    if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("sim: complier shares must lie in [0, 1]");
  }
  for (std::size_t j = 0; j < 4; ++j) {
    if (!(sigma[j] >= 0.0)) throw ValidationError("sim: sigma entries must be nonnegative");
    if (kappa[j] != 0.0 && sigma[j] != 0.0 && !(complier_share_sd() > 0.0)) {
      throw ValidationError("sim: nonzero kappa needs a nondegenerate complier-share distribution");
    }
  }
  if (const auto& counts = design.counts()) {
    if (std::accumulate(counts->begin(), counts->end(), 0) != num_groups) {
      throw ValidationError("sim: design counts must sum to G");
    }
  }
}

double SimConfig::complier_share_mean() const {
  double m = 0.0;
  for (std::size_t j = 0; j < complier_shares.size(); ++j) m += complier_probs[j] * complier_shares[j];
  return m;
}

double SimConfig::complier_share_sd() const {
  const double m = complier_share_mean();
  double v = 0.0;
  for (std::size_t j = 0; j < complier_shares.size(); ++j) {
    v += complier_probs[j] * (complier_shares[j] - m) * (complier_shares[j] - m);
  }
  return std::sqrt(v);
}

double draw_coefficient(double mean, double kappa, double sigma, double cbar_ig, double cbar_mean,
                        double cbar_sd, RandomStream& rng) {
  if (kappa != 0.0 && sigma != 0.0 && !(cbar_sd > 0.0)) {
    throw ValidationError("draw_coefficient: complier-share sd must be positive when kappa != 0");
  }
  const double u = rng.normal();
  if (sigma == 0.0) return mean;
  const double scale = std::sqrt(kappa * kappa + 1.0);
  const double standardized = kappa == 0.0 ? 0.0 : (cbar_ig - cbar_mean) / cbar_sd;
  return mean + (standardized * kappa / scale + u / scale) * sigma;
}

ExperimentData simulate_experiment(const SimConfig& cfg, const RandomStream& rng_root) {
  cfg.validate();
  RandomStream design_rng = rng_root.split("design");
  const std::vector<double> saturations =
      sample_saturations(cfg.design, cfg.num_groups, design_rng);
  const double cbar_mean = cfg.complier_share_mean();
  const double cbar_sd = cfg.complier_share_sd();
  const int n = cfg.group_size;

  ExperimentData data;
  data.groups.resize(static_cast<std::size_t>(cfg.num_groups));
  for (int g = 0; g < cfg.num_groups; ++g) {
    RandomStream rng = rng_root.split(static_cast<std::uint64_t>(g));
    GroupDraw draw = draw_group_population(cfg, rng, cbar_mean, cbar_sd);

    Group& group = data.groups[static_cast<std::size_t>(g)];
    group.id = g;
    group.saturation = saturations[static_cast<std::size_t>(g)];
    group.z = assign_offers(n, group.saturation, rng);
    group.d.resize(static_cast<std::size_t>(n));
    int takers = 0;
    for (std::size_t i = 0; i < group.z.size(); ++i) {
      group.d[i] = draw.complier[i] * group.z[i];
      takers += group.d[i];
    }
    group.y.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < group.z.size(); ++i) {
      const auto& b = draw.coefficients[i];
      const double dbar = (takers - group.d[i]) / double(n - 1);
      const double d = group.d[i];
      group.y[i] = b[0] + b[1] * d + b[2] * dbar + b[3] * d * dbar;
    }
    group.latent = LatentTruth{std::move(draw.complier), std::move(draw.coefficients)};
  }
  return data;
}

ExperimentData simulate_experiment(const SimConfig& cfg) {
  return simulate_experiment(cfg, RandomStream(cfg.seed));
}

OracleMeans oracle_subpopulation_means(const SimConfig& cfg, std::size_t n_draws) {
  if (n_draws < 100000) throw ValidationError("oracle needs at least 1e5 draws");
  cfg.validate();
  const double cbar_mean = cfg.complier_share_mean();
  const double cbar_sd = cfg.complier_share_sd();
  const int n = cfg.group_size;
  const RandomStream root = RandomStream(cfg.seed).split("oracle");

  // Stratified over the complier-share support: each share gets a number of
  // groups proportional to its probability and sums are reweighted by the
  // exact probabilities, so the truths carry no share-sampling noise.
  // Slots: all individuals (0), compliers (1), never-takers (2).
  std::array<std::array<double, 4>, 3> coef_sum{};
  std::array<double, 3> count{};
  std::array<double, 3> cbar_sum{};
  std::array<std::array<double, 4>, 3> cbar_coef_sum{};

  const double groups_needed = std::ceil(double(n_draws) / n);
  std::size_t drawn = 0;
  for (std::size_t j = 0; j < cfg.complier_shares.size(); ++j) {
    const double p = cfg.complier_probs[j];
    if (p <= 0.0) continue;
    const auto groups = static_cast<std::uint64_t>(std::max(1.0, std::ceil(groups_needed * p)));
    const double weight = p / double(groups);
    const RandomStream stratum = root.split(j);
    for (std::uint64_t b = 0; b < groups; ++b) {
      RandomStream rng = stratum.split(b);
      const GroupDraw draw = draw_group_population(cfg, rng, cbar_mean, cbar_sd, j);
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double cbar_ig = (draw.num_compliers - draw.complier[ui]) / double(n - 1);
        const std::size_t label = draw.complier[ui] == 1 ? 1 : 2;
        for (std::size_t slot : {std::size_t{0}, label}) {
          count[slot] += weight;
          cbar_sum[slot] += weight * cbar_ig;
          for (std::size_t k = 0; k < 4; ++k) {
            coef_sum[slot][k] += weight * draw.coefficients[ui][k];
            cbar_coef_sum[slot][k] += weight * cbar_ig * draw.coefficients[ui][k];
          }
        }
      }
      drawn += static_cast<std::size_t>(n);
    }
  }

  auto mean_of = [&](std::size_t slot, std::size_t j) {
    return count[slot] > 0 ? coef_sum[slot][j] / count[slot] : std::nan("");
  };
  auto make = [&](std::size_t slot, Subpopulation label) {
    MeanCoefficients m;
    m.label = label;
    m.theta_mean = Eigen::Vector2d(mean_of(slot, 0), mean_of(slot, 2));
    m.contrast_mean = Eigen::VectorXd(Eigen::Vector2d(mean_of(slot, 1), mean_of(slot, 3)));
    return m;
  };

  OracleMeans out;
  out.population = make(0, Subpopulation::population);
  out.complier = make(1, Subpopulation::complier);
  out.never_taker = make(2, Subpopulation::never_taker);
  out.complier_rate = count[1] / count[0];
  out.draws = drawn;

  auto covariance_ratio = [&](std::size_t slot, std::size_t j) {
    const double ec = cbar_sum[slot] / count[slot];
    const double cov = cbar_coef_sum[slot][j] / count[slot] - ec * mean_of(slot, j);
    return cov / ec;
  };
  out.naive_iv = {mean_of(0, 0), mean_of(1, 1), mean_of(0, 2) + covariance_ratio(0, 2),
                  count[1] > 0 ? mean_of(1, 3) + covariance_ratio(1, 3) : std::nan("")};
  return out;
}

}  // namespace sativ
