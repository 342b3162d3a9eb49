#include "sativ/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include <boost/math/distributions/chi_squared.hpp>

#include "sativ/error.hpp"
#include "sativ/moments.hpp"

namespace sativ {

namespace {

bool is_pure_control(const Group& g) { return g.saturation <= 1e-12; }

bool has_pure_control_groups(const ExperimentData& data) {
  return std::any_of(data.groups.begin(), data.groups.end(), is_pure_control);
}

std::vector<std::string> theta_names(const BasisSpec& basis, const std::string& suffix) {
  if (basis.is_linear()) return {"alpha" + suffix, "gamma" + suffix};
  std::vector<std::string> out;
  for (int k = 0; k < basis.size(); ++k) out.push_back("theta" + suffix + "_" + std::to_string(k));
  return out;
}

std::vector<std::string> contrast_names(const BasisSpec& basis) {
  if (basis.is_linear()) return {"beta_c", "delta_c"};
  std::vector<std::string> out;
  for (int k = 0; k < basis.size(); ++k) out.push_back("contrast_c_" + std::to_string(k));
  return out;
}

std::vector<std::string> psi_names(const BasisSpec& basis) {
  if (basis.is_linear()) return {"alpha_c_plus_beta_c", "gamma_c_plus_delta_c"};
  std::vector<std::string> out;
  for (int k = 0; k < basis.size(); ++k) out.push_back("psi_c_" + std::to_string(k));
  return out;
}

std::vector<std::string> target_names(const BasisSpec& basis, Target target) {
  switch (target) {
    case Target::joint: {
      auto names = theta_names(basis, "");
      for (auto& n : contrast_names(basis)) names.push_back(n);
      return names;
    }
    case Target::complier_psi: return psi_names(basis);
    case Target::never_taker: return theta_names(basis, "_n");
    case Target::population: return theta_names(basis, "");
    case Target::complier_theta: return theta_names(basis, "_c");
    case Target::naive_iv: return {"alpha", "beta_c", "gamma", "delta_c"};
  }
  return {};
}

std::vector<std::size_t> groups_by_id(const ExperimentData& data) {
  std::vector<std::size_t> order(data.groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.groups[a].id < data.groups[b].id;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (data.groups[order[k]].id == data.groups[order[k - 1]].id) {
      throw ValidationError("duplicate group id " + std::to_string(data.groups[order[k]].id));
    }
  }
  return order;
}

/// Member order within a group by (z, d, y): rows that can differ only in y
/// are summed in a canonical order.
std::vector<std::size_t> canonical_rows(const Group& g) {
  std::vector<std::size_t> rows(g.z.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    if (g.z[a] != g.z[b]) return g.z[a] < g.z[b];
    if (g.d[a] != g.d[b]) return g.d[a] < g.d[b];
    return g.y[a] < g.y[b];
  });
  return rows;
}

double condition_number(const Eigen::MatrixXd& m) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0.0;
  const double lo = sv[sv.size() - 1];
  return lo > 0.0 ? sv[0] / lo : std::numeric_limits<double>::infinity();
}

void check_design_for_estimation(const ExperimentData& data, const SaturationDesign& design) {
  if (design.interior_count() == 0) {
    throw ValidationError("design has no interior saturation; the moment matrices are singular");
  }
  for (const auto& g : data.groups) {
    if (!design.find(g.saturation)) {
      throw ValidationError("group " + std::to_string(g.id) + " has saturation " +
                            std::to_string(g.saturation) + " which is not in the design");
    }
  }
}

int relevant_z(Target target) { return target == Target::population ? 0 : 1; }

/// Cached R(Chat, n)^+ for the handful of distinct Chat values in one group.
class GroupInverseCache {
 public:
  GroupInverseCache(const MomentTable& table, Target target) : table_(table), target_(target) {}

  const SymmetricPseudoInverse& at(double chat) {
    for (const auto& [key, value] : entries_) {
      if (key == chat) return value;
    }
    Eigen::MatrixXd r;
    if (target_ == Target::joint) {
      r = assemble_q(table_.extended(0, chat), table_.extended(1, chat));
    } else {
      r = table_.extended(relevant_z(target_), chat);
    }
    entries_.emplace_back(chat, symmetric_pseudo_inverse(r));
    return entries_.back().second;
  }

 private:
  const MomentTable& table_;
  Target target_;
  std::vector<std::pair<double, SymmetricPseudoInverse>> entries_;
};

}  // namespace

std::string to_string(Target target) {
  switch (target) {
    case Target::joint: return "joint";
    case Target::complier_psi: return "complier_psi";
    case Target::never_taker: return "never_taker";
    case Target::population: return "population";
    case Target::complier_theta: return "complier_theta";
    case Target::naive_iv: return "naive_iv";
  }
  return "unknown";
}

Target target_from_string(const std::string& s) {
  if (s == "joint") return Target::joint;
  if (s == "complier-psi" || s == "complier_psi") return Target::complier_psi;
  if (s == "never-taker" || s == "never_taker") return Target::never_taker;
  if (s == "population") return Target::population;
  if (s == "complier-theta" || s == "complier_theta") return Target::complier_theta;
  if (s == "naive" || s == "naive_iv" || s == "naive-iv") return Target::naive_iv;
  throw ValidationError("unknown target '" + s + "'");
}

std::vector<double> estimate_chat(std::span<const int> z, std::span<const int> d) {
  if (z.size() != d.size()) throw ValidationError("estimate_chat: z and d differ in length");
  const int total_z = std::accumulate(z.begin(), z.end(), 0);
  const int total_d = std::accumulate(d.begin(), d.end(), 0);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const int offered = total_z - z[i];
    out[i] = offered > 0 ? double(total_d - d[i]) / offered : 0.0;
  }
  return out;
}

InstrumentSet build_instruments(const ExperimentData& data, const BasisSpec& basis,
                                const SaturationDesign& design, Target target,
                                const EstimatorOptions& options) {
  if (target == Target::complier_theta || target == Target::naive_iv) {
    throw ValidationError("build_instruments: target " + to_string(target) +
                          " has no transformed instruments");
  }
  data.validate();
  check_design_for_estimation(data, design);
  if (options.chat == ChatPolicy::oracle && !data.has_latent()) {
    throw ValidationError("oracle complier shares need data with latent truth");
  }

  const int k = basis.size();
  const int p = target == Target::joint ? 2 * k : k;
  const bool augment = options.pure_control == PureControlPolicy::gmm &&
                       (target == Target::joint || target == Target::population) &&
                       has_pure_control_groups(data);
  const int q = augment ? p + 1 : p;
  const bool conditional = design.has_pure_control();

  const auto order = groups_by_id(data);
  std::size_t rows = 0;
  int dropped = 0;
  for (std::size_t gi : order) {
    const auto& g = data.groups[gi];
    if (is_pure_control(g) && !augment) {
      ++dropped;
      continue;
    }
    rows += g.z.size();
  }

  InstrumentSet set;
  set.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), p);
  set.zhat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), q);
  set.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
  set.names = target_names(basis, target);
  set.diagnostics.dropped_pure_control_groups = dropped;
  set.diagnostics.overidentification = q - p;
  set.cluster_offsets.push_back(0);

  std::map<int, MomentTable> tables;
  Eigen::VectorXd f(k);
  Eigen::VectorXd w(p);
  Eigen::Index row = 0;
  for (std::size_t gi : order) {
    const auto& g = data.groups[gi];
    const bool pure = is_pure_control(g);
    if (pure && !augment) continue;
    const int n = g.size();
    const int total_z = std::accumulate(g.z.begin(), g.z.end(), 0);
    const int total_d = std::accumulate(g.d.begin(), g.d.end(), 0);
    int total_c = 0;
    if (options.chat == ChatPolicy::oracle) {
      total_c = std::accumulate(g.latent->complier.begin(), g.latent->complier.end(), 0);
    }

    const MomentTable* table = nullptr;
    if (!pure) {
      auto it = tables.find(n);
      if (it == tables.end()) it = tables.emplace(n, MomentTable(basis, design, n, conditional)).first;
      table = &it->second;
    }
    std::optional<GroupInverseCache> cache;
    if (table) cache.emplace(*table, target);

    for (std::size_t i : canonical_rows(g)) {
      const int zi = g.z[i];
      const int di = g.d[i];
      const double dbar = (total_d - di) / double(n - 1);
      basis.evaluate(dbar, f);

      if (target == Target::joint) {
        set.x.row(row).head(k) = f.transpose();
        set.x.row(row).tail(k) = (di * f).transpose();
      } else {
        set.x.row(row) = f.transpose();
      }
      set.y[row] = g.y[i];

      if (pure) {
        set.zhat(row, q - 1) = 1.0;
        ++row;
        continue;
      }

      double weight = 0.0;
      switch (target) {
        case Target::joint: weight = 1.0; break;
        case Target::complier_psi: weight = di; break;
        case Target::never_taker: weight = zi * (1 - di); break;
        case Target::population: weight = 1 - zi; break;
        default: break;
      }
      if (target == Target::joint) {
        w.head(k) = f;
        w.tail(k) = zi * f;
      } else {
        w = weight * f;
      }
      if (weight != 0.0) {
        double share;
        if (options.chat == ChatPolicy::oracle) {
          share = (total_c - g.latent->complier[i]) / double(n - 1);
        } else {
          const int offered = total_z - zi;
          share = offered > 0 ? double(total_d - di) / offered : 0.0;
        }
        const SymmetricPseudoInverse& r = cache->at(share);
        if (!r.full_rank()) ++set.diagnostics.pseudo_inverted;
        set.diagnostics.min_abs_det = std::min(set.diagnostics.min_abs_det, std::abs(r.determinant));
        set.zhat.row(row).head(p) = (r.inverse * w).transpose();
      }
      ++row;
    }
    set.cluster_ids.push_back(g.id);
    set.cluster_offsets.push_back(row);
  }
  return set;
}

EstimateResult solve_instrumented(const InstrumentSet& set, Target target,
                                  const EstimatorOptions& options) {
  const Eigen::Index p = set.x.cols();
  const Eigen::Index q = set.zhat.cols();
  const auto clusters = static_cast<Eigen::Index>(set.cluster_ids.size());
  if (clusters < 2) throw ValidationError("estimation needs at least two clusters");
  if (q < p) throw ValidationError("fewer instruments than regressors");

  EstimateResult out;
  out.target = target;
  out.names = set.names;
  out.diagnostics = set.diagnostics;
  out.cluster_ids = set.cluster_ids;
  out.groups_used = static_cast<int>(clusters);
  out.individuals_used = static_cast<std::size_t>(set.x.rows());

  const Eigen::MatrixXd szx = set.zhat.transpose() * set.x;
  const Eigen::VectorXd szy = set.zhat.transpose() * set.y;

  Eigen::MatrixXd bread;  // p x q; coefficients = bread * szy
  if (q == p) {
    const double cond = condition_number(szx);
    out.diagnostics.condition_number = cond;
    if (!(cond < options.max_condition)) {
      throw NumericalError("instrument-regressor cross moment is singular (condition number " +
                               std::to_string(cond) + ")",
                           cond);
    }
    bread = szx.fullPivLu().inverse();
  } else {
    const Eigen::MatrixXd szz = set.zhat.transpose() * set.zhat;
    const double cond_zz = condition_number(szz);
    if (!(cond_zz < options.max_condition)) {
      throw NumericalError("instrument cross moment is singular (condition number " +
                               std::to_string(cond_zz) + ")",
                           cond_zz);
    }
    const Eigen::MatrixXd szz_inv_szx = szz.ldlt().solve(szx);
    const Eigen::MatrixXd h = szx.transpose() * szz_inv_szx;
    const double cond = condition_number(h);
    out.diagnostics.condition_number = cond;
    if (!(cond < options.max_condition)) {
      throw NumericalError("2SLS normal matrix is singular (condition number " +
                               std::to_string(cond) + ")",
                           cond);
    }
    bread = h.ldlt().solve(szz_inv_szx.transpose());
  }
  out.coefficients = bread * szy;

  const Eigen::VectorXd u = set.y - set.x * out.coefficients;
  const double scale = options.small_sample_correction
                           ? std::sqrt(double(clusters) / double(clusters - 1))
                           : 1.0;
  out.cluster_influence.resize(clusters, p);
  for (Eigen::Index c = 0; c < clusters; ++c) {
    const Eigen::Index begin = set.cluster_offsets[static_cast<std::size_t>(c)];
    const Eigen::Index len = set.cluster_offsets[static_cast<std::size_t>(c) + 1] - begin;
    const Eigen::VectorXd score =
        set.zhat.middleRows(begin, len).transpose() * u.segment(begin, len);
    out.cluster_influence.row(c) = scale * (bread * score).transpose();
  }
  out.vcov = out.cluster_influence.transpose() * out.cluster_influence;
  return out;
}

EstimateResult rsiv_estimate(const ExperimentData& data, const BasisSpec& basis,
                             const SaturationDesign& design, Target target,
                             const EstimatorOptions& options) {
  if (target == Target::complier_theta || target == Target::naive_iv) {
    throw ValidationError("rsiv_estimate: use estimate() for target " + to_string(target));
  }
  EstimatorOptions opts = options;
  opts.pure_control = PureControlPolicy::drop;
  return solve_instrumented(build_instruments(data, basis, design, target, opts), target, opts);
}

EstimateResult rsiv_pure_control(const ExperimentData& data, const BasisSpec& basis,
                                 const SaturationDesign& design, Target target,
                                 const EstimatorOptions& options) {
  if (target != Target::joint && target != Target::population) {
    throw ValidationError("pure-control 2SLS is defined for the joint and population targets");
  }
  if (!design.has_pure_control()) throw ValidationError("design has no 0% saturation");
  if (!has_pure_control_groups(data)) throw ValidationError("data has no pure-control groups");
  if (std::all_of(data.groups.begin(), data.groups.end(), is_pure_control)) {
    throw ValidationError("every group is pure control; there is no variation in take-up");
  }
  EstimatorOptions opts = options;
  opts.pure_control = PureControlPolicy::gmm;
  return solve_instrumented(build_instruments(data, basis, design, target, opts), target, opts);
}

ComplianceRate compliance_rate(const ExperimentData& data) {
  const auto order = groups_by_id(data);
  double offered = 0.0;
  double takers = 0.0;
  for (const auto& g : data.groups) {
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      offered += g.z[i];
      takers += g.z[i] * g.d[i];
    }
  }
  if (offered == 0.0) throw ValidationError("nobody was offered treatment");
  ComplianceRate out;
  out.rate = takers / offered;
  out.cluster_influence.resize(static_cast<Eigen::Index>(order.size()));
  Eigen::Index c = 0;
  for (std::size_t gi : order) {
    const auto& g = data.groups[gi];
    double score = 0.0;
    for (std::size_t i = 0; i < g.z.size(); ++i) score += g.z[i] * (g.d[i] - out.rate);
    out.cluster_ids.push_back(g.id);
    out.cluster_influence[c++] = score / offered;
  }
  return out;
}

EstimateResult complier_theta(const EstimateResult& population, const EstimateResult& never_taker,
                              const ComplianceRate& rate) {
  const double p = rate.rate;
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("complier_theta needs a compliance rate strictly between 0 and 1");
  }
  if (population.coefficients.size() != never_taker.coefficients.size()) {
    throw ValidationError("complier_theta: population and never-taker estimates differ in size");
  }
  const Eigen::Index k = population.coefficients.size();
  const Eigen::VectorXd gap = population.coefficients - never_taker.coefficients;

  EstimateResult out;
  out.target = Target::complier_theta;
  out.coefficients = never_taker.coefficients + gap / p;
  for (const auto& name : never_taker.names) {
    const auto pos = name.rfind("_n");
    out.names.push_back(pos == std::string::npos ? name + "_c" : name.substr(0, pos) + "_c");
  }

  // Union of cluster ids; a cluster absent from one estimate has zero influence on it.
  std::map<std::int64_t, Eigen::Index> index;
  for (auto id : population.cluster_ids) index.emplace(id, 0);
  for (auto id : never_taker.cluster_ids) index.emplace(id, 0);
  for (auto id : rate.cluster_ids) index.emplace(id, 0);
  Eigen::Index next = 0;
  for (auto& [id, slot] : index) {
    slot = next++;
    out.cluster_ids.push_back(id);
  }

  Eigen::MatrixXd infl = Eigen::MatrixXd::Zero(next, k);
  for (std::size_t c = 0; c < population.cluster_ids.size(); ++c) {
    infl.row(index[population.cluster_ids[c]]) +=
        population.cluster_influence.row(static_cast<Eigen::Index>(c)) / p;
  }
  for (std::size_t c = 0; c < never_taker.cluster_ids.size(); ++c) {
    infl.row(index[never_taker.cluster_ids[c]]) +=
        (1.0 - 1.0 / p) * never_taker.cluster_influence.row(static_cast<Eigen::Index>(c));
  }
  for (std::size_t c = 0; c < rate.cluster_ids.size(); ++c) {
    infl.row(index[rate.cluster_ids[c]]) -=
        (rate.cluster_influence[static_cast<Eigen::Index>(c)] / (p * p)) * gap.transpose();
  }
  out.cluster_influence = std::move(infl);
  out.vcov = out.cluster_influence.transpose() * out.cluster_influence;
  out.groups_used = static_cast<int>(next);
  out.individuals_used = std::max(population.individuals_used, never_taker.individuals_used);
  out.diagnostics.pseudo_inverted =
      population.diagnostics.pseudo_inverted + never_taker.diagnostics.pseudo_inverted;
  out.diagnostics.min_abs_det =
      std::min(population.diagnostics.min_abs_det, never_taker.diagnostics.min_abs_det);
  out.diagnostics.condition_number =
      std::max(population.diagnostics.condition_number, never_taker.diagnostics.condition_number);
  return out;
}

EstimateResult naive_iv(const ExperimentData& data, const EstimatorOptions& options) {
  data.validate();
  const auto order = groups_by_id(data);
  const auto rows = static_cast<Eigen::Index>(data.num_individuals());
  InstrumentSet set;
  set.x.resize(rows, 4);
  set.zhat.resize(rows, 4);
  set.y.resize(rows);
  set.names = {"alpha", "beta_c", "gamma", "delta_c"};
  set.cluster_offsets.push_back(0);
  Eigen::Index row = 0;
  for (std::size_t gi : order) {
    const auto& g = data.groups[gi];
    const int n = g.size();
    const int total_d = std::accumulate(g.d.begin(), g.d.end(), 0);
    const double s = g.saturation;
    for (std::size_t i : canonical_rows(g)) {
      const double d = g.d[i];
      const double z = g.z[i];
      const double dbar = (total_d - g.d[i]) / double(n - 1);
      set.x.row(row) << 1.0, d, dbar, d * dbar;
      set.zhat.row(row) << 1.0, z, s, z * s;
      set.y[row] = g.y[i];
      ++row;
    }
    set.cluster_ids.push_back(g.id);
    set.cluster_offsets.push_back(row);
  }
  EstimatorOptions opts = options;
  return solve_instrumented(set, Target::naive_iv, opts);
}

EstimateResult estimate(const ExperimentData& data, const BasisSpec& basis,
                        const SaturationDesign& design, Target target,
                        const EstimatorOptions& options) {
  const bool use_gmm =
      options.pure_control == PureControlPolicy::gmm && has_pure_control_groups(data);
  switch (target) {
    case Target::joint:
    case Target::population:
      return use_gmm ? rsiv_pure_control(data, basis, design, target, options)
                     : rsiv_estimate(data, basis, design, target, options);
    case Target::complier_psi:
    case Target::never_taker:
      return rsiv_estimate(data, basis, design, target, options);
    case Target::complier_theta: {
      const EstimateResult pop = estimate(data, basis, design, Target::population, options);
      const EstimateResult nt = rsiv_estimate(data, basis, design, Target::never_taker, options);
      return complier_theta(pop, nt, compliance_rate(data));
    }
    case Target::naive_iv:
      return naive_iv(data, options);
  }
  throw ValidationError("unknown target");
}

MeanCoefficients to_mean_coefficients(const EstimateResult& result, int basis_size) {
  MeanCoefficients m;
  const Eigen::Index k = basis_size;
  switch (result.target) {
    case Target::population:
      m.label = Subpopulation::population;
      m.theta_mean = result.coefficients.head(k);
      return m;
    case Target::never_taker:
      m.label = Subpopulation::never_taker;
      m.theta_mean = result.coefficients.head(k);
      return m;
    case Target::complier_theta:
      m.label = Subpopulation::complier;
      m.theta_mean = result.coefficients.head(k);
      return m;
    default:
      throw ValidationError("target " + to_string(result.target) +
                            " does not map to a single sub-population mean");
  }
}

IORTestResult ior_test(const ExperimentData& data, const EstimatorOptions& options) {
  data.validate();
  const auto order = groups_by_id(data);

  std::vector<double> bins;
  for (const auto& g : data.groups) {
    const bool offered = std::any_of(g.z.begin(), g.z.end(), [](int z) { return z == 1; });
    if (!offered) continue;
    const bool known = std::any_of(bins.begin(), bins.end(),
                                   [&](double b) { return std::abs(b - g.saturation) <= 1e-9; });
    if (!known) bins.push_back(g.saturation);
  }
  std::sort(bins.begin(), bins.end());
  const auto j = static_cast<Eigen::Index>(bins.size());
  if (j < 2) throw ValidationError("IOR test needs at least two saturation bins with offers");
  auto bin_of = [&](double s) {
    for (Eigen::Index b = 0; b < j; ++b) {
      if (std::abs(bins[static_cast<std::size_t>(b)] - s) <= 1e-9) return b;
    }
    return Eigen::Index{-1};
  };

  // Saturated regression: D on intercept and dummies for bins 1..J-1.
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(j, j);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(j);
  Eigen::VectorXd x(j);
  std::vector<std::size_t> offered(static_cast<std::size_t>(j), 0);
  for (const auto& g : data.groups) {
    const Eigen::Index b = bin_of(g.saturation);
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      if (g.z[i] != 1) continue;
      x.setZero();
      x[0] = 1.0;
      if (b > 0) x[b] = 1.0;
      xtx.noalias() += x * x.transpose();
      xty.noalias() += x * double(g.d[i]);
      ++offered[static_cast<std::size_t>(b)];
    }
  }
  const Eigen::MatrixXd xtx_inv = xtx.inverse();
  const Eigen::VectorXd beta = xtx_inv * xty;

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(j, j);
  int clusters = 0;
  for (std::size_t gi : order) {
    const auto& g = data.groups[gi];
    const Eigen::Index b = bin_of(g.saturation);
    if (b < 0) continue;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(j);
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      if (g.z[i] != 1) continue;
      x.setZero();
      x[0] = 1.0;
      if (b > 0) x[b] = 1.0;
      score += x * (g.d[i] - x.dot(beta));
    }
    meat.noalias() += score * score.transpose();
    ++clusters;
  }
  double scale = 1.0;
  if (options.small_sample_correction && clusters > 1) scale = double(clusters) / (clusters - 1);
  const Eigen::MatrixXd vcov = scale * xtx_inv * meat * xtx_inv;

  IORTestResult out;
  out.saturations = bins;
  out.offered = offered;
  out.df = static_cast<int>(j - 1);
  Eigen::VectorXd contrast(j);
  for (Eigen::Index b = 0; b < j; ++b) {
    contrast.setZero();
    contrast[0] = 1.0;
    if (b > 0) contrast[b] = 1.0;
    out.take_up.push_back(contrast.dot(beta));
    out.take_up_se.push_back(std::sqrt(std::max(0.0, contrast.dot(vcov * contrast))));
  }
  const Eigen::VectorXd slopes = beta.tail(j - 1);
  const Eigen::MatrixXd v = vcov.bottomRightCorner(j - 1, j - 1);
  const auto v_ldlt = v.ldlt();
  if (v_ldlt.info() != Eigen::Success || !(v_ldlt.vectorD().minCoeff() > 0.0)) {
    // No between-cluster variation in take-up at all.
    out.wald = slopes.cwiseAbs().maxCoeff() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    out.wald = slopes.dot(v_ldlt.solve(slopes));
  }
  if (std::isfinite(out.wald)) {
    const boost::math::chi_squared chi(out.df);
    out.p_value = boost::math::cdf(boost::math::complement(chi, out.wald));
  } else {
    out.p_value = 0.0;
  }
  return out;
}

}  // namespace sativ
