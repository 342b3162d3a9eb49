#include "sativ/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "sativ/data_io.hpp"
#include "sativ/error.hpp"

namespace sativ {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ975 = 1.96;

// Spread below this is treated as zero (noiseless designs).
constexpr double kDegenerateSd = 1e-10;

void put(MCReplication& rep, std::size_t slot, const EstimateResult& est, Eigen::Index k) {
  rep.estimate[slot] = est.coefficients(k);
  rep.se[slot] = std::sqrt(std::max(0.0, est.vcov(k, k)));
}

}  // namespace

const std::vector<std::string>& mc_parameter_names() {
  static const std::vector<std::string> names{
      "alpha",       "gamma",        "alpha_n",     "gamma_n",      "alpha_c",     "gamma_c",
      "beta_c",      "delta_c",      "naive_alpha", "naive_beta_c", "naive_gamma", "naive_delta_c"};
  return names;
}

std::vector<double> mc_truths(const OracleMeans& o) {
  const Eigen::VectorXd& contrast = *o.complier.contrast_mean;
  return {o.population.theta_mean(0),  o.population.theta_mean(1), o.never_taker.theta_mean(0),
          o.never_taker.theta_mean(1), o.complier.theta_mean(0),   o.complier.theta_mean(1),
          contrast(0),                 contrast(1),                o.naive_iv[0],
          o.naive_iv[1],               o.naive_iv[2],              o.naive_iv[3]};
}

MCReplication run_replication(const SimConfig& cfg, const MCOptions& options, int index) {
  const std::size_t width = kRsivParameters + kNaiveParameters;
  MCReplication rep;
  rep.index = index;
  rep.estimate.assign(width, kNaN);
  rep.se.assign(width, kNaN);

  const RandomStream stream =
      RandomStream(cfg.seed).split("replication").split(static_cast<std::uint64_t>(index));
  const ExperimentData data = simulate_experiment(cfg, stream);
  const BasisSpec basis = BasisSpec::linear();

  if (options.run_rsiv) {
    try {
      const auto pop = estimate(data, basis, cfg.design, Target::population, options.estimator);
      const auto nt = estimate(data, basis, cfg.design, Target::never_taker, options.estimator);
      const auto ct = complier_theta(pop, nt, compliance_rate(data));
      const auto joint = estimate(data, basis, cfg.design, Target::joint, options.estimator);
      put(rep, 0, pop, 0);
      put(rep, 1, pop, 1);
      put(rep, 2, nt, 0);
      put(rep, 3, nt, 1);
      put(rep, 4, ct, 0);
      put(rep, 5, ct, 1);
      put(rep, 6, joint, 2);
      put(rep, 7, joint, 3);
      rep.rsiv_ok = true;
    } catch (const NumericalError& e) {
      for (std::size_t j = 0; j < kRsivParameters; ++j) rep.estimate[j] = rep.se[j] = kNaN;
      rep.failure = std::string("rsiv: ") + e.what();
    }
  }
  if (options.run_naive) {
    try {
      const auto naive = naive_iv(data, options.estimator);
      for (Eigen::Index k = 0; k < 4; ++k) put(rep, kRsivParameters + std::size_t(k), naive, k);
      rep.naive_ok = true;
    } catch (const NumericalError& e) {
      if (!rep.failure.empty()) rep.failure += "; ";
      rep.failure += std::string("naive: ") + e.what();
    }
  }
  return rep;
}

std::vector<MCRow> summarize(const std::vector<MCReplication>& reps, const OracleMeans& oracle) {
  const auto& names = mc_parameter_names();
  const auto truths = mc_truths(oracle);
  const std::vector<double> structural{oracle.population.theta_mean(0),
                                       (*oracle.complier.contrast_mean)(0),
                                       oracle.population.theta_mean(1),
                                       (*oracle.complier.contrast_mean)(1)};
  std::vector<MCRow> rows;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const bool naive = j >= kRsivParameters;
    MCRow row;
    row.name = names[j];
    row.estimator = naive ? "naive" : "rsiv";
    row.truth = truths[j];
    if (naive) row.structural_truth = structural[j - kRsivParameters];

    double sum = 0.0;
    int used = 0;
    for (const auto& r : reps) {
      if (!(naive ? r.naive_ok : r.rsiv_ok)) continue;
      sum += r.estimate[j];
      ++used;
    }
    if (used == 0) continue;
    row.replications = used;
    row.mean = sum / used;
    double ss = 0.0;
    int covered = 0;
    for (const auto& r : reps) {
      if (!(naive ? r.naive_ok : r.rsiv_ok)) continue;
      const double dev = r.estimate[j] - row.mean;
      ss += dev * dev;
      if (std::abs(r.estimate[j] - row.truth) <= kZ975 * r.se[j]) ++covered;
    }
    row.sd = used > 1 ? std::sqrt(ss / (used - 1)) : 0.0;
    if (row.sd > kDegenerateSd * std::max(1.0, std::abs(row.mean))) {
      row.coverage = double(covered) / used;
    }
    rows.push_back(row);
  }
  return rows;
}

MCReport run_mc(const SimConfig& cfg, const MCOptions& options) {
  return run_mc(cfg, options, oracle_subpopulation_means(cfg, options.oracle_draws));
}

void parallel_indexed(int count, int jobs, const std::function<void(int)>& task) {
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= count) return;
      try {
        task(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

MCReport run_mc(const SimConfig& cfg, const MCOptions& options, const OracleMeans& oracle) {
  if (options.reps < 2) throw ValidationError("Monte Carlo needs at least 2 replications");
  if (options.jobs < 1) throw ValidationError("jobs must be at least 1");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<MCReplication> reps(static_cast<std::size_t>(options.reps));
  parallel_indexed(options.reps, options.jobs, [&](int r) {
    reps[static_cast<std::size_t>(r)] = run_replication(cfg, options, r);
  });

  MCReport report;
  report.config = cfg;
  report.options = options;
  report.oracle = oracle;
  report.rows = summarize(reps, oracle);
  for (const auto& r : reps) {
    if (options.run_rsiv && !r.rsiv_ok) ++report.excluded_rsiv;
    if (options.run_naive && !r.naive_ok) ++report.excluded_naive;
  }
  report.replications = std::move(reps);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_replications_csv(const MCReport& report, std::ostream& out) {
  const auto& names = mc_parameter_names();
  out << "replication,parameter,estimate,se\n";
  for (const auto& r : report.replications) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (std::isnan(r.estimate[j])) continue;
      out << r.index << ',' << names[j] << ',' << format_double(r.estimate[j]) << ','
          << format_double(r.se[j]) << '\n';
    }
  }
}

}  // namespace sativ
