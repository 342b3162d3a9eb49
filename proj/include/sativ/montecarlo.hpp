#pragma once

#include <cstddef>
#include <iosfwd>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sativ/dgp.hpp"
#include "sativ/estimator.hpp"

namespace sativ {

/// Parameter names reported by the harness, RS-IV first:
/// alpha, gamma (population), alpha_n, gamma_n (never-takers),
/// alpha_c, gamma_c (complier theta), beta_c, delta_c (joint contrast),
/// then naive_alpha, naive_beta_c, naive_gamma, naive_delta_c.
const std::vector<std::string>& mc_parameter_names();
inline constexpr std::size_t kRsivParameters = 8;
inline constexpr std::size_t kNaiveParameters = 4;

struct MCOptions {
  int reps = 200;
  int jobs = 1;
  std::size_t oracle_draws = 1000000;
  bool run_rsiv = true;
  bool run_naive = true;
  EstimatorOptions estimator;
};

struct MCRow {
  std::string name;
  std::string estimator;  // "rsiv" or "naive"
  /// Oracle value the estimator targets (the naive IV probability limit for naive rows).
  double truth = 0.0;
  /// For naive rows, the structural mean the coefficient is meant to estimate.
  std::optional<double> structural_truth;
  double mean = 0.0;
  double sd = 0.0;
  /// Share of replications whose 95% interval covers `truth`; empty when the
  /// estimates have no spread.
  std::optional<double> coverage;
  int replications = 0;
};

struct MCReplication {
  int index = 0;
  bool rsiv_ok = false;
  bool naive_ok = false;
  std::string failure;
  /// Indexed like mc_parameter_names(); NaN where not computed.
  std::vector<double> estimate;
  std::vector<double> se;
};

struct MCReport {
  SimConfig config;
  MCOptions options;
  OracleMeans oracle;
  std::vector<MCRow> rows;
  std::vector<MCReplication> replications;
  int excluded_rsiv = 0;
  int excluded_naive = 0;
  /// Wall-clock time; kept out of serialised reports so they are reproducible.
  double runtime_seconds = 0.0;
};

/// Oracle truths in mc_parameter_names() order.
std::vector<double> mc_truths(const OracleMeans& oracle);

/// Calls task(0) ... task(count - 1) on up to `jobs` threads. Tasks must write
/// only to their own slot; the first exception is rethrown after all threads join.
void parallel_indexed(int count, int jobs, const std::function<void(int)>& task);

/// Runs one replication on its own stream; NumericalError marks it failed.
MCReplication run_replication(const SimConfig& cfg, const MCOptions& options, int index);

/// R replications of simulate -> estimate. Replication r simulates from
/// RandomStream(cfg.seed).split("replication").split(r) and results are
/// combined in index order, so the report does not depend on `jobs`.
MCReport run_mc(const SimConfig& cfg, const MCOptions& options);
/// Same, with an oracle computed elsewhere.
MCReport run_mc(const SimConfig& cfg, const MCOptions& options, const OracleMeans& oracle);

/// Summary rows from replications (used by run_mc).
std::vector<MCRow> summarize(const std::vector<MCReplication>& reps, const OracleMeans& oracle);

/// One line per replication: replication,parameter,estimate,se.
void write_replications_csv(const MCReport& report, std::ostream& out);

}  // namespace sativ
