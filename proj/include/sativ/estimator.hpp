#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sativ/dgp.hpp"
#include "sativ/design.hpp"
#include "sativ/model.hpp"

namespace sativ {

/// Which average the estimator recovers.
///
///   joint          (E theta, E[psi - theta | C = 1]);  X = [1, D] (x) f, R = Q,  W = [1, Z] (x) f
///   complier_psi   E[psi | C = 1];                     X = f,            R = Q1, W = D f
///   never_taker    E[theta | C = 0];                   X = f,            R = Q1, W = Z (1 - D) f
///   population     E[theta];                           X = f,            R = Q0, W = (1 - Z) f
///   complier_theta E[theta | C = 1], combined from population and never_taker
///   naive_iv       Y on (1, D, Dbar, D Dbar) instrumented by (1, Z, S, Z S)
enum class Target { joint, complier_psi, never_taker, population, complier_theta, naive_iv };

std::string to_string(Target target);
/// Accepts the CLI spellings (joint, complier-psi, never-taker, population,
/// complier-theta, naive) and the enum names.
Target target_from_string(const std::string& s);

enum class PureControlPolicy { drop, gmm };
/// Whether instruments use the plug-in share estimate or the latent truth
/// (the infeasible estimator; needs data with latent truth).
enum class ChatPolicy { estimated, oracle };

struct EstimatorOptions {
  PureControlPolicy pure_control = PureControlPolicy::gmm;
  ChatPolicy chat = ChatPolicy::estimated;
  /// Multiply the CR0 covariance by G / (G - 1).
  bool small_sample_correction = false;
  /// Largest condition number accepted for the moment matrix that is inverted.
  double max_condition = 1e12;
};

struct EstimateDiagnostics {
  /// Instrument evaluations where R(Chat, N) was rank deficient.
  int pseudo_inverted = 0;
  /// Smallest |det R(Chat, N)| over evaluations with nonzero W.
  double min_abs_det = std::numeric_limits<double>::infinity();
  /// Condition number of the inverted cross-moment matrix.
  double condition_number = 0.0;
  /// Pure-control groups excluded from the sample.
  int dropped_pure_control_groups = 0;
  /// Number of instruments minus number of regressors.
  int overidentification = 0;
};

struct EstimateResult {
  Target target = Target::joint;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd vcov;
  /// One row per cluster in `cluster_ids` order, scaled so that
  /// vcov = cluster_influence' * cluster_influence.
  Eigen::MatrixXd cluster_influence;
  std::vector<std::int64_t> cluster_ids;
  int groups_used = 0;
  std::size_t individuals_used = 0;
  EstimateDiagnostics diagnostics;

  Eigen::VectorXd se() const { return vcov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Leave-one-out take-up among offered neighbours, Dbar_ig / Zbar_ig, or 0
/// when no neighbour was offered.
std::vector<double> estimate_chat(std::span<const int> z, std::span<const int> d);

/// Stacked regressors and estimated instruments, rows grouped by cluster.
struct InstrumentSet {
  Eigen::MatrixXd x;
  Eigen::MatrixXd zhat;
  Eigen::VectorXd y;
  std::vector<std::int64_t> cluster_ids;
  /// Row ranges: cluster c owns rows [cluster_offsets[c], cluster_offsets[c + 1]).
  std::vector<Eigen::Index> cluster_offsets;
  std::vector<std::string> names;
  EstimateDiagnostics diagnostics;
};

/// Builds (X, Zhat, Y) for one of the four moment-based targets. Pure-control
/// groups are dropped unless `options.pure_control == gmm` and the target is
/// joint or population, in which case an indicator 1{S = 0} is appended to the
/// instruments. Whenever the design has a 0% arm, R is conditioned on S > 0.
/// Within each group rows are ordered by (z, d, y) so results do not depend
/// on the input row order.
InstrumentSet build_instruments(const ExperimentData& data, const BasisSpec& basis,
                                const SaturationDesign& design, Target target,
                                const EstimatorOptions& options = {});

/// Just-identified IV (or 2SLS when over-identified) with a CR0 cluster sandwich.
EstimateResult solve_instrumented(const InstrumentSet& set, Target target,
                                  const EstimatorOptions& options = {});

/// Transformed-instrument IV for joint, complier_psi, never_taker or
/// population. Pure-control groups are always dropped here.
EstimateResult rsiv_estimate(const ExperimentData& data, const BasisSpec& basis,
                             const SaturationDesign& design, Target target,
                             const EstimatorOptions& options = {});

/// Over-identified 2SLS using the pure-control groups (joint or population).
EstimateResult rsiv_pure_control(const ExperimentData& data, const BasisSpec& basis,
                                 const SaturationDesign& design, Target target,
                                 const EstimatorOptions& options = {});

/// Share of offered individuals who take up, with per-cluster influence.
struct ComplianceRate {
  double rate = 0.0;
  std::vector<std::int64_t> cluster_ids;
  Eigen::VectorXd cluster_influence;
};

ComplianceRate compliance_rate(const ExperimentData& data);

/// E[theta | C = 1] = E[theta | C = 0] + (E theta - E[theta | C = 0]) / E C.
/// Covariance by the delta method over the stacked cluster influences.
EstimateResult complier_theta(const EstimateResult& population, const EstimateResult& never_taker,
                              const ComplianceRate& rate);

/// Naive IV with instruments (1, Z, S, Z S) for the linear model.
EstimateResult naive_iv(const ExperimentData& data, const EstimatorOptions& options = {});

/// Dispatches any target. Population and joint use the pure-control 2SLS when
/// the data contains 0% groups and the policy is gmm.
EstimateResult estimate(const ExperimentData& data, const BasisSpec& basis,
                        const SaturationDesign& design, Target target,
                        const EstimatorOptions& options = {});

/// Mean coefficients implied by an estimate (population / complier / never-taker).
MeanCoefficients to_mean_coefficients(const EstimateResult& result, int basis_size);

struct IORTestResult {
  std::vector<double> saturations;
  std::vector<double> take_up;
  std::vector<double> take_up_se;
  std::vector<std::size_t> offered;
  double wald = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Regression of D on saturation-bin dummies among offered individuals
/// (lowest bin excluded); cluster-robust Wald test that the dummies are zero.
IORTestResult ior_test(const ExperimentData& data, const EstimatorOptions& options = {});

}  // namespace sativ
