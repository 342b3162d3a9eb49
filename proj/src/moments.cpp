#include "sativ/moments.hpp"

#include <cmath>

#include "sativ/error.hpp"

namespace sativ {

namespace {

constexpr double kLatticeTolerance = 1e-9;

void check_args(double cbar, int n) {
  if (n < 2) throw ValidationError("group size must be at least 2");
  if (!(cbar >= 0.0 && cbar <= 1.0)) throw ValidationError("cbar must lie in [0, 1]");
}

/// Binomial(trials, p) pmf at m, evaluated in log space.
double binomial_pmf(int m, int trials, double p) {
  if (p <= 0.0) return m == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return m == trials ? 1.0 : 0.0;
  const double log_pmf = std::lgamma(trials + 1.0) - std::lgamma(m + 1.0) -
                         std::lgamma(trials - m + 1.0) + m * std::log(p) +
                         (trials - m) * std::log1p(-p);
  return std::exp(log_pmf);
}

/// Q_0 and Q_1 when (n - 1) Dbar ~ Binomial(trials, S).
void enumerate_lattice(const BasisSpec& basis, int trials, int n, const SaturationDesign& design,
                       Eigen::MatrixXd& q0, Eigen::MatrixXd& q1) {
  const int k = basis.size();
  q0 = Eigen::MatrixXd::Zero(k, k);
  q1 = Eigen::MatrixXd::Zero(k, k);
  std::vector<Eigen::VectorXd> f(static_cast<std::size_t>(trials) + 1);
  for (int m = 0; m <= trials; ++m) f[static_cast<std::size_t>(m)] = basis(m / double(n - 1));

  Eigen::MatrixXd conditional(k, k);
  for (std::size_t j = 0; j < design.size(); ++j) {
    const double w = design.weights()[j];
    const double s = design.saturations()[j];
    if (w == 0.0) continue;
    conditional.setZero();
    for (int m = 0; m <= trials; ++m) {
      const double pmf = binomial_pmf(m, trials, s);
      if (pmf == 0.0) continue;
      const auto& fm = f[static_cast<std::size_t>(m)];
      conditional.noalias() += pmf * fm * fm.transpose();
    }
    q0 += (w * (1.0 - s)) * conditional;
    q1 += (w * s) * conditional;
  }
  // Exact symmetry; the rank-one updates are symmetric up to roundoff.
  q0 = 0.5 * (q0 + q0.transpose()).eval();
  q1 = 0.5 * (q1 + q1.transpose()).eval();
}

const SaturationDesign& effective_design(const SaturationDesign& design, bool condition,
                                         SaturationDesign& storage) {
  if (!condition) return design;
  storage = design.conditional_on_positive();
  return storage;
}

}  // namespace

Eigen::MatrixXd assemble_q(const Eigen::MatrixXd& q0, const Eigen::MatrixXd& q1) {
  if (q0.rows() != q1.rows() || q0.cols() != q1.cols() || q0.rows() != q0.cols()) {
    throw ValidationError("assemble_q: Q0 and Q1 must be square and of equal size");
  }
  const Eigen::Index k = q0.rows();
  Eigen::MatrixXd q(2 * k, 2 * k);
  q.topLeftCorner(k, k) = q0 + q1;
  q.topRightCorner(k, k) = q1;
  q.bottomLeftCorner(k, k) = q1;
  q.bottomRightCorner(k, k) = q1;
  return q;
}

MomentMatrices q_exact(const BasisSpec& basis, double cbar, int n, const SaturationDesign& design,
                       bool condition_on_positive) {
  check_args(cbar, n);
  const double scaled = (n - 1) * cbar;
  const double rounded = std::round(scaled);
  if (std::abs(scaled - rounded) > kLatticeTolerance) {
    throw ValidationError("q_exact needs (n - 1) * cbar to be an integer; use q_extended");
  }
  SaturationDesign storage = design;
  const SaturationDesign& eff = effective_design(design, condition_on_positive, storage);

  MomentMatrices out;
  enumerate_lattice(basis, static_cast<int>(rounded), n, eff, out.q0, out.q1);
  out.q = assemble_q(out.q0, out.q1);
  out.cbar = cbar;
  out.n = n;
  out.condition_on_positive = condition_on_positive;
  return out;
}

Eigen::Matrix2d q_linear_closed_form(double cbar, int n, const SaturationDesign& design, int z) {
  check_args(cbar, n);
  if (z != 0 && z != 1) throw ValidationError("z must be 0 or 1");
  const double c = cbar;
  const double within = c / (n - 1);
  Eigen::Matrix2d q;
  if (z == 0) {
    const double off = c * design.moment(1, 1);
    q << design.moment(0, 1), off, off, c * c * design.moment(2, 1) + within * design.moment(1, 2);
  } else {
    const double off = c * design.moment(2, 0);
    q << design.moment(1, 0), off, off, c * c * design.moment(3, 0) + within * design.moment(2, 1);
  }
  return q;
}

Eigen::MatrixXd q_extended(const BasisSpec& basis, double cbar, int n,
                           const SaturationDesign& design, int z, bool condition_on_positive) {
  check_args(cbar, n);
  if (z != 0 && z != 1) throw ValidationError("z must be 0 or 1");
  const double scaled = (n - 1) * cbar;
  const double rounded = std::round(scaled);
  SaturationDesign storage = design;
  const SaturationDesign& eff = effective_design(design, condition_on_positive, storage);
  Eigen::MatrixXd lo0, lo1;
  if (std::abs(scaled - rounded) <= kLatticeTolerance) {
    enumerate_lattice(basis, static_cast<int>(rounded), n, eff, lo0, lo1);
    return z == 0 ? lo0 : lo1;
  }
  const int lower = static_cast<int>(std::floor(scaled));
  const double omega = scaled - lower;  // (cbar - cbar_l) / (cbar_u - cbar_l)
  Eigen::MatrixXd hi0, hi1;
  enumerate_lattice(basis, lower, n, eff, lo0, lo1);
  enumerate_lattice(basis, lower + 1, n, eff, hi0, hi1);
  return z == 0 ? ((1.0 - omega) * lo0 + omega * hi0).eval()
                : ((1.0 - omega) * lo1 + omega * hi1).eval();
}

Eigen::MatrixXd block_inverse(const Eigen::MatrixXd& q0_inv, const Eigen::MatrixXd& q1_inv) {
  if (q0_inv.rows() != q1_inv.rows() || q0_inv.cols() != q1_inv.cols() ||
      q0_inv.rows() != q0_inv.cols()) {
    throw ValidationError("block_inverse: block dimensions do not match");
  }
  const Eigen::Index k = q0_inv.rows();
  Eigen::MatrixXd out(2 * k, 2 * k);
  out.topLeftCorner(k, k) = q0_inv;
  out.topRightCorner(k, k) = -q0_inv;
  out.bottomLeftCorner(k, k) = -q0_inv;
  out.bottomRightCorner(k, k) = q0_inv + q1_inv;
  return out;
}

SymmetricPseudoInverse symmetric_pseudo_inverse(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ValidationError("pseudo_inverse: matrix must be square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw ValidationError("pseudo_inverse: matrix is not symmetric (max asymmetry " +
                          std::to_string(asym) + ")");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double scale = std::max(lambda.cwiseAbs().maxCoeff(), 1.0);
  const double tol = 1e-12 * scale;

  SymmetricPseudoInverse out;
  Eigen::VectorXd inv_lambda = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) > tol) {
      inv_lambda[i] = 1.0 / lambda[i];
      ++out.rank;
    }
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  out.inverse = v * inv_lambda.asDiagonal() * v.transpose();
  out.determinant = lambda.prod();
  return out;
}

MomentTable::MomentTable(const BasisSpec& basis, const SaturationDesign& design, int n,
                         bool condition_on_positive)
    : n_(n) {
  if (n < 2) throw ValidationError("group size must be at least 2");
  SaturationDesign storage = design;
  const SaturationDesign& eff = effective_design(design, condition_on_positive, storage);
  q0_.resize(static_cast<std::size_t>(n));
  q1_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    enumerate_lattice(basis, k, n, eff, q0_[static_cast<std::size_t>(k)],
                      q1_[static_cast<std::size_t>(k)]);
  }
}

Eigen::MatrixXd MomentTable::extended(int z, double cbar) const {
  if (!(cbar >= 0.0 && cbar <= 1.0)) throw ValidationError("cbar must lie in [0, 1]");
  const double scaled = (n_ - 1) * cbar;
  const double rounded = std::round(scaled);
  if (std::abs(scaled - rounded) <= kLatticeTolerance) {
    return lattice(z, static_cast<int>(rounded));
  }
  const int lower = static_cast<int>(std::floor(scaled));
  const double omega = scaled - lower;
  return (1.0 - omega) * lattice(z, lower) + omega * lattice(z, lower + 1);
}

}  // namespace sativ
