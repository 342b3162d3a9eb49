#pragma once

#include <Eigen/Dense>

#include <vector>

#include "sativ/design.hpp"
#include "sativ/model.hpp"

namespace sativ {

/// Design-implied second moments of the instrument building blocks at a
/// given neighbour complier share cbar and group size n:
///
///   Q0 = E[(1 - Z) f(Dbar) f(Dbar)' | Cbar = cbar, N = n]
///   Q1 = E[Z f(Dbar) f(Dbar)'       | Cbar = cbar, N = n]
///   Q  = [[Q0 + Q1, Q1], [Q1, Q1]]
struct MomentMatrices {
  Eigen::MatrixXd q0;
  Eigen::MatrixXd q1;
  Eigen::MatrixXd q;
  double cbar = 0.0;
  int n = 0;
  bool condition_on_positive = false;
};

/// [[q0 + q1, q1], [q1, q1]].
Eigen::MatrixXd assemble_q(const Eigen::MatrixXd& q0, const Eigen::MatrixXd& q1);

/// Exact Q0, Q1, Q by binomial enumeration: given S = s, (n - 1) Dbar is
/// Binomial((n - 1) cbar, s). Requires (n - 1) cbar to be an integer within
/// 1e-9. With `condition_on_positive` the saturation weights are renormalised
/// over s > 0.
MomentMatrices q_exact(const BasisSpec& basis, double cbar, int n, const SaturationDesign& design,
                       bool condition_on_positive = false);

/// Closed form of Q_z for the linear basis f(x) = (1, x), valid for any cbar.
Eigen::Matrix2d q_linear_closed_form(double cbar, int n, const SaturationDesign& design, int z);

/// Q_z extended to non-lattice cbar by linear interpolation between the two
/// neighbouring lattice points k / (n - 1). Equals q_exact on the lattice.
Eigen::MatrixXd q_extended(const BasisSpec& basis, double cbar, int n,
                           const SaturationDesign& design, int z,
                           bool condition_on_positive = false);

/// Inverse of Q from the inverses of its blocks:
/// [[Q0^-1, -Q0^-1], [-Q0^-1, Q0^-1 + Q1^-1]].
Eigen::MatrixXd block_inverse(const Eigen::MatrixXd& q0_inv, const Eigen::MatrixXd& q1_inv);

struct SymmetricPseudoInverse {
  Eigen::MatrixXd inverse;
  int rank = 0;
  /// Product of all eigenvalues (the determinant of the input).
  double determinant = 0.0;
  bool full_rank() const { return rank == inverse.rows(); }
};

/// Moore-Penrose inverse of a symmetric matrix from its eigendecomposition.
/// Eigenvalues with |lambda| <= 1e-12 * max(max|lambda|, 1) are treated as zero.
/// Throws ValidationError if the input is asymmetric beyond 1e-10.
SymmetricPseudoInverse symmetric_pseudo_inverse(const Eigen::MatrixXd& m);

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  return symmetric_pseudo_inverse(m).inverse;
}

/// Q0 / Q1 on the full lattice cbar = k / (n - 1), k = 0..n-1, for one group
/// size. Built once, read-only afterwards, so concurrent lookups are safe.
class MomentTable {
 public:
  MomentTable(const BasisSpec& basis, const SaturationDesign& design, int n,
              bool condition_on_positive);

  int n() const { return n_; }
  const Eigen::MatrixXd& lattice(int z, int k) const {
    return z == 0 ? q0_[static_cast<std::size_t>(k)] : q1_[static_cast<std::size_t>(k)];
  }

  /// Interpolated Q_z(cbar, n); identical to q_extended.
  Eigen::MatrixXd extended(int z, double cbar) const;

 private:
  int n_;
  std::vector<Eigen::MatrixXd> q0_;
  std::vector<Eigen::MatrixXd> q1_;
};

}  // namespace sativ
