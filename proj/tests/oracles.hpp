#pragma once
// Independent reference computations used only by the tests. Nothing here
// calls into the moments or estimator code it is compared against.

#include <Eigen/Dense>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "sativ/dgp.hpp"

namespace oracle {

// C(m, k) s^k (1 - s)^(m - k) by the multiplicative recurrence, no logs.
inline double binomial_pmf(int m, int k, double s) {
  double coef = 1.0;
  for (int j = 1; j <= k; ++j) coef = coef * (m - k + j) / j;
  return coef * std::pow(s, k) * std::pow(1.0 - s, m - k);
}

// Q_z for the linear basis by direct summation over the binomial support.
inline Eigen::Matrix2d linear_q(double cbar, int n, const std::vector<double>& sats,
                                const std::vector<double>& weights, int z) {
  const int m = static_cast<int>(std::lround(cbar * (n - 1)));
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  for (std::size_t j = 0; j < sats.size(); ++j) {
    const double s = sats[j];
    const double pz = z == 1 ? s : 1.0 - s;
    for (int k = 0; k <= m; ++k) {
      const double x = double(k) / (n - 1);
      Eigen::Vector2d f(1.0, x);
      out += weights[j] * pz * binomial_pmf(m, k, s) * f * f.transpose();
    }
  }
  return out;
}

// Quadratic basis f = (1, x, x^2), same summation.
inline Eigen::Matrix3d quadratic_q(double cbar, int n, const std::vector<double>& sats,
                                   const std::vector<double>& weights, int z) {
  const int m = static_cast<int>(std::lround(cbar * (n - 1)));
  Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
  for (std::size_t j = 0; j < sats.size(); ++j) {
    const double s = sats[j];
    const double pz = z == 1 ? s : 1.0 - s;
    for (int k = 0; k <= m; ++k) {
      const double x = double(k) / (n - 1);
      Eigen::Vector3d f(1.0, x, x * x);
      out += weights[j] * pz * binomial_pmf(m, k, s) * f * f.transpose();
    }
  }
  return out;
}

// Determinants for a single saturation s.
inline double det_q0_single(double cbar, double s, int n) {
  return cbar * s * std::pow(1.0 - s, 3) / (n - 1);
}
inline double det_q1_single(double cbar, double s, int n) {
  return cbar * std::pow(s, 3) * (1.0 - s) / (n - 1);
}

// Determinants for two equally likely saturations sl < sh.
inline double det_q0_two(double cbar, double sl, double sh, int n) {
  return cbar * cbar / 4.0 * (1 - sl) * (1 - sh) * (sh - sl) * (sh - sl) +
         cbar * ((1 - sl) + (1 - sh)) * (sl * (1 - sl) * (1 - sl) + sh * (1 - sh) * (1 - sh)) /
             (4.0 * (n - 1));
}
inline double det_q1_two(double cbar, double sl, double sh, int n) {
  return cbar * cbar / 4.0 * sl * sh * (sh - sl) * (sh - sl) +
         cbar * (sl + sh) * (sl * sl * (1 - sl) + sh * sh * (1 - sh)) / (4.0 * (n - 1));
}

// Pearson chi-square goodness of fit; bins with expected count < 5 are pooled
// into their neighbour. Returns the upper-tail p-value.
inline double chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected) {
  std::vector<double> o, e;
  double po = 0.0, pe = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    po += observed[k];
    pe += expected[k];
    if (pe >= 5.0) {
      o.push_back(po);
      e.push_back(pe);
      po = pe = 0.0;
    }
  }
  if (pe > 0.0) {
    if (e.empty()) {
      o.push_back(po);
      e.push_back(pe);
    } else {
      o.back() += po;
      e.back() += pe;
    }
  }
  double stat = 0.0;
  for (std::size_t k = 0; k < o.size(); ++k) stat += (o[k] - e[k]) * (o[k] - e[k]) / e[k];
  const int df = static_cast<int>(o.size()) - 1;
  if (df < 1) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

// Two-sample chi-square test of homogeneity for count vectors a and b.
inline double chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0.0, nb = 0.0;
  for (double v : a) na += v;
  for (double v : b) nb += v;
  double stat = 0.0;
  int bins = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double total = a[k] + b[k];
    if (total == 0.0) continue;
    ++bins;
    const double ea = total * na / (na + nb);
    const double eb = total * nb / (na + nb);
    stat += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
  }
  if (bins < 2) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), stat));
}

// Stacked IV pieces built row by row, with the instrument transform
// supplied by the caller.
struct StackedIV {
  Eigen::MatrixXd x, zhat;
  Eigen::VectorXd y;
  std::vector<int> cluster;
};

// theta = (sum Zhat X')^-1 sum Zhat Y with the CR0 sandwich, via QR.
struct IVSolution {
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
};

inline IVSolution solve_iv(const StackedIV& s) {
  const Eigen::MatrixXd a = s.zhat.transpose() * s.x;
  const Eigen::VectorXd b = s.zhat.transpose() * s.y;
  IVSolution out;
  out.coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd u = s.y - s.x * out.coef;
  int clusters = 0;
  for (int c : s.cluster) clusters = std::max(clusters, c + 1);
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(clusters, a.rows());
  for (Eigen::Index r = 0; r < s.x.rows(); ++r) {
    scores.row(s.cluster[static_cast<std::size_t>(r)]) += u(r) * s.zhat.row(r);
  }
  const Eigen::MatrixXd a_inv = a.fullPivLu().inverse();
  out.vcov = a_inv * (scores.transpose() * scores) * a_inv.transpose();
  return out;
}

// Leave-one-out neighbour take-up share among offered neighbours.
inline double chat(const sativ::Group& g, int i) {
  int offered = 0, took = 0;
  for (int j = 0; j < g.size(); ++j) {
    if (j == i) continue;
    offered += g.z[std::size_t(j)];
    took += g.d[std::size_t(j)];
  }
  return offered > 0 ? double(took) / offered : 0.0;
}

}  // namespace oracle
