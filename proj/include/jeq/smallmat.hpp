#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <span>

#include "jeq/errors.hpp"

namespace jeq {

using cd = std::complex<double>;

/// Small dense complex matrix, stack-allocated up to 3x3. Entry (i, j) holds
/// the component g_{i jbar}; Hermitian symmetry is g(j, i) = conj(g(i, j)).
using Mat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using VecR = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline Mat hermitize(const Mat& a) { return 0.5 * (a + a.adjoint().eval()); }

inline double herm_deviation(const Mat& a) {
  return (a - a.adjoint().eval()).cwiseAbs().maxCoeff();
}

/// Determinant of a Hermitian matrix (real part; imaginary part is rounding).
inline double det_herm(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) return a(0, 0).real();
  if (n == 2) return (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)).real();
  return (a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
          a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
          a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)))
      .real();
}

/// Sylvester test: all leading principal minors positive.
inline bool positive_definite(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (!(a(0, 0).real() > 0.0)) return false;
  if (n == 1) return true;
  double d2 = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)).real();
  if (!(d2 > 0.0)) return false;
  if (n == 2) return true;
  return det_herm(a) > 0.0;
}

/// Smallest eigenvalue of a Hermitian matrix, closed form for n <= 3
/// (trigonometric method for the 3x3 characteristic cubic). Deterministic.
inline double min_eig_herm(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) return a(0, 0).real();
  if (n == 2) {
    double tr = a(0, 0).real() + a(1, 1).real();
    double det = det_herm(a);
    double disc = tr * tr - 4.0 * det;
    disc = disc > 0.0 ? std::sqrt(disc) : 0.0;
    return 0.5 * (tr - disc);
  }
  double q = (a(0, 0).real() + a(1, 1).real() + a(2, 2).real()) / 3.0;
  double p1 = std::norm(a(0, 1)) + std::norm(a(0, 2)) + std::norm(a(1, 2));
  double p2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double d = a(i, i).real() - q;
    p2 += d * d;
  }
  p2 += 2.0 * p1;
  if (p2 <= 0.0) return q;
  double p = std::sqrt(p2 / 6.0);
  Mat b = a;
  for (int i = 0; i < 3; ++i) b(i, i) -= q;
  b /= p;
  double r = 0.5 * det_herm(b);
  r = std::clamp(r, -1.0, 1.0);
  double phi = std::acos(r) / 3.0;
  // cos(phi + 2pi/3) is the smallest of the three roots.
  constexpr double kPi = 3.14159265358979323846;
  return q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
}

/// Inverse of a positive Hermitian matrix via adjugate (n <= 3).
inline Mat inverse_herm(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  Mat inv(n, n);
  if (n == 1) {
    inv(0, 0) = 1.0 / a(0, 0);
    return inv;
  }
  if (n == 2) {
    cd det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    inv(0, 0) = a(1, 1) / det;
    inv(1, 1) = a(0, 0) / det;
    inv(0, 1) = -a(0, 1) / det;
    inv(1, 0) = -a(1, 0) / det;
    return inv;
  }
  cd det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  inv(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / det;
  inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
  inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
  inv(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / det;
  inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
  inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
  inv(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / det;
  inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
  inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
  return inv;
}

/// tr(A^{-1} X) for positive Hermitian A.
inline double trace_quotient(const Mat& a, const Mat& x) {
  Mat inv = inverse_herm(a);
  return (inv * x).trace().real();
}

/// Eigenvalues mu of chi relative to omega (det(chi - mu omega) = 0), sorted
/// ascending. Cholesky congruence then a Hermitian eigensolve; stable for
/// positive omega. Throws NonPositiveMetric when omega is not positive.
inline VecR generalized_eigs(const Mat& chi, const Mat& omega) {
  Eigen::LLT<Mat> llt(omega);
  if (llt.info() != Eigen::Success || !positive_definite(omega))
    throw NonPositiveMetric("generalized_eigs: omega is not positive definite");
  Mat l = llt.matrixL();
  Mat y = l.template triangularView<Eigen::Lower>().solve(chi);
  Mat m = l.template triangularView<Eigen::Lower>().solve(y.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m.adjoint().eval()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

namespace detail {
struct PermTable {
  int perms[6][3];
  int sign[6];
  int count;
};
inline const PermTable& perm_table(int n) {
  static const PermTable t1 = {{{0, 0, 0}}, {1}, 1};
  static const PermTable t2 = {{{0, 1, 0}, {1, 0, 0}}, {1, -1}, 2};
  static const PermTable t3 = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}},
                               {1, -1, -1, 1, 1, -1},
                               6};
  return n == 1 ? t1 : (n == 2 ? t2 : t3);
}
}  // namespace detail

/// Top wedge of n Hermitian (1,1)-forms as a density against the frame
/// prod_i (i dz_i ^ dzbar_i):
///   W(A_1..A_n) = sum_{sigma,tau} sgn(sigma) sgn(tau) prod_k (A_k)_{sigma(k) tau(k)}.
/// W(A,..,A) = n! det A; symmetric and multilinear in its slots, so mixed
/// powers omega_phi^{n-j} ^ omega^j are W with repeated arguments.
inline double wedge_top(std::span<const Mat* const> a) {
  const int n = static_cast<int>(a.size());
  const auto& pt = detail::perm_table(n);
  cd sum = 0.0;
  for (int si = 0; si < pt.count; ++si) {
    for (int ti = 0; ti < pt.count; ++ti) {
      cd prod = static_cast<double>(pt.sign[si] * pt.sign[ti]);
      for (int k = 0; k < n; ++k) prod *= (*a[k])(pt.perms[si][k], pt.perms[ti][k]);
      sum += prod;
    }
  }
  return sum.real();
}

/// wedge_top of a multiset given as (matrix, multiplicity) factors.
inline double wedge_top_pow(std::initializer_list<std::pair<const Mat*, int>> factors) {
  const Mat* slots[3];
  int n = 0;
  for (const auto& [m, k] : factors)
    for (int i = 0; i < k; ++i) slots[n++] = m;
  return wedge_top(std::span<const Mat* const>(slots, static_cast<std::size_t>(n)));
}

}  // namespace jeq
