#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace jeq {

struct GmresResult {
  bool converged = false;
  std::size_t iters = 0;        // total operator applications
  double rel_residual = 0.0;    // true relative residual at exit
};

/// Restarted GMRES with right diagonal (Jacobi) preconditioning. Solves
/// A x = b for a matrix-free operator apply(in, out); inv_diag holds 1/diag(A).
/// Right preconditioning keeps the iteration residual equal to the true
/// residual, so the tolerance is meaningful for the unpreconditioned system.
/// Deterministic: serial reductions in fixed order.
template <class Apply>
GmresResult gmres(Apply&& apply, const std::vector<double>& b, std::vector<double>& x,
                  const std::vector<double>& inv_diag, int restart, double rtol,
                  std::size_t max_iters) {
  const std::size_t n = b.size();
  const int m = restart;
  GmresResult result;

  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  auto norm = [&](const std::vector<double>& u) { return std::sqrt(dot(u, u)); };

  double bnorm = norm(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    result.converged = true;
    return result;
  }

  std::vector<std::vector<double>> v(static_cast<std::size_t>(m) + 1,
                                     std::vector<double>(n));
  std::vector<double> h(static_cast<std::size_t>(m + 1) * m, 0.0);
  std::vector<double> cs(m), sn(m), g(static_cast<std::size_t>(m) + 1);
  std::vector<double> z(n), w(n), r(n);
  auto hij = [&](int i, int j) -> double& {
    return h[static_cast<std::size_t>(i) * m + j];
  };

  while (true) {
    // r = b - A x
    apply(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    double beta = norm(r);
    result.rel_residual = beta / bnorm;
    if (result.rel_residual <= rtol) {
      result.converged = true;
      return result;
    }
    if (result.iters >= max_iters) return result;

    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int j = 0;
    for (; j < m && result.iters < max_iters; ++j) {
      ++result.iters;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * v[j][i];
      apply(z, w);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; ++i) {
        double hij_val = dot(w, v[i]);
        hij(i, j) = hij_val;
        for (std::size_t k = 0; k < n; ++k) w[k] -= hij_val * v[i][k];
      }
      double hnext = norm(w);
      hij(j + 1, j) = hnext;
      if (hnext > 0.0)
        for (std::size_t k = 0; k < n; ++k) v[j + 1][k] = w[k] / hnext;

      // Apply stored Givens rotations, then create the new one.
      for (int i = 0; i < j; ++i) {
        double t1 = cs[i] * hij(i, j) + sn[i] * hij(i + 1, j);
        double t2 = -sn[i] * hij(i, j) + cs[i] * hij(i + 1, j);
        hij(i, j) = t1;
        hij(i + 1, j) = t2;
      }
      double denom = std::hypot(hij(j, j), hij(j + 1, j));
      if (denom == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = hij(j, j) / denom;
        sn[j] = hij(j + 1, j) / denom;
      }
      hij(j, j) = cs[j] * hij(j, j) + sn[j] * hij(j + 1, j);
      hij(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      if (std::abs(g[j + 1]) / bnorm <= rtol || hnext == 0.0) {
        ++j;
        break;
      }
    }

    // Back-substitute y from the triangular system and update x.
    std::vector<double> y(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= hij(i, k) * y[k];
      y[i] = s / hij(i, i);
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) x[k] += inv_diag[k] * y[i] * v[i][k];
  }
}

}  // namespace jeq
