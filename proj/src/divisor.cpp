#include "jeq/divisor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "jeq/ddc.hpp"
#include "jeq/errors.hpp"
#include "jeq/geom.hpp"

namespace jeq {

namespace {

void require_curve(const HermitianField& omega_D, const HermitianField& chi_D,
                   const char* where) {
  if (omega_D.grid.n() != 1)
    throw std::invalid_argument(std::string(where) + ": D must be a curve (n = 1)");
  if (!omega_D.grid.same(chi_D.grid))
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
  for (std::size_t p = 0; p < omega_D.grid.size(); ++p) {
    if (!(omega_D.at(p, 0, 0).real() > 0.0))
      throw NonPositiveMetric(std::string(where) + ": omega_D not positive at point " +
                              std::to_string(p));
    if (!(chi_D.at(p, 0, 0).real() > 0.0))
      throw NonPositiveMetric(std::string(where) + ": chi_D not positive at point " +
                              std::to_string(p));
  }
}

/// The four wide-stencil harmonic modes on a periodic curve grid: sin(k h)
/// vanishes for k = 0 and k = N/2, so the constant and the three Nyquist
/// checkerboards are annihilated by every central first difference.
void remove_kernel(const Grid& g, std::vector<double>& v) {
  double comp[4] = {0.0, 0.0, 0.0, 0.0};
  for_each_point(g, [&](std::size_t p, const int* c) {
    double sx = (c[0] % 2 == 0) ? 1.0 : -1.0;
    double sy = (c[1] % 2 == 0) ? 1.0 : -1.0;
    comp[0] += v[p];
    comp[1] += v[p] * sx;
    comp[2] += v[p] * sy;
    comp[3] += v[p] * sx * sy;
  });
  const double inv_m = 1.0 / static_cast<double>(g.size());
  for (double& x : comp) x *= inv_m;
  for_each_point(g, [&](std::size_t p, const int* c) {
    double sx = (c[0] % 2 == 0) ? 1.0 : -1.0;
    double sy = (c[1] % 2 == 0) ? 1.0 : -1.0;
    v[p] -= comp[0] + comp[1] * sx + comp[2] * sy + comp[3] * sx * sy;
  });
}

/// y = -(1/4)(D_xx + D_yy) x with the wide stencil: positive semidefinite.
void apply_neg_quarter_lap(const Grid& g, const std::vector<double>& x,
                           std::vector<double>& y) {
  PotentialField tmp(g, x);
  for_each_point(g, [&](std::size_t p, const int* c) {
    y[p] = -0.25 * (stencil::wide_second(tmp.v, g, p, c, 0) +
                    stencil::wide_second(tmp.v, g, p, c, 1));
  });
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double curve_j_constant(const HermitianField& omega_D, const HermitianField& chi_D) {
  require_curve(omega_D, chi_D, "curve_j_constant");
  return integrate_wedge({{&chi_D, 1}}) / integrate_wedge({{&omega_D, 1}});
}

PotentialField solve_poisson_on_D(const HermitianField& omega_D,
                                  const HermitianField& chi_D, double c) {
  const double c_quad = curve_j_constant(omega_D, chi_D);
  if (std::abs(c - c_quad) > 1e-8)
    throw SolvabilityViolated("solve_poisson_on_D: constant " + std::to_string(c) +
                              " differs from the class constant " + std::to_string(c_quad));
  const Grid& g = omega_D.grid;
  const std::size_t M = g.size();

  // dd^c psi = chi/c - omega reads -(1/4) Delta psi = -(chi/c - omega).
  std::vector<double> b(M);
  for (std::size_t p = 0; p < M; ++p)
    b[p] = -(chi_D.at(p, 0, 0).real() / c - omega_D.at(p, 0, 0).real());
  // Solvability: project onto the range (kernel components of smooth data are
  // quadrature-level; the constant mode is the c-gate checked above).
  remove_kernel(g, b);

  std::vector<double> x(M, 0.0), r = b, z(M), q(M);
  double rr = dot(r, r);
  const double stop = std::max(rr * 1e-26, 1e-300);
  const std::size_t max_iters = 10 * M;
  std::vector<double> d = r;
  for (std::size_t it = 0; it < max_iters && rr > stop; ++it) {
    apply_neg_quarter_lap(g, d, q);
    double alpha = rr / dot(d, q);
    for (std::size_t i = 0; i < M; ++i) {
      x[i] += alpha * d[i];
      r[i] -= alpha * q[i];
    }
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < M; ++i) d[i] = r[i] + beta * d[i];
  }
  remove_kernel(g, x);
  return PotentialField(g, std::move(x));
}

}  // namespace jeq
