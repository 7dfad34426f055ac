#include "jeq/cusp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "jeq/ddc.hpp"
#include "jeq/errors.hpp"
#include "jeq/gmres.hpp"

namespace jeq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// End handling for the t-direction stencils. Open evaluates one-sided
// second-order formulas at both ends (residuals of arbitrary samples);
// Collocated matches the boundary-value discretization: the A-row is a
// Dirichlet row and the T-row uses the ghost closure phi(T+h) := phi(T-h),
// which encodes phi'(T) = 0 to second order.
enum class Ends { Open, Collocated };

struct TDeriv {
  double d1 = 0.0;
  double d2 = 0.0;
};

// Second-order t-derivatives of a t-major field at slice it, fiber offset
// ix; F samples per slice, m slices, spacing h. The collocated caller never
// asks for the Dirichlet row, so it == 0 is always the open one-sided pair.
TDeriv t_derivatives(const std::vector<double>& y, std::size_t it, std::size_t ix,
                     std::size_t m, std::size_t F, double h, Ends ends) {
  auto at = [&](std::size_t row) { return y[row * F + ix]; };
  TDeriv d;
  if (it == 0) {
    d.d1 = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    d.d2 = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h);
  } else if (it + 1 == m) {
    if (ends == Ends::Collocated) {
      d.d1 = 0.0;
      d.d2 = 2.0 * (at(m - 2) - at(m - 1)) / (h * h);
    } else {
      d.d1 = (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h);
      d.d2 = (2.0 * at(m - 1) - 5.0 * at(m - 2) + 4.0 * at(m - 3) - at(m - 4)) / (h * h);
    }
  } else {
    d.d1 = (at(it + 1) - at(it - 1)) / (2.0 * h);
    d.d2 = (at(it + 1) - 2.0 * at(it) + at(it - 1)) / (h * h);
  }
  return d;
}

// Solves sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i] by elimination
// without pivoting; the systems assembled here are diagonally dominant or
// carry a Dirichlet identity row, so a vanishing pivot means a genuinely
// singular discretization.
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                      std::vector<double> sup, std::vector<double> rhs) {
  const std::size_t m = diag.size();
  for (std::size_t i = 1; i < m; ++i) {
    if (diag[i - 1] == 0.0)
      throw LinearSolveFailed("tridiagonal elimination hit a zero pivot at row " +
                              std::to_string(i - 1));
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (diag[m - 1] == 0.0)
    throw LinearSolveFailed("tridiagonal elimination hit a zero pivot at the last row");
  std::vector<double> x(m);
  x[m - 1] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  return x;
}

// (dd^c u)_{1 1bar} of one t-slice of a t-major field at fiber point coords
// cf, full index p; matches ddc_point's diagonal entry bit for bit. Fiber
// jumps stay inside the slice, so stenciling the big vector is safe.
double fiber_ddc11(const std::vector<double>& u, const Grid& gf, std::size_t p,
                   const int* cf) {
  return 0.25 * (stencil::wide_second(u, gf, p, cf, 0) +
                 stencil::wide_second(u, gf, p, cf, 1));
}

double resolve_kappa(const CuspGeometry& geom, double kappa) {
  if (kappa == 0.0) return geom.kappa();
  if (!(kappa > 0.0))
    throw ConfigInvalid("model operator coefficient kappa = " + num(kappa) +
                        " must be positive");
  return kappa;
}

// Everything one evaluation of the reduced fiber equation produces. For
// Point sections only R, c and the scalars are filled; FlatTorus fields add
// the fiber metric and the fiber gradient of the t-derivative (the pieces
// the linearization reuses).
struct EquationEval {
  std::vector<double> R;
  std::vector<double> c;
  std::vector<double> w;
  std::vector<double> gx, gy;
  double sup = 0.0;
  double min_c = kInf;
  double min_w = kInf;
  std::size_t min_c_at = 0;
  std::size_t min_w_at = 0;
  bool positive() const { return min_c > 0.0 && min_w > 0.0; }
};

// t-profile evaluation: R = b + c (s - n) with c = a - (phi'' - phi')/2.
EquationEval eval_profile(const std::vector<double>& phi0, const CuspGeometry& geom,
                          Ends ends) {
  const std::size_t m = geom.M_t;
  const double h = geom.h();
  const double s = geom.fiber_trace();
  EquationEval ev;
  ev.R.assign(m, 0.0);
  ev.c.assign(m, 0.0);
  ev.min_w = 1.0;  // no fiber dynamics to degenerate
  const std::size_t first = ends == Ends::Collocated ? 1 : 0;
  for (std::size_t it = 0; it < m; ++it) {
    const TDeriv d = t_derivatives(phi0, it, 0, m, 1, h, ends);
    ev.c[it] = geom.a - 0.5 * (d.d2 - d.d1);
    if (it < first) continue;
    if (ev.c[it] < ev.min_c) {
      ev.min_c = ev.c[it];
      ev.min_c_at = it;
    }
    ev.R[it] = geom.b + ev.c[it] * (s - static_cast<double>(geom.n));
    ev.sup = std::max(ev.sup, std::abs(ev.R[it]));
  }
  return ev;
}

// FlatTorus field evaluation:
//   R = (b w + c chi - 2 c w - |d_D phi_t|_z^2) / omega_d,
// with w = omega_d + (dd^c phi)_{1 1bar} per slice and |f|_z^2 =
// (f_x^2 + f_y^2)/4.
EquationEval eval_field(const std::vector<double>& phi, const CuspGeometry& geom,
                        const std::vector<double>& chi, Ends ends) {
  const std::size_t m = geom.M_t, F = geom.fiber_points();
  const double h = geom.h();
  const Grid& gf = *geom.fiber;
  EquationEval ev;
  ev.R.assign(m * F, 0.0);
  ev.c.assign(m * F, 0.0);
  ev.w.assign(m * F, 0.0);
  ev.gx.assign(m * F, 0.0);
  ev.gy.assign(m * F, 0.0);
  std::vector<double> ut(m * F);
  for (std::size_t it = 0; it < m; ++it)
    for (std::size_t ix = 0; ix < F; ++ix) {
      const std::size_t p = it * F + ix;
      const TDeriv d = t_derivatives(phi, it, ix, m, F, h, ends);
      ev.c[p] = geom.a - 0.5 * (d.d2 - d.d1);
      ut[p] = d.d1;
    }
  for_each_point(gf, [&](std::size_t ix, const int* cf) {
    for (std::size_t it = 0; it < m; ++it) {
      const std::size_t p = it * F + ix;
      ev.w[p] = geom.omega_d + fiber_ddc11(phi, gf, p, cf);
      ev.gx[p] = stencil::central_first(ut, gf, p, cf, 0);
      ev.gy[p] = stencil::central_first(ut, gf, p, cf, 1);
    }
  });
  const std::size_t first = ends == Ends::Collocated ? 1 : 0;
  for (std::size_t it = first; it < m; ++it)
    for (std::size_t ix = 0; ix < F; ++ix) {
      const std::size_t p = it * F + ix;
      if (ev.c[p] < ev.min_c) {
        ev.min_c = ev.c[p];
        ev.min_c_at = p;
      }
      if (ev.w[p] < ev.min_w) {
        ev.min_w = ev.w[p];
        ev.min_w_at = p;
      }
      const double grad2 = 0.25 * (ev.gx[p] * ev.gx[p] + ev.gy[p] * ev.gy[p]);
      ev.R[p] = (geom.b * ev.w[p] + ev.c[p] * chi[ix] - 2.0 * ev.c[p] * ev.w[p] - grad2) /
                geom.omega_d;
      ev.sup = std::max(ev.sup, std::abs(ev.R[p]));
    }
  return ev;
}

EquationEval evaluate_equation(const std::vector<double>& phi, const CuspGeometry& geom,
                               const std::vector<double>& chi, Ends ends) {
  return geom.torus() ? eval_field(phi, geom, chi, ends) : eval_profile(phi, geom, ends);
}

// Directional derivative of eval_field's residual at the state captured in
// ev, in direction delta, with the Dirichlet identity on the A-row. Every
// term is the exact derivative of the discrete residual, so Newton sees a
// consistent Jacobian.
void field_jacobian_apply(const std::vector<double>& delta, const EquationEval& ev,
                          const CuspGeometry& geom, const std::vector<double>& chi,
                          std::vector<double>& out) {
  const std::size_t m = geom.M_t, F = geom.fiber_points();
  const double h = geom.h();
  const Grid& gf = *geom.fiber;
  out.resize(m * F);
  std::vector<double> dut(m * F, 0.0), dc(m * F, 0.0);
  for (std::size_t it = 0; it < m; ++it)
    for (std::size_t ix = 0; ix < F; ++ix) {
      const std::size_t p = it * F + ix;
      if (it == 0) {
        out[p] = delta[p];
        continue;
      }
      const TDeriv d = t_derivatives(delta, it, ix, m, F, h, Ends::Collocated);
      dc[p] = -0.5 * (d.d2 - d.d1);
      dut[p] = d.d1;
    }
  for_each_point(gf, [&](std::size_t ix, const int* cf) {
    for (std::size_t it = 1; it < m; ++it) {
      const std::size_t p = it * F + ix;
      const double dw = fiber_ddc11(delta, gf, p, cf);
      const double dgx = stencil::central_first(dut, gf, p, cf, 0);
      const double dgy = stencil::central_first(dut, gf, p, cf, 1);
      out[p] = ((geom.b - 2.0 * ev.c[p]) * dw + (chi[ix] - 2.0 * ev.w[p]) * dc[p] -
                0.5 * (ev.gx[p] * dgx + ev.gy[p] * dgy)) /
               geom.omega_d;
    }
  });
}

// Sparse direct preconditioner for the cylinder systems. The t-direction is
// stiff (1/h_t^2 against the mild fiber stencils), so plain Jacobi leaves
// restarted GMRES stranded; factoring the anisotropic core - the collocated
// t-tridiagonal beta (d2 - d1) plus the wide fiber dd^c scaled by gamma, with
// the Dirichlet identity on the A-rows - turns both cylinder solves into a
// few Krylov iterations. Only the centered first-order gradient couplings of
// the Newton linearization stay outside the factorization.
void build_cylinder_precond(const CuspGeometry& geom, const std::vector<double>& beta,
                            const std::vector<double>& gamma,
                            Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu) {
  const std::size_t m = geom.M_t, F = geom.fiber_points();
  const Grid& gf = *geom.fiber;
  const double h = geom.h();
  const double hx = gf.h(0), hy = gf.h(1);
  const double wx = 1.0 / (16.0 * hx * hx), wy = 1.0 / (16.0 * hy * hy);
  const double wdiag = -(1.0 / (8.0 * hx * hx) + 1.0 / (8.0 * hy * hy));
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(m * F * 8);
  for_each_point(gf, [&](std::size_t ix, const int* cf) {
    const std::ptrdiff_t jxp = gf.jump(0, cf[0], 2), jxm = gf.jump(0, cf[0], -2);
    const std::ptrdiff_t jyp = gf.jump(1, cf[1], 2), jym = gf.jump(1, cf[1], -2);
    for (std::size_t it = 0; it < m; ++it) {
      const std::size_t p = it * F + ix;
      const int row = static_cast<int>(p);
      if (it == 0) {
        trips.emplace_back(row, row, 1.0);
        continue;
      }
      trips.emplace_back(row, row, gamma[p] * wdiag);
      trips.emplace_back(row, static_cast<int>(p + jxp), gamma[p] * wx);
      trips.emplace_back(row, static_cast<int>(p + jxm), gamma[p] * wx);
      trips.emplace_back(row, static_cast<int>(p + jyp), gamma[p] * wy);
      trips.emplace_back(row, static_cast<int>(p + jym), gamma[p] * wy);
      if (it + 1 == m) {
        // Ghost closure: d1 = 0, d2 = 2 (u_{m-2} - u_{m-1}) / h^2.
        trips.emplace_back(row, static_cast<int>(p - F), beta[p] * 2.0 / (h * h));
        trips.emplace_back(row, row, -beta[p] * 2.0 / (h * h));
      } else {
        trips.emplace_back(row, static_cast<int>(p - F),
                           beta[p] * (1.0 / (h * h) + 0.5 / h));
        trips.emplace_back(row, row, -beta[p] * 2.0 / (h * h));
        trips.emplace_back(row, static_cast<int>(p + F),
                           beta[p] * (1.0 / (h * h) - 0.5 / h));
      }
    }
  });
  Eigen::SparseMatrix<double> M(static_cast<int>(m * F), static_cast<int>(m * F));
  M.setFromTriplets(trips.begin(), trips.end());
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw LinearSolveFailed(
        "cylinder solve: sparse factorization of the preconditioner failed");
}

std::vector<double> precond_solve(const Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
                                  const std::vector<double>& v) {
  Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::VectorXd z = lu.solve(vv);
  return std::vector<double>(z.data(), z.data() + z.size());
}

// The model operator L u = <chi_D, dd^c u>_{omega_D} - kappa (d_t^2 - d_t) u
// on a t-profile (F == 1, fiber term absent) or a full FlatTorus field. The
// t-term enters with the opposite sign to the fiber term because a bump in
// phi raises the fiber metric but lowers the t-coefficient c; that relative
// sign is what the linearization of the fiber equation produces at the
// product configuration, and it is the operator the inward Green's formula
// inverts on profiles.
void model_apply_impl(const std::vector<double>& u, const CuspGeometry& geom,
                      const std::vector<double>& chi, double kk, Ends ends,
                      std::vector<double>& out) {
  const std::size_t m = geom.M_t;
  const std::size_t F = u.size() / m;
  const double h = geom.h();
  out.resize(u.size());
  const std::size_t first = ends == Ends::Collocated ? 1 : 0;
  for (std::size_t it = 0; it < m; ++it)
    for (std::size_t ix = 0; ix < F; ++ix) {
      const std::size_t p = it * F + ix;
      if (it < first) {
        out[p] = u[p];
        continue;
      }
      const TDeriv d = t_derivatives(u, it, ix, m, F, h, ends);
      out[p] = kk * (d.d1 - d.d2);
    }
  if (F == 1) return;
  const Grid& gf = *geom.fiber;
  const double onorm = geom.omega_d * geom.omega_d;
  for_each_point(gf, [&](std::size_t ix, const int* cf) {
    for (std::size_t it = first; it < m; ++it) {
      const std::size_t p = it * F + ix;
      out[p] += chi[ix] * fiber_ddc11(u, gf, p, cf) / onorm;
    }
  });
}

// Remaining integral of e^{-u} g0(u) past T, with the source extended as
// g0(T) e^{-eta (u - T)} and eta averaged from log-ratios of the last
// samples. Only decaying tails are accepted.
double tail_integral(const std::vector<double>& g0, const CuspGeometry& geom) {
  const std::size_t m = g0.size();
  const double gT = g0[m - 1];
  if (gT == 0.0) return 0.0;
  const std::size_t K = std::min<std::size_t>(8, m);
  double eta_sum = 0.0;
  std::size_t cnt = 0;
  for (std::size_t j = m - K; j + 1 < m; ++j) {
    const double y0 = g0[j], y1 = g0[j + 1];
    if (y0 == 0.0 || (y0 > 0.0) != (y1 > 0.0))
      throw TailFitFailed(
          "greens_solve: tail samples change sign, no decaying exponential fits");
    const double rho = y1 / y0;
    if (!(rho < 1.0))
      throw TailFitFailed("greens_solve: tail samples do not decay (ratio " + num(rho) +
                          " per step)");
    eta_sum += -std::log(rho) / geom.h();
    ++cnt;
  }
  const double eta = eta_sum / static_cast<double>(cnt);
  return gT * std::exp(-geom.T) / (1.0 + eta);
}

}  // namespace

std::size_t CuspGeometry::fiber_points() const {
  if (!torus()) return 1;
  if (!fiber) throw ConfigInvalid("cusp geometry: flat torus section needs a fiber grid");
  return fiber->size();
}

std::size_t CuspGeometry::points() const { return M_t * fiber_points(); }

double CuspGeometry::fiber_trace() const { return torus() ? chi_d / omega_d : s; }

std::vector<double> CuspGeometry::fiber_target() const {
  if (!torus()) return {s};
  if (!fiber) throw ConfigInvalid("cusp geometry: flat torus section needs a fiber grid");
  const Grid& gf = *fiber;
  std::vector<double> chi(gf.size(), chi_d);
  if (!chi_pert.empty()) {
    if (chi_pert.size() != gf.size())
      throw ConfigInvalid("cusp geometry: fiber potential has " +
                          std::to_string(chi_pert.size()) + " samples, fiber grid has " +
                          std::to_string(gf.size()));
    for_each_point(gf, [&](std::size_t p, const int* c) {
      chi[p] += fiber_ddc11(chi_pert, gf, p, c);
    });
  }
  for (std::size_t p = 0; p < chi.size(); ++p)
    if (!(chi[p] > 0.0))
      throw NonPositiveMetric("cusp geometry: fiber target coefficient " + num(chi[p]) +
                              " at fiber index " + std::to_string(p) +
                              " is not positive");
  return chi;
}

void CuspGeometry::validate() const {
  if (!(A >= 1.0))
    throw ConfigInvalid("cusp geometry: inner cut A = " + num(A) + " must be at least 1");
  if (!(T > A))
    throw ConfigInvalid("cusp geometry: outer cut T = " + num(T) + " must exceed A = " +
                        num(A));
  if (M_t < 8)
    throw ConfigInvalid("cusp geometry: " + std::to_string(M_t) +
                        " t-nodes, need at least 8");
  if (!(a > 0.0))
    throw ConfigInvalid("cusp geometry: metric fiber coefficient a = " + num(a) +
                        " must be positive");
  if (!(b > 0.0))
    throw ConfigInvalid("cusp geometry: target fiber coefficient b = " + num(b) +
                        " must be positive");
  if (n < 2)
    throw ConfigInvalid("cusp geometry: ambient dimension n = " + std::to_string(n) +
                        ", need at least 2");
  if (!torus()) {
    if (!(s > 0.0))
      throw ConfigInvalid("cusp geometry: fiber trace s = " + num(s) +
                          " must be positive");
    if (fiber)
      throw ConfigInvalid("cusp geometry: point section carries a fiber grid");
    if (!chi_pert.empty())
      throw ConfigInvalid("cusp geometry: point section carries a fiber potential");
    return;
  }
  if (n != 2)
    throw ConfigInvalid("cusp geometry: flat torus section fixes n = 2, got " +
                        std::to_string(n));
  if (!fiber)
    throw ConfigInvalid("cusp geometry: flat torus section needs a fiber grid");
  if (fiber->n() != 1)
    throw ConfigInvalid("cusp geometry: fiber grid has complex dimension " +
                        std::to_string(fiber->n()) + ", need 1");
  if (!(omega_d > 0.0))
    throw NonPositiveMetric("cusp geometry: fiber metric coefficient omega_d = " +
                            num(omega_d) + " is not positive");
  fiber_target();  // validates the potential's size and the target's positivity
}

double background_fiber_coefficient(double b, double c_d, int n) {
  if (!(b > 0.0))
    throw ConfigInvalid("background fiber coefficient: b = " + num(b) +
                        " must be positive");
  if (n < 2)
    throw ConfigInvalid("background fiber coefficient: dimension n = " +
                        std::to_string(n) + ", need at least 2");
  if (c_d >= static_cast<double>(n))
    throw DegenerateClass("background fiber coefficient undefined: C_D = " + num(c_d) +
                          " >= n = " + std::to_string(n));
  return 2.0 * b / (static_cast<double>(n) - c_d);
}

std::vector<double> reduced_residual(const std::vector<double>& phi0,
                                     const CuspGeometry& geom) {
  geom.validate();
  if (phi0.size() != geom.M_t)
    throw ConfigInvalid("reduced_residual: profile has " + std::to_string(phi0.size()) +
                        " samples, expected M_t = " + std::to_string(geom.M_t));
  EquationEval ev = eval_profile(phi0, geom, Ends::Open);
  if (!(ev.min_c > 0.0))
    throw MetricDegenerate("reduced_residual: fiber coefficient c = " + num(ev.min_c) +
                           " at t = " + num(geom.t_node(ev.min_c_at)) +
                           " is not positive");
  return std::move(ev.R);
}

std::vector<double> reduced_residual_field(const std::vector<double>& phi,
                                           const CuspGeometry& geom) {
  geom.validate();
  if (!geom.torus())
    throw ConfigInvalid("reduced_residual_field: needs a flat torus section");
  if (phi.size() != geom.points())
    throw ConfigInvalid("reduced_residual_field: field has " +
                        std::to_string(phi.size()) + " samples, expected " +
                        std::to_string(geom.points()));
  const std::vector<double> chi = geom.fiber_target();
  EquationEval ev = eval_field(phi, geom, chi, Ends::Open);
  if (!ev.positive()) {
    const std::size_t F = geom.fiber_points();
    throw MetricDegenerate(
        "reduced_residual_field: fiber data degenerate (min c = " + num(ev.min_c) +
        " at t = " + num(geom.t_node(ev.min_c_at / F)) + ", min w = " + num(ev.min_w) +
        " at t = " + num(geom.t_node(ev.min_w_at / F)) + ")");
  }
  return std::move(ev.R);
}

std::vector<double> model_operator_apply(const std::vector<double>& u,
                                         const CuspGeometry& geom, double kappa) {
  geom.validate();
  const double kk = resolve_kappa(geom, kappa);
  std::vector<double> out;
  if (u.size() == geom.M_t) {
    model_apply_impl(u, geom, {}, kk, Ends::Open, out);
    return out;
  }
  if (geom.torus() && u.size() == geom.points()) {
    model_apply_impl(u, geom, geom.fiber_target(), kk, Ends::Open, out);
    return out;
  }
  throw ConfigInvalid("model operator: input has " + std::to_string(u.size()) +
                      " samples; expected a t-profile (M_t = " +
                      std::to_string(geom.M_t) + ") or the full cylinder (" +
                      std::to_string(geom.points()) + ")");
}

std::vector<double> greens_solve(const std::vector<double>& g0, const CuspGeometry& geom,
                                 double kappa, TailMode tail) {
  geom.validate();
  const std::size_t m = geom.M_t;
  if (g0.size() != m)
    throw ConfigInvalid("greens_solve: source has " + std::to_string(g0.size()) +
                        " samples, expected M_t = " + std::to_string(m));
  const double kk = resolve_kappa(geom, kappa);
  const double h = geom.h();
  // Inward integral I(t) = int_t^infinity e^{-u} g0(u) / kk du by composite
  // trapezoid, seeded at T by the chosen tail model.
  std::vector<double> f(m), I(m);
  for (std::size_t i = 0; i < m; ++i) f[i] = std::exp(-geom.t_node(i)) * g0[i] / kk;
  I[m - 1] = tail == TailMode::ExponentialFit ? tail_integral(g0, geom) / kk : 0.0;
  for (std::size_t i = m - 1; i-- > 0;) I[i] = I[i + 1] + 0.5 * h * (f[i] + f[i + 1]);
  // v(t) = int_A^t e^s I(s) ds vanishes at A by construction, and
  // differentiating gives v'' - v' = -g0 / kk, so the model operator
  // -kk (d_t^2 - d_t) applied to v returns +g0.
  std::vector<double> E(m), v(m);
  for (std::size_t i = 0; i < m; ++i) E[i] = std::exp(geom.t_node(i)) * I[i];
  v[0] = 0.0;
  for (std::size_t i = 1; i < m; ++i) v[i] = v[i - 1] + 0.5 * h * (E[i - 1] + E[i]);
  return v;
}

std::vector<double> model_solve(const std::vector<double>& g, const CuspGeometry& geom,
                                double kappa, double boundary) {
  geom.validate();
  const double kk = resolve_kappa(geom, kappa);
  const std::size_t m = geom.M_t;
  const double h = geom.h();
  if (g.size() == m) {
    // Collocation rows of -kk (d_t^2 - d_t): Dirichlet at A, ghost closure
    // at T (the ghost keeps only the sub and diagonal entries).
    std::vector<double> sub(m, 0.0), dia(m, 0.0), sup(m, 0.0), rhs(g);
    dia[0] = 1.0;
    rhs[0] = boundary;
    for (std::size_t i = 1; i + 1 < m; ++i) {
      sub[i] = -kk * (1.0 / (h * h) + 1.0 / (2.0 * h));
      dia[i] = 2.0 * kk / (h * h);
      sup[i] = -kk * (1.0 / (h * h) - 1.0 / (2.0 * h));
    }
    sub[m - 1] = -2.0 * kk / (h * h);
    dia[m - 1] = 2.0 * kk / (h * h);
    return solve_tridiagonal(std::move(sub), std::move(dia), std::move(sup),
                             std::move(rhs));
  }
  if (!geom.torus() || g.size() != geom.points())
    throw ConfigInvalid("model_solve: source has " + std::to_string(g.size()) +
                        " samples; expected a t-profile (M_t = " + std::to_string(m) +
                        ") or the full cylinder (" + std::to_string(geom.points()) +
                        ")");
  const std::vector<double> chi = geom.fiber_target();
  const std::size_t F = geom.fiber_points();
  std::vector<double> rhs(g), x(m * F, 0.0);
  for (std::size_t ix = 0; ix < F; ++ix) {
    rhs[ix] = boundary;  // Dirichlet row carries the boundary value
    x[ix] = boundary;    // seeding it keeps the Krylov space off that row
  }
  // The preconditioner here is the exact collocated operator, so GMRES is a
  // residual check around one sparse solve; it still reports a stall if the
  // factorization and the matrix-free stencils ever drift apart.
  std::vector<double> beta(m * F, -kk), gamma(m * F, 0.0);
  const double onorm = geom.omega_d * geom.omega_d;
  for (std::size_t it = 0; it < m; ++it)
    for (std::size_t ix = 0; ix < F; ++ix) gamma[it * F + ix] = chi[ix] / onorm;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  build_cylinder_precond(geom, beta, gamma, lu);
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    model_apply_impl(precond_solve(lu, in), geom, chi, kk, Ends::Collocated, out);
  };
  const std::vector<double> ones(m * F, 1.0);
  const std::size_t cap = std::max<std::size_t>(5000, 3 * m * F);
  const GmresResult res = gmres(apply, rhs, x, ones, 120, 5e-13, cap);
  if (!res.converged)
    throw LinearSolveFailed("model_solve: GMRES stalled at relative residual " +
                            num(res.rel_residual) + " after " +
                            std::to_string(res.iters) + " applications");
  x = precond_solve(lu, x);
  for (std::size_t ix = 0; ix < F; ++ix) x[ix] = rhs[ix];  // Dirichlet row is exact
  return x;
}

FiberSplit fiber_decompose(const std::vector<double>& u, const CuspGeometry& geom) {
  geom.validate();
  const std::size_t m = geom.M_t, F = geom.fiber_points();
  FiberSplit out;
  if (u.size() == m) {
    out.mean = u;
    out.perp.assign(m, 0.0);
    return out;
  }
  if (!geom.torus() || u.size() != m * F)
    throw ConfigInvalid("fiber_decompose: input has " + std::to_string(u.size()) +
                        " samples; expected M_t = " + std::to_string(m) +
                        " or the full cylinder (" + std::to_string(m * F) + ")");
  out.mean.resize(m);
  out.perp.resize(m * F);
  for (std::size_t it = 0; it < m; ++it) {
    double sum = 0.0;
    for (std::size_t ix = 0; ix < F; ++ix) sum += u[it * F + ix];
    const double mean = sum / static_cast<double>(F);
    out.mean[it] = mean;
    for (std::size_t ix = 0; ix < F; ++ix) out.perp[it * F + ix] = u[it * F + ix] - mean;
  }
  return out;
}

ExponentialFit fit_exponential(const std::vector<double>& t,
                               const std::vector<double>& y) {
  if (t.size() != y.size())
    throw ConfigInvalid("fit_exponential: " + std::to_string(t.size()) +
                        " abscissae vs " + std::to_string(y.size()) + " samples");
  const std::size_t m = y.size();
  if (m < 8)
    throw WindowTooShort("fit_exponential: " + std::to_string(m) +
                         " samples, need at least 8");
  ExponentialFit fit;
  fit.samples = m;
  double lo = y[0], hi = y[0], mean = 0.0;
  for (double v : y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(m);
  const double osc = hi - lo;
  if (osc <= 1e-12 * std::max(1.0, std::abs(mean))) {
    // Exactly constant data keeps its value bit for bit; near-constant data
    // reports the mean and the residual scatter.
    const double level = osc == 0.0 ? y.front() : mean;
    double sse = 0.0;
    for (double v : y) sse += (v - level) * (v - level);
    fit.c0 = level;
    fit.c1 = 0.0;
    fit.eta = kInf;
    fit.rms = std::sqrt(sse / static_cast<double>(m));
    fit.shape = TailShape::Flat;
    return fit;
  }

  // Work in the shifted basis e^{-eta (t - t0)} so the columns stay O(1);
  // the reported c1 is rescaled back at the end.
  const double t0 = t[0];
  const double mm = static_cast<double>(m);
  // Returns false when the exponential column is numerically collinear with
  // the constant (the normal equations lose their determinant).
  auto linear_fit = [&](double eta, double& c0, double& c1s, double& sse) -> bool {
    double Se = 0.0, See = 0.0, Sy = 0.0, Sey = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = std::exp(-eta * (t[i] - t0));
      Se += e;
      See += e * e;
      Sy += y[i];
      Sey += e * y[i];
    }
    const double det = mm * See - Se * Se;
    if (!(det > 1e-14 * mm * See)) return false;
    c0 = (See * Sy - Se * Sey) / det;
    c1s = (mm * Sey - Se * Sy) / det;
    sse = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = c0 + c1s * std::exp(-eta * (t[i] - t0)) - y[i];
      sse += r * r;
    }
    return true;
  };

  // Three-point ratio seed on the (near) equally spaced samples, plus a
  // small ladder of fallbacks; Gauss-Newton starts from the best of them.
  std::vector<double> seeds = {1e-2, 1e-1, 0.5, 1.0, 2.0, 5.0};
  {
    const std::size_t q = (m - 1) / 2;
    const double d1 = y[q] - y[0], d2 = y[2 * q] - y[q];
    if (d1 != 0.0 && t[q] > t[0]) {
      const double r = d2 / d1;
      if (r > 1e-12 && r < 1.0 - 1e-12)
        seeds.insert(seeds.begin(), -std::log(r) / (t[q] - t[0]));
    }
  }
  double eta = 0.0, c0 = mean, c1s = 0.0, sse = kInf;
  bool seeded = false;
  for (double cand : seeds) {
    if (!(cand > 1e-9) || !(cand < 1e6)) continue;
    double c0t, c1t, sset;
    if (!linear_fit(cand, c0t, c1t, sset)) continue;
    if (sset < sse) {
      eta = cand;
      c0 = c0t;
      c1s = c1t;
      sse = sset;
      seeded = true;
    }
  }
  if (!seeded) {
    double sse0 = 0.0;
    for (double v : y) sse0 += (v - mean) * (v - mean);
    fit.c0 = mean;
    fit.c1 = 0.0;
    fit.eta = 0.0;
    fit.rms = std::sqrt(sse0 / mm);
    fit.shape = TailShape::Unresolved;
    return fit;
  }

  // Gauss-Newton on eta alone, the linear pair eliminated exactly at every
  // trial, with step halving as damping.
  for (int iter = 0; iter < 80; ++iter) {
    double numr = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = std::exp(-eta * (t[i] - t0));
      const double r = c0 + c1s * e - y[i];
      const double J = -c1s * (t[i] - t0) * e;
      numr += r * J;
      den += J * J;
    }
    if (!(den > 0.0)) break;
    double step = -numr / den;
    double taken = 0.0;
    for (int halve = 0; halve < 45; ++halve, step *= 0.5) {
      const double eta_try = std::clamp(eta + step, 1e-9, 1e6);
      if (eta_try == eta) break;
      double c0t, c1t, sset;
      if (!linear_fit(eta_try, c0t, c1t, sset)) continue;
      if (sset < sse) {
        taken = eta_try - eta;
        eta = eta_try;
        c0 = c0t;
        c1s = c1t;
        sse = sset;
        break;
      }
    }
    if (taken == 0.0) break;
    if (std::abs(taken) <= 1e-12 * std::max(1.0, eta)) break;
  }

  fit.rms = std::sqrt(sse / mm);
  const bool floor_pinned = eta <= 2e-3;
  const bool blown_up = std::abs(c1s) > 1e8 * osc;
  const bool unscalable = eta * std::abs(t0) > 300.0;
  // A decay slower than half an e-fold across the window cannot be told
  // apart from drift, and a residual above a twentieth of the data swing
  // means the exponential never explained the samples.
  const bool under_resolved = eta * (t.back() - t.front()) < 0.5;
  const bool misfit = fit.rms > 0.05 * osc;
  if (floor_pinned || blown_up || unscalable || under_resolved || misfit) {
    fit.c0 = c0;
    fit.c1 = 0.0;
    fit.eta = 0.0;
    fit.shape = TailShape::Unresolved;
    return fit;
  }
  fit.c0 = c0;
  fit.c1 = c1s * std::exp(eta * t0);
  fit.eta = eta;
  fit.shape = TailShape::Decaying;
  return fit;
}

AsymptoticFit fit_asymptotics(const CuspProfile& profile) {
  const CuspGeometry& geom = profile.geom;
  geom.validate();
  const std::size_t m = geom.M_t, F = geom.fiber_points();
  if (profile.phi0.size() != m && profile.phi0.size() != m * F)
    throw ConfigInvalid("fit_asymptotics: profile has " +
                        std::to_string(profile.phi0.size()) + " samples; expected " +
                        std::to_string(m) + " or " + std::to_string(m * F));
  if (profile.c.size() != profile.phi0.size())
    throw ConfigInvalid("fit_asymptotics: fiber coefficient samples (" +
                        std::to_string(profile.c.size()) +
                        ") do not match the profile (" +
                        std::to_string(profile.phi0.size()) + ")");
  const FiberSplit phi_split = fiber_decompose(profile.phi0, geom);
  const FiberSplit c_split = fiber_decompose(profile.c, geom);
  const double cut = 0.5 * (geom.A + geom.T) - 1e-12;
  std::vector<double> ts, ys;
  double c_sum = 0.0;
  for (std::size_t it = 0; it < m; ++it) {
    const double ti = geom.t_node(it);
    if (ti < cut) continue;
    ts.push_back(ti);
    ys.push_back(phi_split.mean[it]);
    c_sum += c_split.mean[it];
  }
  if (ts.size() < 8)
    throw WindowTooShort("fit_asymptotics: tail window holds " +
                         std::to_string(ts.size()) + " samples, need at least 8");
  AsymptoticFit out;
  out.tail = fit_exponential(ts, ys);
  out.c_limit = c_sum / static_cast<double>(ts.size());
  out.s_target = static_cast<double>(geom.n) - geom.b / geom.a;
  if (!geom.torus()) {
    // Limit equation of the t-profile model: the settled coefficient obeys
    // c = b / (n - s), so the measured coefficient reads back the trace.
    out.s_inf = static_cast<double>(geom.n) - geom.b / out.c_limit;
  } else {
    const std::vector<double> chi = geom.fiber_target();
    const Grid& gf = *geom.fiber;
    double sum = 0.0;
    if (profile.phi0.size() == m) {
      // A t-profile never moves the fiber metric.
      for (std::size_t ix = 0; ix < F; ++ix) sum += chi[ix] / geom.omega_d;
    } else {
      // Pointwise trace of the target against the settled outer slice.
      for_each_point(gf, [&](std::size_t ix, const int* cf) {
        const std::size_t p = (m - 1) * F + ix;
        const double wT = geom.omega_d + fiber_ddc11(profile.phi0, gf, p, cf);
        if (!(wT > 0.0))
          throw MetricDegenerate("fit_asymptotics: settled fiber metric entry " +
                                 num(wT) + " at the outer slice is not positive");
        sum += chi[ix] / wT;
      });
    }
    out.s_inf = sum / static_cast<double>(F);
  }
  out.s_gap = std::abs(out.s_inf - out.s_target);
  return out;
}

CuspProfile solve_cusp_bvp(const CuspGeometry& geom, const std::vector<double>& boundary,
                           const CuspSolveConfig& config) {
  geom.validate();
  if (config.max_newton_iters < 0)
    throw ConfigInvalid("solve_cusp_bvp: max_newton_iters must be nonnegative");
  if (!(config.tol >= 0.0))
    throw ConfigInvalid("solve_cusp_bvp: tol must be nonnegative");
  if (!(config.min_step > 0.0))
    throw ConfigInvalid("solve_cusp_bvp: min_step must be positive");
  const std::size_t m = geom.M_t, F = geom.fiber_points();
  const double h = geom.h();
  const double n = static_cast<double>(geom.n);
  if (!geom.torus() && geom.s >= n)
    throw MetricDegenerate("solve_cusp_bvp: fiber trace s = " + num(geom.s) +
                           " >= n = " + num(n) +
                           " leaves no positive settled coefficient b / (n - s)");
  const std::size_t cols = geom.torus() ? F : 1;
  if (boundary.size() != 1 && boundary.size() != cols)
    throw ConfigInvalid("solve_cusp_bvp: boundary slice has " +
                        std::to_string(boundary.size()) +
                        " samples; expected 1 or the fiber size " +
                        std::to_string(cols));
  const std::vector<double> chi = geom.fiber_target();

  // Initial state: the A-slice replicated down the cylinder. The Dirichlet
  // row of every linearization keeps the slice pinned from then on.
  std::vector<double> phi(m * cols);
  for (std::size_t it = 0; it < m; ++it)
    for (std::size_t ix = 0; ix < cols; ++ix)
      phi[it * cols + ix] = boundary[boundary.size() == 1 ? 0 : ix];
  EquationEval cur = evaluate_equation(phi, geom, chi, Ends::Collocated);
  if (!cur.positive())
    throw MetricDegenerate("solve_cusp_bvp: initial profile degenerate (min c = " +
                           num(cur.min_c) + ", min w = " + num(cur.min_w) + ")");

  int iters = 0;
  while (cur.sup > config.tol) {
    if (iters >= config.max_newton_iters)
      throw MaxIters("solve_cusp_bvp: residual " + num(cur.sup) + " after " +
                     std::to_string(iters) + " iterations (tol " + num(config.tol) +
                     ")");
    std::vector<double> delta;
    if (!geom.torus()) {
      // d c = -(d2 - d1)/2 makes the profile Jacobian nu (d2 - d1) with
      // nu = (n - s)/2; assembled directly as a tridiagonal system.
      const double nu = 0.5 * (n - geom.s);
      std::vector<double> sub(m, 0.0), dia(m, 0.0), sup(m, 0.0), rhs(m, 0.0);
      dia[0] = 1.0;
      for (std::size_t i = 1; i + 1 < m; ++i) {
        sub[i] = nu * (1.0 / (h * h) + 1.0 / (2.0 * h));
        dia[i] = -2.0 * nu / (h * h);
        sup[i] = nu * (1.0 / (h * h) - 1.0 / (2.0 * h));
        rhs[i] = -cur.R[i];
      }
      sub[m - 1] = 2.0 * nu / (h * h);
      dia[m - 1] = -2.0 * nu / (h * h);
      rhs[m - 1] = -cur.R[m - 1];
      delta = solve_tridiagonal(std::move(sub), std::move(dia), std::move(sup),
                                std::move(rhs));
    } else {
      std::vector<double> rhs(m * F, 0.0);
      for (std::size_t p = F; p < m * F; ++p) rhs[p] = -cur.R[p];
      delta.assign(m * F, 0.0);
      // Factor the current linearization minus its gradient couplings; the
      // preconditioned Jacobian is then a compact perturbation of the
      // identity and GMRES needs only a handful of iterations.
      std::vector<double> beta(m * F, 0.0), gamma(m * F, 0.0);
      for (std::size_t it = 1; it < m; ++it)
        for (std::size_t ix = 0; ix < F; ++ix) {
          const std::size_t p = it * F + ix;
          beta[p] = -0.5 * (chi[ix] - 2.0 * cur.w[p]) / geom.omega_d;
          gamma[p] = (geom.b - 2.0 * cur.c[p]) / geom.omega_d;
        }
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      build_cylinder_precond(geom, beta, gamma, lu);
      auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        field_jacobian_apply(precond_solve(lu, in), cur, geom, chi, out);
      };
      const std::vector<double> ones(m * F, 1.0);
      const std::size_t cap = std::max<std::size_t>(5000, 3 * m * F);
      const GmresResult res = gmres(apply, rhs, delta, ones, config.gmres_restart,
                                    config.gmres_rtol, cap);
      if (!res.converged)
        throw LinearSolveFailed("solve_cusp_bvp: GMRES stalled at relative residual " +
                                num(res.rel_residual) + " after " +
                                std::to_string(res.iters) + " applications");
      delta = precond_solve(lu, delta);
      for (std::size_t ix = 0; ix < F; ++ix) delta[ix] = 0.0;  // Dirichlet row
    }

    bool accepted = false;
    std::string last_reject = "no step candidates at or above the floor";
    for (double lam = 1.0; lam >= config.min_step; lam *= 0.5) {
      std::vector<double> trial(phi.size());
      for (std::size_t p = 0; p < phi.size(); ++p) trial[p] = phi[p] + lam * delta[p];
      EquationEval ev = evaluate_equation(trial, geom, chi, Ends::Collocated);
      if (!ev.positive()) {
        last_reject = "fiber data degenerate (min c = " + num(ev.min_c) + ", min w = " +
                      num(ev.min_w) + ") at step " + num(lam);
        continue;
      }
      if (!(ev.sup < cur.sup)) {
        last_reject = "residual " + num(ev.sup) + " did not drop below " + num(cur.sup) +
                      " at step " + num(lam);
        continue;
      }
      phi.swap(trial);
      cur = std::move(ev);
      accepted = true;
      break;
    }
    if (!accepted)
      throw NewtonStalled("solve_cusp_bvp: no step of at least " + num(config.min_step) +
                          " acceptable; last rejection: " + last_reject);
    ++iters;
  }

  CuspProfile out;
  out.geom = geom;
  out.phi0 = std::move(phi);
  // The solve controls the collocated rows; the published fiber coefficient
  // uses the open stencils so the boundary rows carry meaningful values too,
  // and positivity is required there as well.
  EquationEval open_ev = evaluate_equation(out.phi0, geom, chi, Ends::Open);
  if (!open_ev.positive())
    throw MetricDegenerate(
        "solve_cusp_bvp: accepted profile loses positivity at the boundary stencils "
        "(min c = " +
        num(open_ev.min_c) + ", min w = " + num(open_ev.min_w) + ")");
  out.c = std::move(open_ev.c);
  out.residual = std::move(cur.R);
  out.residual_sup = cur.sup;
  out.newton_iters = iters;
  try {
    out.fit = fit_asymptotics(out);
  } catch (const WindowTooShort&) {
    // Cylinder too short for tail diagnostics; the fit stays unresolved.
  }
  out.non_product_limit =
      out.fit.s_gap > 1e-4 * std::max(1.0, std::abs(out.fit.s_target));
  return out;
}

CuspProfile solve_cusp_bvp(const CuspGeometry& geom, double boundary,
                           const CuspSolveConfig& config) {
  return solve_cusp_bvp(geom, std::vector<double>{boundary}, config);
}

TranslationReport translation_differences(const CuspProfile& profile,
                                          std::vector<double> starts) {
  const CuspGeometry& geom = profile.geom;
  geom.validate();
  const FiberSplit split = fiber_decompose(profile.phi0, geom);
  const std::vector<double>& y = split.mean;
  const std::size_t m = geom.M_t;
  const double h = geom.h();
  const double span = geom.T - geom.A;
  if (starts.empty()) {
    for (std::size_t j = 0;; ++j) {
      const double sj = static_cast<double>(j * j);
      if (sj > span + 1e-12) break;
      starts.push_back(sj);
    }
  } else {
    if (starts.front() < -1e-12)
      throw ConfigInvalid(
          "translation windows: starts must be nonnegative offsets from A");
    for (std::size_t j = 0; j + 1 < starts.size(); ++j)
      if (!(starts[j] < starts[j + 1]))
        throw ConfigInvalid("translation windows: starts must strictly increase");
    if (starts.back() > span + 1e-12)
      throw ConfigInvalid("translation windows: last start " + num(starts.back()) +
                          " exceeds the cylinder span " + num(span));
  }
  if (starts.size() < 4)
    throw WindowTooShort("translation windows: only " +
                         std::to_string(starts.empty() ? 0 : starts.size() - 1) +
                         " windows fit in a span of " + num(span) + ", need 3");
  TranslationReport rep;
  rep.starts = starts;
  const std::size_t W = starts.size() - 1;
  rep.sup_diffs.resize(W);
  double dmax = 0.0;
  for (std::size_t jw = 0; jw < W; ++jw) {
    const double lo = starts[jw], hi = starts[jw + 1];
    const std::size_t i_lo = static_cast<std::size_t>(std::ceil(lo / h - 1e-9));
    std::size_t i_hi = static_cast<std::size_t>(std::floor(hi / h + 1e-9));
    i_hi = std::min(i_hi, m - 1);
    std::size_t ic = static_cast<std::size_t>(std::llround(0.5 * (lo + hi) / h));
    ic = std::clamp(ic, i_lo, i_hi);
    double d = 0.0;
    for (std::size_t i = i_lo; i <= i_hi; ++i) d = std::max(d, std::abs(y[i] - y[ic]));
    rep.sup_diffs[jw] = d;
    dmax = std::max(dmax, d);
  }
  rep.decaying = true;
  const double slack = 1e-14 * std::max(1.0, dmax);
  for (std::size_t jw = 0; jw + 1 < W; ++jw)
    if (rep.sup_diffs[jw + 1] > rep.sup_diffs[jw] + slack) {
      rep.decaying = false;
      break;
    }
  return rep;
}

}  // namespace jeq
