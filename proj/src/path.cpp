#include "jeq/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jeq/ddc.hpp"
#include "jeq/errors.hpp"
#include "jeq/gmres.hpp"
#include "jeq/smallmat.hpp"
#include "jeq/subsolution.hpp"
#include "jeq/threads.hpp"

namespace jeq {

namespace {

// Metric positivity floor for accepting a Newton trial: min eig(omega_phi)
// must stay at or above this so inverses and traces remain well conditioned.
constexpr double kEigFloor = 1e-8;

// Relative tolerance and restart length of the inner GMRES solve.
constexpr double kLinearRtol = 1e-8;
constexpr int kLinearRestart = 50;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

void require_same_grid(const Grid& a, const Grid& b, const char* who) {
  if (!a.same(b)) throw std::invalid_argument(std::string(who) + ": fields must share one grid");
}

void require_unit_interval(double t, const char* who) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument(std::string(who) + ": t must lie in [0, 1]");
}

/// chi_t = t chi + (1-t) omega, the moving target of the t-phase.
HermitianField blend_target(const HermitianField& omega, const HermitianField& chi,
                            double t) {
  HermitianField out(omega.grid);
  const std::size_t m = out.m.size();
  for (std::size_t i = 0; i < m; ++i) out.m[i] = t * chi.m[i] + (1.0 - t) * omega.m[i];
  return out;
}

/// Real trace of the product of two Hermitian matrices, using only the upper
/// triangle of each: tr(P D) = sum_i P_ii D_ii + 2 sum_{i<j} Re(P_ij conj(D_ij)).
inline double herm_trace_product(const cd* p, const Mat& d, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    s += p[i * n + i].real() * d(i, i).real();
    for (int j = i + 1; j < n; ++j) s += 2.0 * (p[i * n + j] * std::conj(d(i, j))).real();
  }
  return s;
}

/// Residual evaluation bundle at a fixed potential: the candidate metric, its
/// smallest eigenvalue over the grid (with the point attaining it), and, when
/// the metric clears `eig_floor`, the residual field and its sup-norm.
struct Eval {
  HermitianField gphi;
  PotentialField R;
  double sup = 0.0;
  double min_eig = 0.0;
  std::size_t worst = 0;
  bool ok = false;

  explicit Eval(const Grid& g) : gphi(g), R(g) {}
};

Eval evaluate(const PotentialField& phi, double eps, const HermitianField& omega,
              const HermitianField& chi_t, double eig_floor, int threads) {
  const Grid& g = phi.grid;
  Eval ev(g);
  ev.gphi = with_potential(omega, phi, threads);
  const std::size_t M = g.size();
  const int n = g.n();

  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < M; ++p) {
    const double e = min_eig_herm(ev.gphi.matrix(p));
    if (e < mn) {
      mn = e;
      ev.worst = p;
    }
  }
  ev.min_eig = mn;
  if (!(mn >= eig_floor) || !(mn > 0.0)) return ev;
  ev.ok = true;

  double sup = 0.0;
  for (std::size_t p = 0; p < M; ++p) {
    const double r = trace_quotient(ev.gphi.matrix(p), chi_t.matrix(p)) -
                     n * std::exp(-eps * phi[p]);
    ev.R[p] = r;
    sup = std::max(sup, std::abs(r));
  }
  ev.sup = sup;
  return ev;
}

/// Coefficient clusters of the linearized operator
///   L u = tr(P ddc u) - w u,  P = G_phi^{-1} chi_t G_phi^{-1},
///   w = n eps e^{-eps phi},
/// plus the diagonal of -L for Jacobi preconditioning.
struct LinearCoeffs {
  HermitianField P;
  std::vector<double> w;
  std::vector<double> inv_diag;

  explicit LinearCoeffs(const Grid& g) : P(g), w(g.size(), 0.0), inv_diag(g.size(), 0.0) {}
};

LinearCoeffs linear_coeffs(const PotentialField& phi, double eps,
                           const HermitianField& gphi, const HermitianField& chi_t) {
  const Grid& g = phi.grid;
  const std::size_t M = g.size();
  const int n = g.n();
  LinearCoeffs lc(g);

  // Weight of u(p) contributed by the wide second difference in tr(P ddc u):
  // each diagonal entry (ddc u)_ii carries -(1/(8 hx^2) + 1/(8 hy^2)) u(p).
  std::vector<double> diag_coef(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double hx = g.h(2 * i), hy = g.h(2 * i + 1);
    diag_coef[static_cast<std::size_t>(i)] = 1.0 / (8.0 * hx * hx) + 1.0 / (8.0 * hy * hy);
  }

  for (std::size_t p = 0; p < M; ++p) {
    const Mat inv = inverse_herm(gphi.matrix(p));
    const Mat pm = inv * chi_t.matrix(p) * inv;
    lc.P.set_matrix(p, pm);
    const double wp = n * eps * std::exp(-eps * phi[p]);
    lc.w[p] = wp;
    double d = wp;
    for (int i = 0; i < n; ++i) d += pm(i, i).real() * diag_coef[static_cast<std::size_t>(i)];
    lc.inv_diag[p] = 1.0 / d;
  }
  return lc;
}

/// out = sign * (tr(P ddc in) - w .* in), fused so GMRES never materializes a
/// Hessian field. Chunked over threads; each point writes only out[p].
void apply_linearized(const Grid& g, const HermitianField& P, const std::vector<double>& w,
                      const std::vector<double>& in, std::vector<double>& out, double sign,
                      int threads) {
  const std::size_t M = g.size();
  const int n = g.n();
  auto work = [&](std::size_t lo, std::size_t hi) {
    Mat d(n, n);
    for_point_range(g, lo, hi, [&](std::size_t p, const int* c) {
      ddc_point(in, g, p, c, d);
      const double tr = herm_trace_product(&P.m[P.block(p)], d, n);
      out[p] = sign * (tr - w[p] * in[p]);
    });
  };
  threads = resolve_threads(threads);
  if (threads <= 1 || M < 4096) {
    work(0, M);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t nchunk = static_cast<std::size_t>(threads);
  const std::size_t base = M / nchunk, rem = M % nchunk;
  std::size_t lo = 0;
  for (std::size_t k = 0; k < nchunk; ++k) {
    const std::size_t hi = lo + base + (k < rem ? 1 : 0);
    pool.emplace_back(work, lo, hi);
    lo = hi;
  }
  for (auto& th : pool) th.join();
}

PathState make_state(const PotentialField& phi, double eps, double t, int iters,
                     const Eval& cur, const HermitianField& omega,
                     const HermitianField& chi, const HermitianField& chi_t) {
  PathState st(phi.grid);
  st.eps = eps;
  st.t = t;
  st.phi = phi;
  st.residual_sup = cur.sup;
  st.newton_iters = iters;
  st.diag = trace_diagnostics(cur.gphi, chi_t, cur.R);
  st.eps_phi_sup = eps * sup_norm(phi);
  st.phi_l2 = l2_norm(phi, omega);
  st.grad_energy = gradient_energy(phi, omega);
  st.tr_chi_omega_sup = sup_norm(trace_ratio(chi, cur.gphi));
  st.osc_phi = oscillation(phi);
  return st;
}

}  // namespace

NormalizedPair normalize_pair(const HermitianField& omega, const HermitianField& chi) {
  require_same_grid(omega.grid, chi.grid, "normalize_pair");
  const int n = omega.grid.n();
  const double vol = integrate_wedge({{&omega, n}});
  const double mix = integrate_wedge({{&omega, n - 1}, {&chi, 1}});
  if (!(vol > 0.0))
    throw NonPositiveMetric("normalize_pair: int omega^n = " + num(vol) + " is not positive");
  if (!(mix > 0.0))
    throw NonPositiveMetric("normalize_pair: int omega^{n-1} ^ chi = " + num(mix) +
                            " is not positive");

  const double alpha = std::pow(vol, -1.0 / n);
  const double beta = std::pow(vol, (n - 1.0) / n) / mix;
  NormalizedPair out{HermitianField(omega.grid), HermitianField(chi.grid), vol / mix};
  for (std::size_t i = 0; i < omega.m.size(); ++i) {
    out.omega.m[i] = alpha * omega.m[i];
    out.chi.m[i] = beta * chi.m[i];
  }
  return out;
}

PotentialField residual(const PotentialField& phi, double eps, double t,
                        const HermitianField& omega, const HermitianField& chi,
                        int threads) {
  require_same_grid(omega.grid, chi.grid, "residual");
  require_same_grid(omega.grid, phi.grid, "residual");
  require_unit_interval(t, "residual");
  const HermitianField chi_t = blend_target(omega, chi, t);
  Eval ev = evaluate(phi, eps, omega, chi_t, 0.0, threads);
  if (!ev.ok)
    throw NonPositiveMetric("residual: omega_phi has min eigenvalue " + num(ev.min_eig) +
                            " at flat index " + std::to_string(ev.worst));
  return std::move(ev.R);
}

PotentialField linearized_apply(const PotentialField& u, const PotentialField& phi,
                                double eps, double t, const HermitianField& omega,
                                const HermitianField& chi, int threads) {
  require_same_grid(omega.grid, chi.grid, "linearized_apply");
  require_same_grid(omega.grid, phi.grid, "linearized_apply");
  require_same_grid(omega.grid, u.grid, "linearized_apply");
  require_unit_interval(t, "linearized_apply");
  const Grid& g = phi.grid;
  const HermitianField chi_t = blend_target(omega, chi, t);
  const HermitianField gphi = with_potential(omega, phi, threads);
  const double mn = min_metric_eig(gphi);
  if (!(mn > 0.0))
    throw NonPositiveMetric("linearized_apply: omega_phi has min eigenvalue " + num(mn));
  const LinearCoeffs lc = linear_coeffs(phi, eps, gphi, chi_t);
  PotentialField out(g);
  apply_linearized(g, lc.P, lc.w, u.v, out.v, 1.0, threads);
  return out;
}

PathState newton_solve(const PotentialField& phi_init, double eps, double t,
                       const HermitianField& omega, const HermitianField& chi,
                       const PathConfig& config) {
  require_same_grid(omega.grid, chi.grid, "newton_solve");
  require_same_grid(omega.grid, phi_init.grid, "newton_solve");
  require_unit_interval(t, "newton_solve");
  if (!(eps > 0.0)) throw std::invalid_argument("newton_solve: eps must be positive");
  const double chi_eig = min_metric_eig(chi);
  if (!(chi_eig > 0.0))
    throw NonPositiveMetric("newton_solve: target chi has min eigenvalue " + num(chi_eig) +
                            "; the path needs a Kahler target");

  const Grid& g = omega.grid;
  const std::size_t M = g.size();
  const int threads = resolve_threads(config.threads);
  const HermitianField chi_t = blend_target(omega, chi, t);

  PotentialField phi = phi_init;
  Eval cur = evaluate(phi, eps, omega, chi_t, kEigFloor, threads);
  if (!cur.ok)
    throw NewtonStalled("newton_solve: initial omega_phi has min eigenvalue " +
                        num(cur.min_eig) + " at flat index " + std::to_string(cur.worst) +
                        " (eps=" + num(eps) + ", t=" + num(t) + ")");

  const std::size_t max_linear = 10 * M;
  std::vector<double> rhs(M), delta(M);
  int iters = 0;
  while (cur.sup > config.newton_tol) {
    if (iters >= config.max_newton_iters)
      throw MaxIters("newton_solve: residual " + num(cur.sup) + " after " +
                     std::to_string(iters) + " iterations (eps=" + num(eps) +
                     ", t=" + num(t) + ")");

    const LinearCoeffs lc = linear_coeffs(phi, eps, cur.gphi, chi_t);
    // Newton step: dR.u = -L u, so solve (-L) delta = -R and take phi + delta.
    for (std::size_t p = 0; p < M; ++p) rhs[p] = -cur.R[p];
    std::fill(delta.begin(), delta.end(), 0.0);
    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
      apply_linearized(g, lc.P, lc.w, in, out, -1.0, threads);
    };
    const GmresResult lin =
        gmres(apply, rhs, delta, lc.inv_diag, kLinearRestart, kLinearRtol, max_linear);
    if (!lin.converged)
      throw LinearSolveFailed("newton_solve: gmres stopped at relative residual " +
                              num(lin.rel_residual) + " after " +
                              std::to_string(lin.iters) + " applications (eps=" +
                              num(eps) + ", t=" + num(t) + ")");

    // Backtracking line search: accept the first step that keeps omega_phi
    // safely positive and strictly reduces the residual sup-norm.
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= config.min_step) {
      PotentialField trial(g);
      for (std::size_t p = 0; p < M; ++p) trial[p] = phi[p] + lambda * delta[p];
      Eval te = evaluate(trial, eps, omega, chi_t, kEigFloor, threads);
      if (te.ok && te.sup < cur.sup) {
        phi = std::move(trial);
        cur = std::move(te);
        accepted = true;
        break;
      }
      lambda *= config.backtrack;
    }
    if (!accepted)
      throw NewtonStalled("newton_solve: line search found no admissible step below " +
                          num(cur.sup) + " (eps=" + num(eps) + ", t=" + num(t) + ")");
    ++iters;
  }

  return make_state(phi, eps, t, iters, cur, omega, chi, chi_t);
}

PathRun march_path(const HermitianField& omega, const HermitianField& chi,
                   const PathConfig& config) {
  require_same_grid(omega.grid, chi.grid, "march_path");
  if (!(config.eps0 > 0.0) || !(config.eps_floor > 0.0) || config.eps_floor > config.eps0)
    throw ConfigInvalid("march_path: need 0 < eps_floor <= eps0");
  if (!(config.t_step > 0.0) || config.t_step > 1.0)
    throw ConfigInvalid("march_path: need 0 < t_step <= 1");
  const double omega_eig = min_metric_eig(omega);
  if (!(omega_eig > 0.0))
    throw NonPositiveMetric("march_path: omega has min eigenvalue " + num(omega_eig));
  const double chi_eig = min_metric_eig(chi);
  if (!(chi_eig > 0.0))
    throw NonPositiveMetric("march_path: target chi has min eigenvalue " + num(chi_eig) +
                            "; the path needs a Kahler target");

  const Grid& g = omega.grid;
  const int n = g.n();
  PathRun run(g);

  // Advisory pre-checks; neither is required for the continuation itself.
  const double vol = integrate_wedge({{&omega, n}});
  const double mix = integrate_wedge({{&omega, n - 1}, {&chi, 1}});
  if (std::abs(vol - 1.0) > 1e-8 || std::abs(mix - 1.0) > 1e-8)
    run.warnings.push_back("pair not normalized: int omega^n = " + num(vol) +
                           ", int omega^{n-1} ^ chi = " + num(mix) +
                           "; the path equation assumes both equal 1");
  try {
    const SlackReport slack = subsolution_slack(omega, chi);
    if (!(slack.delta_max > 0.0))
      run.warnings.push_back("omega is not a strict subsolution for chi: delta_max = " +
                             num(slack.delta_max));
  } catch (const Error& e) {
    run.warnings.push_back(std::string("subsolution pre-check failed: ") + e.what());
  }

  int step_counter = 0;
  auto push_record = [&](const PathState& st) {
    StepRecord r;
    r.step = step_counter++;
    r.eps = st.eps;
    r.t = st.t;
    r.newton_iters = st.newton_iters;
    r.residual_sup = st.residual_sup;
    r.phi_sup = sup_norm(st.phi);
    r.phi_l2 = st.phi_l2;
    r.eps_phi_sup = st.eps_phi_sup;
    r.tr_chi_omega_sup = st.tr_chi_omega_sup;
    r.osc_phi = st.osc_phi;
    run.trace.push_back(r);
  };

  // Phase 1: raise t from 0 to 1 at fixed eps0, warm-starting each solve and
  // halving the step on failure. phi = 0 solves the t = 0 equation exactly.
  PotentialField phi(g);
  PathState state = newton_solve(phi, config.eps0, 0.0, omega, chi, config);
  phi = state.phi;
  push_record(state);

  double t = 0.0;
  double dt = config.t_step;
  while (t < 1.0) {
    const double t_next = std::min(t + dt, 1.0);
    bool advanced = false;
    try {
      PathState next = newton_solve(phi, config.eps0, t_next, omega, chi, config);
      phi = next.phi;
      state = std::move(next);
      t = t_next;
      advanced = true;
    } catch (const NewtonStalled&) {
    } catch (const LinearSolveFailed&) {
    } catch (const MaxIters&) {
    }
    if (advanced) {
      push_record(state);
    } else {
      dt *= 0.5;
      if (dt < 1e-4)
        throw ContinuationFailed("march_path: t-step underflow below 1e-4 at t = " +
                                 num(t) + " (eps0 = " + num(config.eps0) + ")");
    }
  }

  // Phase 2: halve eps at t = 1, clamped so the last level is exactly
  // eps_floor. Failures here are structural, so they propagate.
  run.eps_levels.emplace_back(config.eps0, phi);
  double eps = config.eps0;
  while (eps > config.eps_floor) {
    eps = std::max(0.5 * eps, config.eps_floor);
    PathState next = newton_solve(phi, eps, 1.0, omega, chi, config);
    phi = next.phi;
    state = std::move(next);
    push_record(state);
    run.eps_levels.emplace_back(eps, phi);
  }

  // Monitor: the small-potential regime of the a priori estimates asks for
  // eps * ||phi||_inf to stay below delta0 along the whole run.
  for (const StepRecord& r : run.trace) {
    if (r.eps_phi_sup > config.delta0_monitor) {
      run.eps_phi_monitor_ok = false;
      run.warnings.push_back("eps*||phi||_inf reached " + num(r.eps_phi_sup) +
                             " at step " + std::to_string(r.step) + ", above the monitor " +
                             num(config.delta0_monitor));
      break;
    }
  }

  // Envelope fit sup tr_chi(omega_phi) <= C e^{A osc(phi)}: A from least
  // squares of log(sup trace) against oscillation, C as the tight envelope.
  {
    const double m = static_cast<double>(run.trace.size());
    double mean_osc = 0.0, mean_log = 0.0;
    for (const StepRecord& r : run.trace) {
      mean_osc += r.osc_phi;
      mean_log += std::log(r.tr_chi_omega_sup);
    }
    mean_osc /= m;
    mean_log /= m;
    double sxx = 0.0, sxy = 0.0;
    for (const StepRecord& r : run.trace) {
      const double dx = r.osc_phi - mean_osc;
      sxx += dx * dx;
      sxy += dx * (std::log(r.tr_chi_omega_sup) - mean_log);
    }
    run.fit_A = sxx > 1e-24 ? sxy / sxx : 0.0;
    double c_env = 0.0;
    for (const StepRecord& r : run.trace)
      c_env = std::max(c_env, r.tr_chi_omega_sup * std::exp(-run.fit_A * r.osc_phi));
    run.fit_C = c_env;
    run.trace_bound_ok = true;
    for (const StepRecord& r : run.trace) {
      if (r.tr_chi_omega_sup > run.fit_C * std::exp(run.fit_A * r.osc_phi) * (1.0 + 1e-12)) {
        run.trace_bound_ok = false;
        break;
      }
    }
  }

  // Richardson extrapolation in eps over the last three levels. With
  // contraction ratio r = d12/d23 the limit estimate is
  // phi3 + (phi3 - phi2)/(r - 1); it is only trusted when r is cleanly > 1.
  const std::size_t L = run.eps_levels.size();
  PotentialField extrap = phi;
  if (L >= 3) {
    const PotentialField& p1 = run.eps_levels[L - 3].second;
    const PotentialField& p2 = run.eps_levels[L - 2].second;
    const PotentialField& p3 = run.eps_levels[L - 1].second;
    double d12 = 0.0, d23 = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
      d12 = std::max(d12, std::abs(p1[i] - p2[i]));
      d23 = std::max(d23, std::abs(p2[i] - p3[i]));
    }
    if (d23 < 1e-13) {
      // Successive levels agree to rounding; the last level is the limit.
      extrap = p3;
      run.extrapolation_valid = true;
      run.extrapolation_order = 0.0;
    } else {
      const double ratio = d12 / d23;
      if (ratio > 1.2) {
        for (std::size_t i = 0; i < extrap.size(); ++i)
          extrap[i] = p3[i] + (p3[i] - p2[i]) / (ratio - 1.0);
        run.extrapolation_valid = true;
        run.extrapolation_order = std::log2(ratio);
      } else {
        extrap = p3;
        run.warnings.push_back("eps-extrapolation rejected: level contraction ratio " +
                               num(ratio) + " is not cleanly above 1");
      }
    }
  } else {
    run.warnings.push_back("fewer than three eps levels; no extrapolation attempted");
  }
  const double mean = grid_mean(extrap);
  for (std::size_t i = 0; i < extrap.size(); ++i) extrap[i] -= mean;
  run.extrapolated = std::move(extrap);
  run.final_state = std::move(state);
  return run;
}

}  // namespace jeq
