#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jeq/fields.hpp"
#include "jeq/geom.hpp"

namespace jeq {

/// Continuation parameters for the two-parameter family
///   omega_phi^n = e^{eps phi} omega_phi^{n-1} ^ (t chi + (1-t) omega),
/// solved in trace form tr_{omega_phi} chi_t = n e^{-eps phi}.
struct PathConfig {
  double eps0 = 0.5;
  double eps_floor = 1e-4;
  double t_step = 0.1;
  double newton_tol = 1e-11;     // residual sup-norm
  int max_newton_iters = 30;
  double backtrack = 0.5;        // line-search shrink factor
  double min_step = 1e-4;        // smallest accepted line-search step
  double delta0_monitor = 0.1;   // eps*||phi||_inf threshold to monitor
  int threads = 1;
};

/// One converged point on the continuity path with its diagnostics.
struct PathState {
  double eps = 0.0, t = 0.0;
  PotentialField phi;
  double residual_sup = 0.0;
  int newton_iters = 0;
  TraceDiagnostics diag;          // trace/eigenvalue extremes of omega_phi vs chi_t
  double eps_phi_sup = 0.0;       // eps * ||phi||_inf
  double phi_l2 = 0.0;            // sqrt(int phi^2 omega^n), fixed background measure
  double grad_energy = 0.0;       // int |d phi|^2_omega omega^n
  double tr_chi_omega_sup = 0.0;  // sup over grid of tr_chi(omega_phi), fixed target chi
  double osc_phi = 0.0;           // sup phi - inf phi

  explicit PathState(const Grid& g) : phi(g) {}
};

/// Rescaled pair with int omega'^n = int omega'^{n-1} ^ chi' = 1. C is the
/// constant int omega^n / int omega^{n-1} ^ chi of the inputs.
struct NormalizedPair {
  HermitianField omega, chi;
  double C = 0.0;
};
NormalizedPair normalize_pair(const HermitianField& omega, const HermitianField& chi);

/// Path residual R(phi) = tr_{omega_phi}(t chi + (1-t) omega) - n e^{-eps phi}.
PotentialField residual(const PotentialField& phi, double eps, double t,
                        const HermitianField& omega, const HermitianField& chi,
                        int threads = 1);

/// The linearized operator L u = tr(P ddc u) - n eps e^{-eps phi} u with
/// P = G_phi^{-1} chi_t G_phi^{-1}; the derivative of the residual is
/// dR/dphi . u = -L u (checked by finite differences in the tests).
PotentialField linearized_apply(const PotentialField& u, const PotentialField& phi,
                                double eps, double t, const HermitianField& omega,
                                const HermitianField& chi, int threads = 1);

/// Damped Newton solve of R(phi) = 0 at fixed (eps, t). The linear systems
/// are solved matrix-free by restarted GMRES with Jacobi preconditioning to
/// relative tolerance 1e-8; steps are backtracked until the residual
/// sup-norm decreases and min eig(omega_phi) stays >= 1e-8.
PathState newton_solve(const PotentialField& phi_init, double eps, double t,
                       const HermitianField& omega, const HermitianField& chi,
                       const PathConfig& config);

/// One accepted continuation step, in the CSV trace column order.
struct StepRecord {
  int step = 0;
  double eps = 0.0, t = 0.0;
  int newton_iters = 0;
  double residual_sup = 0.0, phi_sup = 0.0, phi_l2 = 0.0, eps_phi_sup = 0.0,
         tr_chi_omega_sup = 0.0, osc_phi = 0.0;
};

/// Full two-phase continuation run: t from 0 to 1 at eps0 (warm starts,
/// t-step halving on failure), then geometric eps-halving at t = 1 clamped to
/// end exactly at eps_floor.
struct PathRun {
  PathState final_state;
  std::vector<StepRecord> trace;
  /// (eps, phi) at each accepted t = 1 level, eps0 first.
  std::vector<std::pair<double, PotentialField>> eps_levels;
  /// Mean-zero Richardson extrapolation of phi over the last three eps
  /// levels; valid only when the observed contraction ratio is clean.
  PotentialField extrapolated;
  bool extrapolation_valid = false;
  double extrapolation_order = 0.0;  // log2 of the observed contraction ratio
  bool eps_phi_monitor_ok = true;    // eps*||phi||_inf <= delta0_monitor throughout
  double fit_C = 0.0, fit_A = 0.0;   // envelope fit sup tr_chi omega_phi <= C e^{A osc}
  bool trace_bound_ok = true;        // the envelope inequality for the reported fit
  std::vector<std::string> warnings;

  explicit PathRun(const Grid& g) : final_state(g), extrapolated(g) {}
};
PathRun march_path(const HermitianField& omega, const HermitianField& chi,
                   const PathConfig& config);

}  // namespace jeq
