#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "jeq/grid.hpp"

namespace jeq {

/// Cross-section model for the cylinder end near a divisor. Point collapses
/// the divisor directions to algebra: the fiber trace s = tr_{omega_D} chi_D
/// enters as a number and the ambient dimension n stays free. FlatTorus keeps
/// a flat two-torus cross-section (complex dimension one, so n = 2) with
/// constant Hermitian coefficients and an optional periodic potential added
/// to the target form.
enum class CrossSection { Point, FlatTorus };

/// Tail handling for greens_solve beyond the outer truncation T: Zero
/// integrates nothing past T (compactly supported or negligible tails);
/// ExponentialFit extends the source as g0(T) e^{-eta (t - T)} with eta
/// fitted from the last samples.
enum class TailMode { Zero, ExponentialFit };

/// Geometry of the model cylinder [A, T] x D near a divisor: the background
/// metric carries fiber weight 2 a e^{-t} dt ^ eta, the target form weight
/// 2 b e^{-t} dt ^ eta, and the cross-section D is a Point or a flat
/// two-torus. The model operator's t-coefficient defaults to kappa = b/a^2.
/// Samples on the cylinder are t-major: index it * fiber_points() + ix.
struct CuspGeometry {
  double A = 1.0;         ///< inner cut of the cylinder, at least 1
  double T = 11.0;        ///< outer truncation, greater than A
  std::size_t M_t = 201;  ///< t-grid nodes on [A, T], at least 8
  double a = 1.0;         ///< metric fiber coefficient, positive
  double b = 1.0;         ///< target fiber coefficient, positive
  int n = 2;              ///< ambient complex dimension, at least 2
  CrossSection section = CrossSection::Point;
  double s = 1.0;         ///< Point only: fiber trace tr_{omega_D} chi_D
  std::optional<Grid> fiber;     ///< FlatTorus: fiber grid, complex dimension 1
  double omega_d = 1.0;          ///< FlatTorus: constant fiber metric coefficient
  double chi_d = 1.0;            ///< FlatTorus: constant fiber target coefficient
  std::vector<double> chi_pert;  ///< FlatTorus: optional fiber potential added
                                 ///< to the target as dd^c (empty = none)

  double h() const { return (T - A) / static_cast<double>(M_t - 1); }
  double t_node(std::size_t i) const { return A + h() * static_cast<double>(i); }
  double kappa() const { return b / (a * a); }
  bool torus() const { return section == CrossSection::FlatTorus; }
  /// Fiber samples per t-slice: 1 for Point, fiber grid size for FlatTorus.
  std::size_t fiber_points() const;
  /// Total cylinder samples M_t * fiber_points().
  std::size_t points() const;
  /// Fiber trace tr_{omega_D} chi_D of the cross-section. The dd^c of a
  /// periodic potential is mean-free, so the perturbation never moves it.
  double fiber_trace() const;
  /// Pointwise fiber target coefficient chi_d + (dd^c chi_pert)_{1 1bar},
  /// size fiber_points(). Throws NonPositiveMetric when positivity fails.
  std::vector<double> fiber_target() const;
  /// Throws ConfigInvalid (ranges, counts, section mismatches) or
  /// NonPositiveMetric (fiber coefficients) on unusable fields.
  void validate() const;
};

/// Background fiber coefficient a = 2 b / (n - c_d) matching the product
/// construction, so the background solves the fiber equation up to terms
/// that die off down the cylinder. Throws DegenerateClass when c_d >= n.
double background_fiber_coefficient(double b, double c_d, int n);

/// Reduced residual of the fiber equation for an S^1-invariant t-profile:
///   R(t) = b + c(t) s - n c(t),   c(t) = a - (phi0'' - phi0') / 2,
/// with second-order t-stencils, one-sided at both ends. R vanishes exactly
/// when c = b / (n - s). Throws MetricDegenerate when c <= 0 somewhere.
std::vector<double> reduced_residual(const std::vector<double>& phi0,
                                     const CuspGeometry& geom);

/// Reduced residual over the full cylinder grid of a FlatTorus section
/// (t-major samples, ambient dimension two):
///   R = (b w + c chi - 2 c w - |d_D phi_t|_z^2) / omega_d,
/// where w = omega_d + (dd^c_D phi)_{1 1bar} is the evolving fiber metric,
/// chi the pointwise fiber target, c the t-coefficient from
/// reduced_residual, and |f|_z^2 = (f_x^2 + f_y^2)/4. Collapses to
/// reduced_residual slice-by-slice on t-only samples. Throws
/// MetricDegenerate when c or w loses positivity.
std::vector<double> reduced_residual_field(const std::vector<double>& phi,
                                           const CuspGeometry& geom);

/// Model linearized operator on the cylinder:
///   L u = <chi_D, dd^c_D u>_{omega_D} - kappa (d_t^2 - d_t) u,
/// with second-order t-stencils (one-sided at the ends) and the wide-stencil
/// dd^c on the fiber. Accepts a t-profile (the fiber term drops) or, for
/// FlatTorus sections, a full t-major field. kappa = 0 picks the geometry
/// default b / a^2.
std::vector<double> model_operator_apply(const std::vector<double>& u,
                                         const CuspGeometry& geom,
                                         double kappa = 0.0);

/// Green's solve on t-profiles: returns v with model_operator_apply(v) = g0
/// on the interior nodes to O(h^2) and v(A) = 0 exactly, built as the
/// composite-trapezoid double integral
///   v(t) = int_A^t e^s [ int_s^infinity e^{-u} g0(u) / kappa du ] ds.
/// The source tail beyond T follows TailMode; ExponentialFit throws
/// TailFitFailed when the tail samples do not decay. kappa = 0 picks b/a^2.
std::vector<double> greens_solve(const std::vector<double>& g0,
                                 const CuspGeometry& geom, double kappa = 0.0,
                                 TailMode tail = TailMode::Zero);

/// Direct discrete solve of model_operator_apply(u) = g with u pinned to
/// `boundary` on the A-slice and zero t-derivative at T: tridiagonal
/// elimination on t-profiles, restarted GMRES with a sparse-LU cylinder
/// preconditioner on FlatTorus fields (LinearSolveFailed on a stall).
std::vector<double> model_solve(const std::vector<double>& g,
                                const CuspGeometry& geom, double kappa = 0.0,
                                double boundary = 0.0);

/// Splitting of cylinder samples into the per-slice fiber mean (a t-profile)
/// and the mean-free remainder: u = mean + perp exactly, every slice of perp
/// has zero fiber mean, and decomposing the mean again returns (mean, 0).
struct FiberSplit {
  std::vector<double> mean;  ///< fiber mean per t-node, size M_t
  std::vector<double> perp;  ///< u - mean, same layout as u
};
FiberSplit fiber_decompose(const std::vector<double>& u, const CuspGeometry& geom);

/// Tail classification: Decaying when an exponential rate was identified,
/// Flat when the samples are constant to rounding (the fit degenerates and
/// eta is reported as +infinity with c1 = 0), Unresolved when no decaying
/// exponential explains the samples (growth, or a rate below the
/// identifiability floor).
enum class TailShape { Flat, Decaying, Unresolved };

/// Least-squares fit y ~ c0 + c1 e^{-eta t}.
struct ExponentialFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double eta = 0.0;  ///< +infinity when Flat, 0 when Unresolved
  double rms = 0.0;  ///< root-mean-square misfit over the samples
  TailShape shape = TailShape::Unresolved;
  std::size_t samples = 0;
};

/// Fits c0 + c1 e^{-eta t} to the samples: flat data short-circuits to the
/// Flat sentinel with the exact constant; otherwise a three-point ratio
/// seeds damped Gauss-Newton with the linear pair (c0, c1) eliminated
/// exactly at every step. Throws WindowTooShort below 8 samples.
ExponentialFit fit_exponential(const std::vector<double>& t,
                               const std::vector<double>& y);

/// Tail diagnostics of a solved profile: the exponential fit of the
/// fiber-mean tail plus the limit-trace comparison against the background.
struct AsymptoticFit {
  ExponentialFit tail;     ///< fit of the fiber-mean profile on the tail window
  double c_limit = 0.0;    ///< settled fiber coefficient (tail mean of c)
  double s_inf = 0.0;      ///< limit fiber trace measured from the solution
  double s_target = 0.0;   ///< n - b/a predicted by the background
  double s_gap = 0.0;      ///< |s_inf - s_target|
};

/// Solved cylinder profile with derived diagnostics. phi0, c and residual
/// are t-profiles for Point sections and t-major fields for FlatTorus;
/// residual is the collocation residual of the solve (Dirichlet row zero by
/// construction, zero-derivative ghost closure at T).
struct CuspProfile {
  CuspGeometry geom;
  std::vector<double> phi0;
  std::vector<double> c;
  std::vector<double> residual;
  double residual_sup = 0.0;
  int newton_iters = 0;
  AsymptoticFit fit;
  /// Set when the settled trace differs from the background prediction: the
  /// profile then grows linearly down the cylinder instead of converging to
  /// the product solution.
  bool non_product_limit = false;
};

struct CuspSolveConfig {
  int max_newton_iters = 30;
  double tol = 1e-11;              ///< sup-norm target for the collocation residual
  double min_step = 1.0 / 1024.0;  ///< line-search floor before giving up
  int gmres_restart = 120;
  double gmres_rtol = 1e-10;
};

/// Collocation/Newton solve of the reduced fiber equation on [A, T] with
/// phi0 = boundary on the A-slice and zero t-derivative at T. Point
/// sections assemble the tridiagonal Jacobian directly; FlatTorus sections
/// run matrix-free Newton with preconditioned GMRES. The returned profile
/// carries the asymptotic fit and the product-limit diagnostic. Throws
/// MetricDegenerate (fiber coefficient or fiber metric loses positivity),
/// NewtonStalled (no acceptable step), MaxIters (iteration budget),
/// LinearSolveFailed (inner GMRES).
CuspProfile solve_cusp_bvp(const CuspGeometry& geom, double boundary,
                           const CuspSolveConfig& config = {});

/// Same solve with a fiber-varying Dirichlet slice at A: `boundary` holds one
/// sample per fiber node (a single entry broadcasts). The initial state
/// replicates the slice down the cylinder, so a slice that already satisfies
/// the settled fiber equation converges immediately.
CuspProfile solve_cusp_bvp(const CuspGeometry& geom,
                           const std::vector<double>& boundary,
                           const CuspSolveConfig& config = {});

/// Recomputes the tail diagnostics of a profile: exponential fit of the
/// fiber-mean samples with t >= (A + T)/2 (WindowTooShort below 8 samples),
/// the settled fiber coefficient, and the limit trace. The limit trace comes
/// from the settled fiber coefficient through the limit equation for Point
/// sections, and from the pointwise trace of the target against the settled
/// T-slice fiber metric for FlatTorus sections.
AsymptoticFit fit_asymptotics(const CuspProfile& profile);

/// Sup-differences of the (fiber-mean) profile against its window centers
/// over consecutive windows [A + s_j, A + s_{j+1}]; the default starts are
/// the squares 0, 1, 4, 9, ... while they fit below T. A profile settled to
/// a constant yields zeros, decay yields a non-strictly decreasing sequence
/// (the `decaying` flag), growth keeps the differences from shrinking.
/// Throws WindowTooShort when fewer than 3 windows fit.
struct TranslationReport {
  std::vector<double> starts;     ///< window start offsets from A
  std::vector<double> sup_diffs;  ///< oscillation against each window center
  bool decaying = false;
};
TranslationReport translation_differences(const CuspProfile& profile,
                                          std::vector<double> starts = {});

}  // namespace jeq
