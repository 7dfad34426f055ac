#pragma once

#include <boost/rational.hpp>
#include <cstddef>
#include <optional>
#include <vector>

#include "jeq/errors.hpp"

namespace jeq {

/// Exact arithmetic for intersection numbers; every class-level check here is
/// sign-critical, so nothing is done in floating point.
using Rational = boost::rational<long long>;

/// A tracked sublattice of H^{1,1} on a Kähler surface: the intersection
/// form restricted to the sublattice and the coordinates of the classes the
/// pipeline works with. Coordinates are over the tracked basis.
struct SurfaceClassData {
  std::size_t rank = 0;
  std::vector<Rational> Q;        ///< row-major rank x rank symmetric pairing
  std::vector<Rational> omega;    ///< Kähler class coordinates
  std::vector<Rational> chi;      ///< target class coordinates
  std::vector<Rational> divisor;  ///< divisor class [D]; may be empty when unused
  std::optional<std::vector<Rational>> canonical;  ///< K_X when tracked
  /// User assertion that the surface carries no curves of negative
  /// self-intersection. It gates the positivity verdict but is never
  /// computed: curve enumeration is not decidable from the pairing alone.
  bool no_negative_curves = false;

  /// Shape checks plus the structural invariants: Q symmetric over the rank,
  /// [omega], [chi] (and [D], K_X when present) of matching size, and
  /// [omega].[omega] > 0. Throws ConfigInvalid naming the violation.
  void validate() const;

  /// Intersection pairing Q(u, v); operands must have size rank.
  Rational pair(const std::vector<Rational>& u, const std::vector<Rational>& v) const;
};

/// Constant of the continuity problem on a surface: the volume ratio
/// C = [omega]^2 / ([omega].[chi]). Throws DegeneratePairing when the mixed
/// pairing vanishes.
Rational j_constant(const SurfaceClassData& data);

/// Outcome of the positivity route: Kahler when the checked inequalities
/// and the user's curve assertion together certify a Kähler class,
/// Inconclusive otherwise (the computed numbers still tell the story).
enum class Verdict { Kahler, Inconclusive };

/// Numbers behind the solvability check for alpha = 2[omega] - C[chi].
struct DonaldsonReport {
  Rational C;                         ///< j_constant of the pair
  std::vector<Rational> alpha;        ///< 2[omega] - C[chi]
  Rational alpha_sq;                  ///< Q(alpha, alpha)
  Rational alpha_omega;               ///< Q(alpha, [omega])
  bool assumed_no_negative_curves = false;  ///< echo of the user assertion
  Verdict verdict = Verdict::Inconclusive;
};

/// Computes alpha = 2[omega] - C[chi] and its positivity numbers. Verdict is
/// Kahler exactly when alpha^2 > 0, alpha.[omega] > 0, and the
/// no-negative-curves assertion is present; the report always carries the
/// numbers and echoes what was assumed rather than verified.
DonaldsonReport donaldson_check(const SurfaceClassData& data);

/// Restricted-degree ratio along the divisor and the subsolution shape test.
struct RestrictedConstant {
  Rational value;             ///< C_D = ([chi].[D]) / ([omega].[D])
  bool shape_checked = false; ///< whether the n - C_D > 0 test was requested
  bool shape_ok = false;      ///< n - C_D > 0 (n = 2); meaningful when checked
};

/// C_D = ([chi].[D]) / ([omega].[D]). With strict_subsolution set, also
/// reports whether n - C_D > 0 (n = 2), the shape a strict subsolution
/// forces near the divisor. Throws DegenerateRestriction unless
/// [omega].[D] > 0, ConfigInvalid when no divisor class is tracked.
RestrictedConstant restricted_constant_CD(const SurfaceClassData& data,
                                          bool strict_subsolution = false);

/// Slope coefficient b = a / (2/C - 1/C_D), the choice making the cusp
/// background consistent with the class constants; positive exactly when
/// 2 C_D > C. Throws ConditionViolated when 2 C_D <= C, ConfigInvalid for
/// nonpositive a, C, or C_D.
Rational coefficient_b(const Rational& a, const Rational& C, const Rational& C_D);

}  // namespace jeq
