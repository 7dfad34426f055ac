#pragma once

#include "jeq/fields.hpp"

namespace jeq {

/// The only constant c for which tr_{omega_psi} chi_D = c is solvable on a
/// curve: c = (int chi_D) / (int omega_D). Fields must be 1x1 positive area
/// forms on the flat-torus model of D.
double curve_j_constant(const HermitianField& omega_D, const HermitianField& chi_D);

/// Solve the curve J-equation tr_{omega_psi} chi_D = c, which on a Riemann
/// surface is the linear Poisson problem dd^c psi = chi_D / c - omega_D.
/// Conjugate gradients on the complement of the wide-stencil kernel (the
/// constant and the three Nyquist checkerboards); returned psi has grid mean
/// zero. Throws SolvabilityViolated if c differs from curve_j_constant by
/// more than 1e-8.
PotentialField solve_poisson_on_D(const HermitianField& omega_D,
                                  const HermitianField& chi_D, double c);

}  // namespace jeq
