#pragma once

#include <cstddef>

#include "jeq/fields.hpp"

namespace jeq {

/// Result of the pointwise subsolution test. At each point, with mu the
/// eigenvalues of chi relative to omega, s* = max_i sum_{k != i} mu_k; the
/// certificate constant is delta_max = n / sup_grid(s*) - 1. omega is a
/// strict subsolution for every delta < delta_max iff delta_max > 0.
struct SlackReport {
  double delta_max = 0.0;
  std::size_t worst_point = 0;  // flat index attaining sup s*
  double s_star_sup = 0.0;
};

/// Global subsolution slack of the pair (omega, chi). For n = 1 the defining
/// inequality is vacuous (the right-hand side is a sum over an empty index
/// set), so delta_max = +infinity.
SlackReport subsolution_slack(const HermitianField& omega, const HermitianField& chi);

/// Subsolution test along the path target chi_t = t chi + (1-t) omega:
/// true iff subsolution_slack(omega, chi_t).delta_max >= delta.
bool path_subsolution_check(const HermitianField& omega, const HermitianField& chi,
                            double t, double delta);

/// sup over the grid of |omega^n/(omega^{n-1} ^ chi) - C| rho^eta, where C is
/// the ratio of the discrete integrals int omega^n / int omega^{n-1} ^ chi
/// (equal to 1 after normalization). A finite value certifies the
/// O(rho^{-eta}) decay of the J-ratio at the grid's resolution.
double asymptotic_deviation(const HermitianField& omega, const HermitianField& chi,
                            const PotentialField& rho, double eta);

}  // namespace jeq
