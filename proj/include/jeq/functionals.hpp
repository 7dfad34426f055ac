#pragma once

#include <span>

#include "jeq/fields.hpp"

namespace jeq {

/// Aubin-Mabuchi-type energy: the discrete int phi sum_{j=0}^{n}
/// omega_phi^{n-j} ^ omega^j. For phi = const k on a volume-normalized omega
/// this is (n+1) k.
double energy_E(const PotentialField& phi, const HermitianField& omega);

/// Twisted energy int phi sum_{j=0}^{n-1} omega_phi^{n-1-j} ^ omega^j ^ T.
/// T is expected to be a closed (1,1) matrix field (dd^c-generated plus a
/// constant); closedness of a general T is the caller's responsibility and
/// is flagged at the scenario layer.
double energy_ET(const PotentialField& phi, const HermitianField& omega,
                 const HermitianField& T);

/// Relative entropy of two normalized discrete weight vectors:
/// sum_i p_i log(p_i / q_i). Throws NonPositiveDensity if any entry <= 0,
/// NotNormalized if either mass differs from 1 by more than 1e-8.
double entropy_weights(std::span<const double> p, std::span<const double> q);

/// Relative entropy int log(d mu / d mu0) d mu of two top-form densities on
/// the same grid (both must integrate to 1).
double entropy(const PotentialField& mu_num, const PotentialField& mu_den);

/// The K-energy decomposition M = (Rbar/(n+1)) E - E^{Ric} + H, with Rbar the
/// plain grid mean of tr_omega Ric(omega) and H the relative entropy of the
/// normalized volume forms omega_phi^n and omega^n.
struct EnergyReport {
  double E = 0.0;      // energy_E(phi, omega)
  double E_T = 0.0;    // energy_ET with T = Ric(omega)
  double H = 0.0;      // entropy of normalized omega_phi^n against omega^n
  double M = 0.0;      // assembled K-energy
  double R_bar = 0.0;  // mean scalar curvature of omega
};
EnergyReport k_energy(const PotentialField& phi, const HermitianField& omega);

}  // namespace jeq
