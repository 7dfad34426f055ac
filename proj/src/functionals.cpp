#include "jeq/functionals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "jeq/errors.hpp"
#include "jeq/geom.hpp"

namespace jeq {

namespace {

void require_positive(const HermitianField& f, const char* what) {
  for (std::size_t p = 0; p < f.grid.size(); ++p)
    if (!positive_definite(f.matrix(p)))
      throw NonPositiveMetric(std::string(what) + " not positive at point " +
                              std::to_string(p));
}

double integrate_scalar_against(const PotentialField& phi, const PotentialField& density) {
  double sum = 0.0;
  for (std::size_t p = 0; p < phi.size(); ++p) sum += phi[p] * density[p];
  return sum * phi.grid.top_cell();
}

}  // namespace

double energy_E(const PotentialField& phi, const HermitianField& omega) {
  require_positive(omega, "energy_E: omega");
  HermitianField g_phi = with_potential(omega, phi);
  require_positive(g_phi, "energy_E: omega_phi");
  const int n = omega.n;
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    PotentialField density = wedge_density({{&g_phi, n - j}, {&omega, j}});
    total += integrate_scalar_against(phi, density);
  }
  return total;
}

double energy_ET(const PotentialField& phi, const HermitianField& omega,
                 const HermitianField& T) {
  require_positive(omega, "energy_ET: omega");
  HermitianField g_phi = with_potential(omega, phi);
  require_positive(g_phi, "energy_ET: omega_phi");
  const int n = omega.n;
  double total = 0.0;
  for (int j = 0; j <= n - 1; ++j) {
    PotentialField density = wedge_density({{&g_phi, n - 1 - j}, {&omega, j}, {&T, 1}});
    total += integrate_scalar_against(phi, density);
  }
  return total;
}

double entropy_weights(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("entropy_weights: size mismatch");
  double mass_p = 0.0, mass_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !(q[i] > 0.0))
      throw NonPositiveDensity("entropy_weights: non-positive weight at index " +
                               std::to_string(i));
    mass_p += p[i];
    mass_q += q[i];
  }
  if (std::abs(mass_p - 1.0) > 1e-8 || std::abs(mass_q - 1.0) > 1e-8)
    throw NotNormalized("entropy_weights: masses " + std::to_string(mass_p) + ", " +
                        std::to_string(mass_q) + " differ from 1");
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) h += p[i] * std::log(p[i] / q[i]);
  return h;
}

double entropy(const PotentialField& mu_num, const PotentialField& mu_den) {
  if (!mu_num.grid.same(mu_den.grid))
    throw std::invalid_argument("entropy: grid mismatch");
  const double cell = mu_num.grid.top_cell();
  std::vector<double> p(mu_num.size()), q(mu_den.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = mu_num[i] * cell;
    q[i] = mu_den[i] * cell;
  }
  return entropy_weights(p, q);
}

EnergyReport k_energy(const PotentialField& phi, const HermitianField& omega) {
  require_positive(omega, "k_energy: omega");
  HermitianField g_phi = with_potential(omega, phi);
  require_positive(g_phi, "k_energy: omega_phi");
  const int n = omega.n;

  EnergyReport rep;
  rep.E = energy_E(phi, omega);

  HermitianField ric = ricci(omega);
  rep.E_T = energy_ET(phi, omega, ric);
  rep.R_bar = grid_mean(trace_ratio(omega, ric));

  // Relative entropy of the two volume forms, each normalized to mass 1; on
  // the torus the masses already agree (top-form exactness), so this is the
  // honest H_{omega^n}(omega_phi^n).
  PotentialField vol_phi = wedge_density({{&g_phi, n}});
  PotentialField vol = wedge_density({{&omega, n}});
  double mass_phi = integrate_density(vol_phi), mass = integrate_density(vol);
  for (auto& v : vol_phi.v) v /= mass_phi;
  for (auto& v : vol.v) v /= mass;
  rep.H = entropy(vol_phi, vol);

  rep.M = rep.R_bar / (n + 1) * rep.E - rep.E_T + rep.H;
  return rep;
}

}  // namespace jeq
