#include "jeq/subsolution.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jeq/errors.hpp"
#include "jeq/geom.hpp"
#include "jeq/smallmat.hpp"

namespace jeq {

SlackReport subsolution_slack(const HermitianField& omega, const HermitianField& chi) {
  if (!omega.grid.same(chi.grid))
    throw std::invalid_argument("subsolution_slack: grid mismatch");
  const int n = omega.n;
  SlackReport rep;
  if (n == 1) {
    rep.delta_max = std::numeric_limits<double>::infinity();
    rep.s_star_sup = 0.0;
    return rep;
  }
  const std::size_t M = omega.grid.size();
  double sup = -std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t p = 0; p < M; ++p) {
    Mat om = omega.matrix(p);
    if (!positive_definite(chi.matrix(p)))
      throw NonPositiveMetric("subsolution_slack: chi not positive at point " +
                              std::to_string(p));
    VecR mu = generalized_eigs(chi.matrix(p), om);
    // Ascending order: dropping the smallest eigenvalue maximizes the sum.
    double total = 0.0;
    for (int k = 0; k < n; ++k) total += mu(k);
    double s_star = total - mu(0);
    if (s_star > sup) {
      sup = s_star;
      worst = p;
    }
  }
  rep.s_star_sup = sup;
  rep.worst_point = worst;
  rep.delta_max = static_cast<double>(n) / sup - 1.0;
  return rep;
}

bool path_subsolution_check(const HermitianField& omega, const HermitianField& chi,
                            double t, double delta) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("path_subsolution_check: t must be in [0, 1]");
  HermitianField chi_t(omega.grid);
  for (std::size_t i = 0; i < chi_t.m.size(); ++i)
    chi_t.m[i] = t * chi.m[i] + (1.0 - t) * omega.m[i];
  return subsolution_slack(omega, chi_t).delta_max >= delta;
}

double asymptotic_deviation(const HermitianField& omega, const HermitianField& chi,
                            const PotentialField& rho, double eta) {
  if (!omega.grid.same(chi.grid) || !omega.grid.same(rho.grid))
    throw std::invalid_argument("asymptotic_deviation: grid mismatch");
  const int n = omega.n;
  const std::size_t M = omega.grid.size();
  for (std::size_t p = 0; p < M; ++p)
    if (!(rho[p] > 0.0))
      throw NonPositiveWeight("asymptotic_deviation: rho <= 0 at point " +
                              std::to_string(p));

  PotentialField top = wedge_density({{&omega, n}});
  PotentialField mixed = wedge_density({{&omega, n - 1}, {&chi, 1}});
  for (std::size_t p = 0; p < M; ++p) {
    if (!positive_definite(omega.matrix(p)))
      throw NonPositiveMetric("asymptotic_deviation: omega not positive at point " +
                              std::to_string(p));
  }
  const double c = integrate_density(top) / integrate_density(mixed);
  double sup = 0.0;
  for (std::size_t p = 0; p < M; ++p) {
    double dev = std::abs(top[p] / mixed[p] - c) * std::pow(rho[p], eta);
    sup = std::max(sup, dev);
  }
  return sup;
}

}  // namespace jeq
