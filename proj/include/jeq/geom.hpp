#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "jeq/fields.hpp"
#include "jeq/grid.hpp"
#include "jeq/smallmat.hpp"

namespace jeq {

/// omega + dd^c(phi) as a metric candidate (positivity is not enforced here;
/// solvers guard it explicitly).
HermitianField with_potential(const HermitianField& omega, const PotentialField& phi,
                              int threads = 1);

/// Pointwise trace of chi with respect to a positive metric g:
/// (tr_g chi)(p) = g^{i jbar} chi_{i jbar}. Throws NonPositiveMetric if g
/// fails the positivity test anywhere.
PotentialField trace_ratio(const HermitianField& g, const HermitianField& chi);

/// Ascending eigenvalues mu_1 <= ... <= mu_n of chi relative to omega at
/// every grid point (roots of det(chi - mu omega) = 0).
struct EigenvalueField {
  Grid grid;
  int n;
  std::vector<double> mu;

  EigenvalueField(const Grid& g)
      : grid(g), n(g.n()), mu(g.size() * static_cast<std::size_t>(g.n()), 0.0) {}
  double at(std::size_t p, int k) const {
    return mu[p * static_cast<std::size_t>(n) + k];
  }
  double& at(std::size_t p, int k) {
    return mu[p * static_cast<std::size_t>(n) + k];
  }
};
EigenvalueField generalized_eigenvalues(const HermitianField& chi,
                                        const HermitianField& omega);

/// Ricci form -dd^c log det(g) of a positive metric field, computed with the
/// same stencil as ddc on the scalar log-determinant.
HermitianField ricci(const HermitianField& g, int threads = 1);

/// Pointwise density of the top wedge of the listed (field, power) factors
/// against the frame prod_i (i dz_i ^ dzbar_i); powers must sum to n.
PotentialField wedge_density(std::initializer_list<std::pair<const HermitianField*, int>> factors);

/// Integral of a top form from its wedge density: sum over points times the
/// canonical cell volume 2^n prod_a h_a.
double integrate_density(const PotentialField& density);

/// integrate_density(wedge_density(factors)).
double integrate_wedge(std::initializer_list<std::pair<const HermitianField*, int>> factors);

/// Smallest Hermitian eigenvalue of g over the whole grid.
double min_metric_eig(const HermitianField& g);

/// Snapshot of the quantities the a priori estimates monitor.
struct TraceDiagnostics {
  double trace_min = 0.0;     // min over grid of tr_{g} chi
  double trace_max = 0.0;     // max over grid of tr_{g} chi
  double metric_eig_min = 0.0;  // min eigenvalue of g over the grid
  double metric_eig_max = 0.0;  // max eigenvalue of g over the grid
  double residual_sup = 0.0;  // sup-norm of the supplied residual field
};
TraceDiagnostics trace_diagnostics(const HermitianField& g, const HermitianField& chi,
                                   const PotentialField& residual);

/// Gradient energy int |d phi|^2_omega omega^n with |d phi|^2_omega
/// = g^{i jbar} (partial_i phi)(conj partial_j phi), partial_i = (D_x - i D_y)/2
/// by central differences.
double gradient_energy(const PotentialField& phi, const HermitianField& omega);

/// L2 norm sqrt(int phi^2 omega^n).
double l2_norm(const PotentialField& phi, const HermitianField& omega);

}  // namespace jeq
