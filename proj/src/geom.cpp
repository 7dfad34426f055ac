#include "jeq/geom.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "jeq/ddc.hpp"
#include "jeq/errors.hpp"

namespace jeq {

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!a.same(b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

std::string point_label(std::size_t p) { return " at point " + std::to_string(p); }

}  // namespace

HermitianField with_potential(const HermitianField& omega, const PotentialField& phi,
                              int threads) {
  require_same_grid(omega.grid, phi.grid, "with_potential");
  HermitianField d = ddc(phi, threads);
  for (std::size_t i = 0; i < d.m.size(); ++i) d.m[i] += omega.m[i];
  return d;
}

PotentialField trace_ratio(const HermitianField& g, const HermitianField& chi) {
  require_same_grid(g.grid, chi.grid, "trace_ratio");
  PotentialField out(g.grid);
  const std::size_t M = g.grid.size();
  Mat a(g.n, g.n), x(g.n, g.n);
  for (std::size_t p = 0; p < M; ++p) {
    a = g.matrix(p);
    if (!positive_definite(a))
      throw NonPositiveMetric("trace_ratio: metric not positive" + point_label(p));
    x = chi.matrix(p);
    out[p] = trace_quotient(a, x);
  }
  return out;
}

EigenvalueField generalized_eigenvalues(const HermitianField& chi,
                                        const HermitianField& omega) {
  require_same_grid(chi.grid, omega.grid, "generalized_eigenvalues");
  EigenvalueField out(omega.grid);
  const std::size_t M = omega.grid.size();
  for (std::size_t p = 0; p < M; ++p) {
    VecR mu = generalized_eigs(chi.matrix(p), omega.matrix(p));
    for (int k = 0; k < out.n; ++k) out.at(p, k) = mu(k);
  }
  return out;
}

HermitianField ricci(const HermitianField& g, int threads) {
  PotentialField logdet(g.grid);
  const std::size_t M = g.grid.size();
  for (std::size_t p = 0; p < M; ++p) {
    Mat a = g.matrix(p);
    if (!positive_definite(a))
      throw NonPositiveMetric("ricci: metric not positive" + point_label(p));
    logdet[p] = std::log(det_herm(a));
  }
  HermitianField out = ddc(logdet, threads);
  for (auto& e : out.m) e = -e;
  return out;
}

PotentialField wedge_density(
    std::initializer_list<std::pair<const HermitianField*, int>> factors) {
  const HermitianField* fields[3];
  int pows[3];
  int nf = 0, total = 0;
  for (const auto& [f, k] : factors) {
    if (k <= 0) continue;
    if (nf == 3) throw std::invalid_argument("wedge_density: too many factors");
    fields[nf] = f;
    pows[nf] = k;
    ++nf;
    total += k;
  }
  if (nf == 0) throw std::invalid_argument("wedge_density: no factors");
  const Grid& grid = fields[0]->grid;
  if (total != grid.n())
    throw std::invalid_argument("wedge_density: powers must sum to the complex dimension");
  for (int f = 1; f < nf; ++f)
    require_same_grid(fields[f]->grid, grid, "wedge_density");

  PotentialField out(grid);
  Mat mats[3];
  const Mat* slots[3];
  const std::size_t M = grid.size();
  for (std::size_t p = 0; p < M; ++p) {
    int s = 0;
    for (int f = 0; f < nf; ++f) {
      mats[f] = fields[f]->matrix(p);
      for (int r = 0; r < pows[f]; ++r) slots[s++] = &mats[f];
    }
    out[p] = wedge_top(std::span<const Mat* const>(slots, static_cast<std::size_t>(total)));
  }
  return out;
}

double integrate_density(const PotentialField& density) {
  double sum = 0.0;
  for (double w : density.v) sum += w;
  return sum * density.grid.top_cell();
}

double integrate_wedge(
    std::initializer_list<std::pair<const HermitianField*, int>> factors) {
  return integrate_density(wedge_density(factors));
}

double min_metric_eig(const HermitianField& g) {
  double worst = std::numeric_limits<double>::infinity();
  const std::size_t M = g.grid.size();
  for (std::size_t p = 0; p < M; ++p)
    worst = std::min(worst, min_eig_herm(g.matrix(p)));
  return worst;
}

TraceDiagnostics trace_diagnostics(const HermitianField& g, const HermitianField& chi,
                                   const PotentialField& residual) {
  require_same_grid(g.grid, chi.grid, "trace_diagnostics");
  TraceDiagnostics d;
  const std::size_t M = g.grid.size();
  for (std::size_t p = 0; p < M; ++p) {
    Mat a = g.matrix(p);
    if (!positive_definite(a))
      throw NonPositiveMetric("trace_diagnostics: metric not positive" + point_label(p));
    double lo = min_eig_herm(a);
    Mat neg = -a;
    double hi = -min_eig_herm(neg);
    double tr = trace_quotient(a, chi.matrix(p));
    if (p == 0) {
      d.trace_min = d.trace_max = tr;
      d.metric_eig_min = lo;
      d.metric_eig_max = hi;
    } else {
      d.trace_min = std::min(d.trace_min, tr);
      d.trace_max = std::max(d.trace_max, tr);
      d.metric_eig_min = std::min(d.metric_eig_min, lo);
      d.metric_eig_max = std::max(d.metric_eig_max, hi);
    }
  }
  d.residual_sup = sup_norm(residual);
  return d;
}

double gradient_energy(const PotentialField& phi, const HermitianField& omega) {
  require_same_grid(phi.grid, omega.grid, "gradient_energy");
  const Grid& grid = phi.grid;
  const int n = grid.n();
  std::vector<PotentialField> d;
  d.reserve(2 * n);
  for (int a = 0; a < 2 * n; ++a) d.push_back(central_diff(phi, a));

  double sum = 0.0;
  const std::size_t M = grid.size();
  Eigen::Matrix<cd, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1> v(n);
  for (std::size_t p = 0; p < M; ++p) {
    Mat a = omega.matrix(p);
    if (!positive_definite(a))
      throw NonPositiveMetric("gradient_energy: metric not positive" + point_label(p));
    // partial_i = (D_x - i D_y)/2 acting on the real potential.
    for (int i = 0; i < n; ++i) v(i) = 0.5 * cd(d[2 * i][p], -d[2 * i + 1][p]);
    Mat inv = inverse_herm(a);
    double grad2 = (v.adjoint() * inv * v).value().real();
    const Mat* slots[3] = {&a, &a, &a};
    double density = wedge_top(std::span<const Mat* const>(slots, static_cast<std::size_t>(n)));
    sum += grad2 * density;
  }
  return sum * grid.top_cell();
}

double l2_norm(const PotentialField& phi, const HermitianField& omega) {
  require_same_grid(phi.grid, omega.grid, "l2_norm");
  const Grid& grid = phi.grid;
  const int n = grid.n();
  double sum = 0.0;
  const std::size_t M = grid.size();
  for (std::size_t p = 0; p < M; ++p) {
    Mat a = omega.matrix(p);
    const Mat* slots[3] = {&a, &a, &a};
    double density = wedge_top(std::span<const Mat* const>(slots, static_cast<std::size_t>(n)));
    sum += phi[p] * phi[p] * density;
  }
  return std::sqrt(sum * grid.top_cell());
}

}  // namespace jeq
