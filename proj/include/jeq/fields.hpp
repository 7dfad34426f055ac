#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "jeq/grid.hpp"
#include "jeq/smallmat.hpp"

namespace jeq {

/// Real scalar field sampled on a Grid; one value per lattice point.
struct PotentialField {
  Grid grid;
  std::vector<double> v;

  explicit PotentialField(const Grid& g) : grid(g), v(g.size(), 0.0) {}
  PotentialField(const Grid& g, std::vector<double> data)
      : grid(g), v(std::move(data)) {}

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }
};

/// Field of n-by-n complex matrices, one per lattice point, stored row-major.
/// Entries are expected (but not forced) to be Hermitian; helpers below
/// measure and repair deviations.
struct HermitianField {
  Grid grid;
  int n;
  std::vector<cd> m;

  explicit HermitianField(const Grid& g)
      : grid(g), n(g.n()), m(g.size() * static_cast<std::size_t>(g.n() * g.n()),
                             cd(0.0, 0.0)) {}

  std::size_t block(std::size_t p) const {
    return p * static_cast<std::size_t>(n * n);
  }
  cd& at(std::size_t p, int i, int j) { return m[block(p) + i * n + j]; }
  cd at(std::size_t p, int i, int j) const { return m[block(p) + i * n + j]; }

  /// Copy the matrix at point p into an Eigen matrix.
  Mat matrix(std::size_t p) const {
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = at(p, i, j);
    return a;
  }

  /// Write an Eigen matrix into the slot at point p.
  void set_matrix(std::size_t p, const Mat& a) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) at(p, i, j) = a(i, j);
  }
};

/// Constant Hermitian field equal to `a` everywhere.
inline HermitianField constant_field(const Grid& g, const Mat& a) {
  HermitianField f(g);
  const std::size_t np = g.size();
  for (std::size_t p = 0; p < np; ++p) f.set_matrix(p, a);
  return f;
}

/// Pointwise sum of two matrix fields on the same grid.
inline HermitianField add(const HermitianField& a, const HermitianField& b) {
  HermitianField out(a.grid);
  for (std::size_t i = 0; i < a.m.size(); ++i) out.m[i] = a.m[i] + b.m[i];
  return out;
}

/// Pointwise a + s*b.
inline HermitianField add_scaled(const HermitianField& a, double s,
                                 const HermitianField& b) {
  HermitianField out(a.grid);
  for (std::size_t i = 0; i < a.m.size(); ++i) out.m[i] = a.m[i] + s * b.m[i];
  return out;
}

/// Largest |.| entry deviation from exact Hermitian symmetry over the field.
inline double herm_deviation_field(const HermitianField& f) {
  double worst = 0.0;
  const std::size_t np = f.grid.size();
  for (std::size_t p = 0; p < np; ++p) {
    for (int i = 0; i < f.n; ++i)
      for (int j = i; j < f.n; ++j) {
        cd d = f.at(p, i, j) - std::conj(f.at(p, j, i));
        worst = std::max(worst, std::abs(d));
      }
  }
  return worst;
}

inline double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline double sup_norm(const PotentialField& f) { return sup_norm(f.v); }

/// Plain average over grid points (no measure weight).
inline double grid_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double grid_mean(const PotentialField& f) { return grid_mean(f.v); }

/// max(v) - min(v), the oscillation of a sampled function.
inline double oscillation(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi - lo;
}

inline double oscillation(const PotentialField& f) { return oscillation(f.v); }

}  // namespace jeq
