#pragma once

#include <cstddef>

#include "jeq/fields.hpp"
#include "jeq/grid.hpp"
#include "jeq/smallmat.hpp"

namespace jeq {

namespace stencil {

/// Value at p shifted by a precomputed index delta.
inline double at(const std::vector<double>& v, std::size_t p, std::ptrdiff_t d) {
  return v[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + d)];
}

/// Central first difference along `axis` at point p (coords must match p).
inline double central_first(const std::vector<double>& v, const Grid& g, std::size_t p,
                            const int* c, int axis) {
  return (at(v, p, g.jump(axis, c[axis], 1)) - at(v, p, g.jump(axis, c[axis], -1))) /
         (2.0 * g.h(axis));
}

/// Wide second difference (v(p+2) - 2 v(p) + v(p-2)) / (4 h^2): the square of
/// the central first difference, so summation by parts against first
/// differences is exact on the periodic grid.
inline double wide_second(const std::vector<double>& v, const Grid& g, std::size_t p,
                          const int* c, int axis) {
  return (at(v, p, g.jump(axis, c[axis], 2)) - 2.0 * v[p] +
          at(v, p, g.jump(axis, c[axis], -2))) /
         (4.0 * g.h(axis) * g.h(axis));
}

/// Product of central first differences along two distinct axes a, b.
inline double mixed_central(const std::vector<double>& v, const Grid& g, std::size_t p,
                            const int* c, int a, int b) {
  const std::ptrdiff_t ap = g.jump(a, c[a], 1), am = g.jump(a, c[a], -1);
  const std::ptrdiff_t bp = g.jump(b, c[b], 1), bm = g.jump(b, c[b], -1);
  return (at(v, p, ap + bp) - at(v, p, ap + bm) - at(v, p, am + bp) + at(v, p, am + bm)) /
         (4.0 * g.h(a) * g.h(b));
}

}  // namespace stencil

/// Complex Hessian (d d^c phi)_{i jbar} = (1/4)[D_{x_i}D_{x_j} + D_{y_i}D_{y_j}
/// + i(D_{x_i}D_{y_j} - D_{y_i}D_{x_j})] phi at one point, with every D a
/// central first difference. Writes into `out` (resized to n x n). Building
/// all entries from first differences keeps the diagonal's imaginary part
/// exactly zero and makes discrete top-form identities hold to rounding.
void ddc_point(const std::vector<double>& v, const Grid& g, std::size_t p,
               const int* coords, Mat& out);
void ddc_point(const PotentialField& phi, std::size_t p, const int* coords, Mat& out);

/// Field version of ddc_point over the whole grid.
HermitianField ddc(const PotentialField& phi, int threads = 1);

/// Central first difference of phi along one real axis, as a field.
PotentialField central_diff(const PotentialField& phi, int axis);

}  // namespace jeq
