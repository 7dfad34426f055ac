#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace jeq {

/// Uniform periodic grid on the real torus underlying (C/Z)^n: 2n real axes,
/// N points each. Axis 2i is Re z_{i+1}, axis 2i+1 is Im z_{i+1}; axis 0 is
/// fastest in the flat index. Periodic indexing is exact (mod-N wrap tables),
/// so stencils never see a boundary.
class Grid {
 public:
  Grid(int n, int N, std::vector<double> periods = {}) : n_(n), N_(N) {
    if (n < 1 || n > 3) throw std::invalid_argument("Grid: complex dimension n must be 1..3");
    if (N < 8 || N % 2 != 0) throw std::invalid_argument("Grid: N must be even and >= 8");
    const int A = 2 * n;
    if (periods.empty()) periods.assign(A, 2.0 * kPi);
    if (static_cast<int>(periods.size()) != A)
      throw std::invalid_argument("Grid: expected " + std::to_string(A) + " periods");
    periods_ = std::move(periods);
    h_.resize(A);
    stride_.resize(A);
    std::size_t s = 1;
    for (int a = 0; a < A; ++a) {
      if (!(periods_[a] > 0.0)) throw std::invalid_argument("Grid: periods must be positive");
      h_[a] = periods_[a] / N;
      stride_[a] = s;
      s *= static_cast<std::size_t>(N);
    }
    M_ = s;
    jump_.resize(A);
    for (int a = 0; a < A; ++a) {
      for (int off = -2; off <= 2; ++off) {
        auto& tbl = jump_[a][off + 2];
        tbl.resize(N);
        for (int c = 0; c < N; ++c) {
          int cc = ((c + off) % N + N) % N;
          tbl[c] = (static_cast<std::ptrdiff_t>(cc) - c) * static_cast<std::ptrdiff_t>(stride_[a]);
        }
      }
    }
  }

  int n() const { return n_; }
  int N() const { return N_; }
  int axes() const { return 2 * n_; }
  std::size_t size() const { return M_; }
  double h(int axis) const { return h_[axis]; }
  double period(int axis) const { return periods_[axis]; }
  const std::vector<double>& periods() const { return periods_; }
  std::size_t stride(int axis) const { return stride_[axis]; }

  /// Coordinate Lebesgue cell volume prod_a h_a.
  double cell() const {
    double c = 1.0;
    for (double hh : h_) c *= hh;
    return c;
  }

  /// Cell volume of the canonical top-form frame prod_i (i dz_i ^ dzbar_i)
  /// = 2^n dx_1 dy_1 ... : used when integrating wedge densities.
  double top_cell() const {
    double c = cell();
    for (int i = 0; i < n_; ++i) c *= 2.0;
    return c;
  }

  /// Flat-index delta for a step of `off` in {-2..2} along `axis` starting
  /// from coordinate c on that axis.
  std::ptrdiff_t jump(int axis, int c, int off) const { return jump_[axis][off + 2][c]; }

  /// Decompose a flat index into per-axis coordinates (coords[0..2n)).
  void decompose(std::size_t idx, int* coords) const {
    for (int a = 0; a < axes(); ++a) {
      coords[a] = static_cast<int>(idx % N_);
      idx /= N_;
    }
  }

  /// Coordinate of grid node c along an axis.
  double coord(int axis, int c) const { return h_[axis] * c; }

  bool same(const Grid& o) const {
    return n_ == o.n_ && N_ == o.N_ && periods_ == o.periods_;
  }

  static constexpr double kPi = 3.14159265358979323846;

 private:
  int n_, N_;
  std::vector<double> periods_, h_;
  std::vector<std::size_t> stride_;
  std::size_t M_ = 0;
  std::vector<std::array<std::vector<std::ptrdiff_t>, 5>> jump_;
};

/// Serial point loop carrying the multi-index alongside the flat index.
/// f(idx, coords) with coords valid for Grid::jump.
template <class F>
void for_each_point(const Grid& g, F&& f) {
  int coords[6] = {0, 0, 0, 0, 0, 0};
  const int A = g.axes(), N = g.N();
  const std::size_t M = g.size();
  for (std::size_t idx = 0; idx < M; ++idx) {
    f(idx, coords);
    for (int a = 0; a < A; ++a) {
      if (++coords[a] < N) break;
      coords[a] = 0;
    }
  }
}

/// Ranged variant for data-parallel maps: iterates idx in [lo, hi).
template <class F>
void for_point_range(const Grid& g, std::size_t lo, std::size_t hi, F&& f) {
  int coords[6] = {0, 0, 0, 0, 0, 0};
  g.decompose(lo, coords);
  const int A = g.axes(), N = g.N();
  for (std::size_t idx = lo; idx < hi; ++idx) {
    f(idx, coords);
    for (int a = 0; a < A; ++a) {
      if (++coords[a] < N) break;
      coords[a] = 0;
    }
  }
}

}  // namespace jeq
