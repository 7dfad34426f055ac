#include "jeq/ddc.hpp"

#include <thread>
#include <vector>

#include "jeq/threads.hpp"

namespace jeq {

void ddc_point(const std::vector<double>& v, const Grid& g, std::size_t p,
               const int* c, Mat& out) {
  const int n = g.n();
  out.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const int xi = 2 * i, yi = 2 * i + 1;
    out(i, i) = 0.25 * (stencil::wide_second(v, g, p, c, xi) +
                        stencil::wide_second(v, g, p, c, yi));
    for (int j = i + 1; j < n; ++j) {
      const int xj = 2 * j, yj = 2 * j + 1;
      const double re = 0.25 * (stencil::mixed_central(v, g, p, c, xi, xj) +
                                stencil::mixed_central(v, g, p, c, yi, yj));
      const double im = 0.25 * (stencil::mixed_central(v, g, p, c, xi, yj) -
                                stencil::mixed_central(v, g, p, c, yi, xj));
      out(i, j) = cd(re, im);
      out(j, i) = cd(re, -im);
    }
  }
}

void ddc_point(const PotentialField& phi, std::size_t p, const int* c, Mat& out) {
  ddc_point(phi.v, phi.grid, p, c, out);
}

HermitianField ddc(const PotentialField& phi, int threads) {
  const Grid& g = phi.grid;
  HermitianField out(g);
  threads = resolve_threads(threads);
  const std::size_t M = g.size();
  auto work = [&](std::size_t lo, std::size_t hi) {
    Mat d(g.n(), g.n());
    for_point_range(g, lo, hi, [&](std::size_t p, const int* c) {
      ddc_point(phi, p, c, d);
      out.set_matrix(p, d);
    });
  };
  if (threads <= 1 || M < 4096) {
    work(0, M);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t nchunk = static_cast<std::size_t>(threads);
  const std::size_t base = M / nchunk, rem = M % nchunk;
  std::size_t lo = 0;
  for (std::size_t k = 0; k < nchunk; ++k) {
    std::size_t hi = lo + base + (k < rem ? 1 : 0);
    pool.emplace_back(work, lo, hi);
    lo = hi;
  }
  for (auto& t : pool) t.join();
  return out;
}

PotentialField central_diff(const PotentialField& phi, int axis) {
  const Grid& g = phi.grid;
  PotentialField out(g);
  for_each_point(g, [&](std::size_t p, const int* c) {
    out[p] = stencil::central_first(phi.v, g, p, c, axis);
  });
  return out;
}

}  // namespace jeq
