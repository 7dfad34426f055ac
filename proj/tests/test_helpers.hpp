#pragma once

#include <cmath>
#include <initializer_list>
#include <random>
#include <vector>

#include "jeq/fields.hpp"
#include "jeq/grid.hpp"
#include "jeq/smallmat.hpp"

namespace testutil {

/// Sample f(x[0..2n)) at every grid node.
template <class F>
jeq::PotentialField sample(const jeq::Grid& g, F&& f) {
  jeq::PotentialField out(g);
  jeq::for_each_point(g, [&](std::size_t p, const int* c) {
    double x[6] = {0, 0, 0, 0, 0, 0};
    for (int a = 0; a < g.axes(); ++a) x[a] = g.coord(a, c[a]);
    out[p] = f(x);
  });
  return out;
}

inline jeq::Mat diag_mat(std::initializer_list<double> d) {
  const int n = static_cast<int>(d.size());
  jeq::Mat m = jeq::Mat::Zero(n, n);
  int i = 0;
  for (double v : d) m(i, i) = v, ++i;
  return m;
}

/// Random Hermitian positive definite matrix, eigenvalues bounded away from 0.
inline jeq::Mat random_pd(int n, std::mt19937& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  jeq::Mat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = jeq::cd(unif(rng), unif(rng)) * spread;
  jeq::Mat a = b.adjoint() * b;
  for (int i = 0; i < n; ++i) a(i, i) += 0.3;
  return a;
}

/// A smooth periodic potential: sum of a few low trig modes, deterministic in
/// the seed. Amplitude is the sum of |coefficients|.
struct TrigModes {
  struct Term {
    double a, phase;
    int k[6];
  };
  std::vector<Term> terms;
  std::vector<double> freq;  // 2 pi / period per axis

  double value(const double* x) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double arg = t.phase;
      for (std::size_t a = 0; a < freq.size(); ++a) arg += t.k[a] * freq[a] * x[a];
      s += t.a * std::cos(arg);
    }
    return s;
  }
  /// Analytic second derivative along real axes a, b.
  double d2(const double* x, int a, int b) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double arg = t.phase;
      for (std::size_t q = 0; q < freq.size(); ++q) arg += t.k[q] * freq[q] * x[q];
      s += -t.a * (t.k[a] * freq[a]) * (t.k[b] * freq[b]) * std::cos(arg);
    }
    return s;
  }
};

inline TrigModes make_trig(const jeq::Grid& g, double amp, unsigned seed, int nterms = 4,
                           int max_mode = 2) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<int> modes(-max_mode, max_mode);
  TrigModes tm;
  tm.freq.resize(g.axes());
  for (int a = 0; a < g.axes(); ++a) tm.freq[a] = 2.0 * jeq::Grid::kPi / g.period(a);
  tm.terms.resize(nterms);
  for (auto& t : tm.terms) {
    t.a = amp * unif(rng) / nterms;
    t.phase = 3.0 * unif(rng);
    for (int a = 0; a < 6; ++a) t.k[a] = 0;
    for (int a = 0; a < g.axes(); ++a) t.k[a] = modes(rng);
  }
  return tm;
}

inline jeq::PotentialField random_trig(const jeq::Grid& g, double amp, unsigned seed) {
  TrigModes tm = make_trig(g, amp, seed);
  return sample(g, [&](const double* x) { return tm.value(x); });
}

}  // namespace testutil
