#include <cmath>
#include <random>

#include "doctest.h"
#include "jeq/ddc.hpp"
#include "jeq/errors.hpp"
#include "jeq/geom.hpp"
#include "jeq/subsolution.hpp"
#include "test_helpers.hpp"

using namespace jeq;

namespace {

/// Brute-force certificate for n = 2: largest lattice delta (step 1e-3) such
/// that 2 omega - (1+delta) chi is positive semidefinite at every point. For
/// n = 2 the (n-1,n-1)-form condition n omega^{n-1} >= (1+delta) (n-1)
/// omega^{n-2} ^ chi is exactly this matrix inequality.
double scan_delta_n2(const HermitianField& omega, const HermitianField& chi,
                     double hi) {
  auto feasible = [&](double delta) {
    for (std::size_t p = 0; p < omega.grid.size(); ++p) {
      Mat m = 2.0 * omega.matrix(p) - (1.0 + delta) * chi.matrix(p);
      if (min_eig_herm(m) < -1e-12) return false;
    }
    return true;
  };
  // PSD set shrinks as delta grows (chi > 0), so bisection over the lattice
  // is exact.
  long lo_k = 0, hi_k = static_cast<long>(std::ceil(hi / 1e-3));
  if (!feasible(0.0)) return -1.0;
  while (lo_k < hi_k) {
    long mid = (lo_k + hi_k + 1) / 2;
    if (feasible(1e-3 * mid))
      lo_k = mid;
    else
      hi_k = mid - 1;
  }
  return 1e-3 * lo_k;
}

}  // namespace

TEST_CASE("slack of the identity pair: chi = omega gives delta_max = 1 (n=2)") {
  Grid g(2, 8);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0, 1.0}));
  SlackReport rep = subsolution_slack(om, om);
  CHECK(rep.delta_max == doctest::Approx(1.0));
  CHECK(rep.s_star_sup == doctest::Approx(1.0));
}

TEST_CASE("borderline diagonal pair has zero slack") {
  Grid g(2, 8);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0, 2.0}));
  HermitianField ch = constant_field(g, testutil::diag_mat({2.0, 2.0}));
  SlackReport rep = subsolution_slack(om, ch);
  CHECK(rep.s_star_sup == doctest::Approx(2.0));
  CHECK(rep.delta_max == doctest::Approx(0.0));
}

TEST_CASE("slack is infinite for n = 1") {
  Grid g(1, 8);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0}));
  HermitianField ch = constant_field(g, testutil::diag_mat({5.0}));
  CHECK(std::isinf(subsolution_slack(om, ch).delta_max));
}

TEST_CASE("eigenvalue slack agrees with the form-positivity scan on a perturbed pair") {
  Grid g(2, 8);
  PotentialField psi1 = testutil::random_trig(g, 0.05, 31);
  PotentialField psi2 = testutil::random_trig(g, 0.08, 32);
  HermitianField om = with_potential(constant_field(g, testutil::diag_mat({1.0, 1.0})), psi1);
  HermitianField ch = with_potential(constant_field(g, testutil::diag_mat({1.3, 1.1})), psi2);
  SlackReport rep = subsolution_slack(om, ch);
  REQUIRE(rep.delta_max > 0.0);
  double scanned = scan_delta_n2(om, ch, rep.delta_max + 0.05);
  CHECK(std::abs(scanned - rep.delta_max) <= 1.5e-3);
}

TEST_CASE("worst point attains the supremum of s*") {
  Grid g(2, 8);
  PotentialField psi = testutil::random_trig(g, 0.05, 33);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0, 1.0}));
  HermitianField ch = with_potential(constant_field(g, testutil::diag_mat({1.2, 1.2})), psi);
  SlackReport rep = subsolution_slack(om, ch);
  VecR mu = generalized_eigs(ch.matrix(rep.worst_point), om.matrix(rep.worst_point));
  CHECK(mu(0) + mu(1) - mu(0) == doctest::Approx(rep.s_star_sup));
  CHECK(mu(1) == doctest::Approx(rep.s_star_sup));
}

TEST_CASE("slack is invariant under joint rescaling") {
  Grid g(2, 8);
  PotentialField psi = testutil::random_trig(g, 0.05, 34);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0, 1.4}));
  HermitianField ch = with_potential(constant_field(g, testutil::diag_mat({1.2, 1.0})), psi);
  SlackReport a = subsolution_slack(om, ch);
  HermitianField om2(g), ch2(g);
  const double c = 0.37;
  for (std::size_t i = 0; i < om.m.size(); ++i) {
    om2.m[i] = c * om.m[i];
    ch2.m[i] = c * ch.m[i];
  }
  SlackReport b = subsolution_slack(om2, ch2);
  CHECK(std::abs(a.delta_max - b.delta_max) <= 1e-12);
}

TEST_CASE("path check: endpoints and the t-sweep implication") {
  Grid g(2, 8);
  PotentialField psi = testutil::random_trig(g, 0.04, 35);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0, 1.0}));
  // chi >= omega keeps s* >= n-1, so the slack is monotone along the path.
  HermitianField ch = with_potential(constant_field(g, testutil::diag_mat({1.4, 1.2})), psi);
  SlackReport at1 = subsolution_slack(om, ch);
  REQUIRE(at1.delta_max > 0.0);
  REQUIRE(at1.s_star_sup >= 1.0);

  // t = 0 reduces to chi_t = omega: true for any delta <= n/(n-1) - 1.
  CHECK(path_subsolution_check(om, ch, 0.0, 0.999));
  CHECK_FALSE(path_subsolution_check(om, ch, 0.0, 1.001));

  // t = 1 is definitionally the plain slack test.
  CHECK(path_subsolution_check(om, ch, 1.0, at1.delta_max - 1e-9));
  CHECK_FALSE(path_subsolution_check(om, ch, 1.0, at1.delta_max + 1e-9));

  // Holding at t = 1 implies holding along the whole sweep.
  double delta = 0.999 * std::min(at1.delta_max, 1.0);
  double prev_slack = at1.delta_max;
  for (int k = 10; k >= 0; --k) {
    double t = 0.1 * k;
    CHECK(path_subsolution_check(om, ch, t, delta));
    HermitianField cht(g);
    for (std::size_t i = 0; i < cht.m.size(); ++i)
      cht.m[i] = t * ch.m[i] + (1.0 - t) * om.m[i];
    double slack_t = subsolution_slack(om, cht).delta_max;
    CHECK(slack_t >= prev_slack - 1e-12);  // non-decreasing as t falls
    prev_slack = slack_t;
  }
  CHECK_THROWS_AS(path_subsolution_check(om, ch, 1.5, 0.1), std::invalid_argument);
}

TEST_CASE("asymptotic deviation vanishes on an exact solution and scales with rho^eta") {
  Grid g(2, 8);
  HermitianField om = constant_field(g, testutil::diag_mat({1.0, 1.0}));
  PotentialField rho(g);
  for (auto& v : rho.v) v = 2.0;

  // chi = omega solves the J-equation exactly: the pointwise ratio equals the
  // global constant everywhere.
  CHECK(asymptotic_deviation(om, om, rho, 3.0) == doctest::Approx(0.0));

  // Non-constant chi: deviation with constant rho = 2 obeys dev(eta) = 2^eta dev(0).
  PotentialField psi = testutil::random_trig(g, 0.05, 36);
  HermitianField ch = with_potential(constant_field(g, testutil::diag_mat({1.2, 1.2})), psi);
  PotentialField ones(g);
  for (auto& v : ones.v) v = 1.0;
  double dev0 = asymptotic_deviation(om, ch, ones, 5.0);  // rho = 1: eta is inert
  double dev3 = asymptotic_deviation(om, ch, rho, 3.0);
  REQUIRE(dev0 > 0.0);
  CHECK(dev3 == doctest::Approx(8.0 * dev0).epsilon(1e-12));

  PotentialField bad(g);
  CHECK_THROWS_AS(asymptotic_deviation(om, ch, bad, 1.0), NonPositiveWeight);
}
