#include <cmath>
#include <limits>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/harmonic_map.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

const HarmonicMap& sphere_map() {
  static HarmonicMap hm = solve_harmonic_map(SurfaceProfile::sphere());
  return hm;
}

std::vector<double> wobbly_coeffs() {
  std::vector<double> c;
  double fact = 1.0, nine = 1.0;
  for (int k = 0; k < 24; ++k) {
    if (k > 0) fact *= (2.0 * k) * (2.0 * k + 1.0);
    c.push_back(((k % 2 == 0) ? 1.0 : -1.0) * (1.0375 - 0.0375 * nine) / fact);
    nine *= 9.0;
  }
  return c;
}

const HarmonicMap& wobbly_map() {
  static HarmonicMap hm =
      solve_harmonic_map(SurfaceProfile::from_series(wobbly_coeffs(), 3.1, "wobbly"));
  return hm;
}

}  // namespace

// Reference values: 50-digit solves of dQ/ds = g(Q), Q(1) = 1, rounded here.
TEST_CASE("sphere map hits the frozen reference values") {
  const HarmonicMap& hm = sphere_map();
  CHECK(hm.Q(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hm.Q(0.001) == doctest::Approx(0.0010926048709929224291).epsilon(1e-10));
  CHECK(hm.Q(0.5) == doctest::Approx(0.53329325387595264542).epsilon(1e-10));
  CHECK(hm.Q(2.0) == doctest::Approx(1.6592455085504499654).epsilon(1e-10));
  CHECK(hm.Q(1000.0) == doctest::Approx(3.1379316822352856474).epsilon(1e-10));
  CHECK(hm.Qprime(1.0) ==
        doctest::Approx(0.84147098480789650665).epsilon(1e-10));  // sin(1)
  CHECK(hm.Qsecond(1.0) ==
        doctest::Approx(-0.38682227139505565895).epsilon(1e-9));
  CHECK(hm.Q0() == doctest::Approx(1.0926049796875810265).epsilon(1e-11));
  CHECK(hm.Qtilde0() == doctest::Approx(3.6609754434249038385).epsilon(1e-11));
}

TEST_CASE("sphere map agrees with 2 atan(r tan(1/2)) over six decades") {
  const HarmonicMap& hm = sphere_map();
  const double c = std::tan(0.5);
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double r = std::pow(10.0, -3.0 + 6.0 * i / 200.0);
    worst = std::max(worst, std::abs(hm.Q(r) - 2.0 * std::atan(c * r)));
  }
  CHECK(worst < 1e-9);
  // Fall-off side, in the variable that stays relatively accurate.
  for (double r : {10.0, 100.0, 1e4})
    CHECK(hm.rhoM_minus_Q(r) ==
          doctest::Approx(2.0 * std::atan(1.0 / (c * r))).epsilon(1e-9));
}

TEST_CASE("first-order relations tie Q' and Q'' to the surface") {
  const HarmonicMap& hm = sphere_map();
  const SurfaceProfile& s = hm.surface();
  for (double r : {0.01, 0.3, 1.0, 7.0, 500.0}) {
    double q = hm.Q(r);
    CHECK(hm.Qprime(r) == doctest::Approx(s.g(q) / r).epsilon(1e-11));
    CHECK(hm.Qsecond(r) ==
          doctest::Approx(-s.g(q) * s.one_minus_g1(q) / (r * r)).epsilon(1e-10));
    CHECK(hm.g_of_Q(r) == doctest::Approx(s.g(q)).epsilon(1e-12));
    CHECK(hm.one_minus_g1_of_Q(r) ==
          doctest::Approx(1.0 - std::cos(q)).epsilon(1e-10));
  }
  // 1 + g'(Q) collapses to ~Qt0^2/(2 r^2) at the top of the range; the
  // plain difference would be pure rounding there.
  const double r = 1e5, c = std::tan(0.5);
  double x = c * r;
  CHECK(hm.one_plus_g1_of_Q(r) ==
        doctest::Approx(2.0 / (1.0 + x * x)).epsilon(1e-8));
}

TEST_CASE("energy integrates g dQ exactly at both scales") {
  const HarmonicMap& hm = sphere_map();
  CHECK(hm.energy(1.0) == doctest::Approx(1.0 - std::cos(1.0)).epsilon(1e-10));
  CHECK(hm.energy(std::numeric_limits<double>::infinity()) ==
        doctest::Approx(2.0).epsilon(1e-9));
  // Perturbed target: int_0^pi (sin + 0.05 sin^3) = 2 + 1/15.
  CHECK(wobbly_map().energy(std::numeric_limits<double>::infinity()) ==
        doctest::Approx(2.0 + 1.0 / 15.0).epsilon(1e-9));
}

TEST_CASE("origin series matches the closed-form expansion") {
  const HarmonicMap& hm = sphere_map();
  auto q = hm.q_series(12);
  REQUIRE(q.size() == 12);
  const double c = std::tan(0.5);
  // Q = 2 atan(c r): q_m = 2 (-1)^m c^{2m+1} / (2m+1).
  for (int m = 0; m < 6; ++m) {
    double expect = 2.0 * ((m % 2 == 0) ? 1.0 : -1.0) *
                    std::pow(c, 2 * m + 1) / (2.0 * m + 1.0);
    CHECK(q[static_cast<std::size_t>(m)] ==
          doctest::Approx(expect).epsilon(1e-9));
  }
  double r = 0.01, sum = 0.0, pw = r;
  for (double qm : q) {
    sum += qm * pw;
    pw *= r * r;
  }
  CHECK(hm.Q(r) == doctest::Approx(sum).epsilon(1e-11));
  // Below the grid the same series backs Q directly.
  CHECK(hm.Q(1e-8) / 1e-8 == doctest::Approx(hm.Q0()).epsilon(1e-10));
  CHECK(wobbly_map().Q(1e-8) / 1e-8 ==
        doctest::Approx(wobbly_map().Q0()).epsilon(1e-10));
}

TEST_CASE("Q_jet carries the first derivatives of the map") {
  const HarmonicMap& hm = sphere_map();
  for (double r0 : {0.4, 2.0, 50.0}) {
    TaylorJet j = hm.Q_jet(r0, 4);
    CHECK(j.value() == doctest::Approx(hm.Q(r0)).epsilon(1e-11));
    CHECK(j.derivative(1) == doctest::Approx(hm.Qprime(r0)).epsilon(1e-10));
    CHECK(j.derivative(2) == doctest::Approx(hm.Qsecond(r0)).epsilon(1e-9));
    double h = 1e-4 * r0;
    double d3 = (hm.Qsecond(r0 + h) - hm.Qsecond(r0 - h)) / (2.0 * h);
    CHECK(j.derivative(3) == doctest::Approx(d3).epsilon(1e-5));
  }
}

TEST_CASE("node profiles are monotone in the expected directions") {
  for (const HarmonicMap* hm : {&sphere_map(), &wobbly_map()}) {
    int bad_qp = 0, bad_r2qp = 0;
    for (std::size_t i = 0; i + 1 < hm->nodes(); ++i) {
      if (!(hm->node_qprime(i + 1) < hm->node_qprime(i))) ++bad_qp;
      if (!(hm->node_r2_qprime(i + 1) > hm->node_r2_qprime(i))) ++bad_r2qp;
    }
    CHECK(bad_qp == 0);
    CHECK(bad_r2qp == 0);
  }
}

TEST_CASE("node accessors are mutually consistent") {
  const HarmonicMap& hm = sphere_map();
  CHECK(hm.ds() == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
  CHECK(hm.s_min() == doctest::Approx(-14.0).epsilon(1e-15));
  CHECK(hm.s_max() == doctest::Approx(14.0).epsilon(1e-13));
  CHECK(hm.nodes() == 1793);
  CHECK(hm.node_r(320) == doctest::Approx(std::exp(hm.node_s(320))).epsilon(1e-14));
  CHECK(hm.s_min() < hm.switch_s());
  CHECK(hm.switch_s() < hm.s_max());
  std::size_t i = 900;
  double r = hm.node_r(i);
  CHECK(hm.node_qprime(i) == doctest::Approx(hm.Qprime(r)).epsilon(1e-11));
  CHECK(hm.node_r2_qprime(i) ==
        doctest::Approx(r * r * hm.Qprime(r)).epsilon(1e-11));
}

TEST_CASE("normalization is unreachable when the target closes early") {
  std::vector<double> c;
  double fact = 1.0, p16 = 1.0;
  for (int k = 0; k < 24; ++k) {
    if (k > 0) fact *= (2.0 * k) * (2.0 * k + 1.0);
    c.push_back(((k % 2 == 0) ? 1.0 : -1.0) * p16 / fact);
    p16 *= 16.0;
  }
  SurfaceProfile quarter = SurfaceProfile::from_series(c, 0.8, "quarter");
  CHECK_THROWS_AS(solve_harmonic_map(quarter), invalid_profile_error);
}

TEST_CASE("perturbed target solves and keeps the normalization") {
  const HarmonicMap& hm = wobbly_map();
  CHECK(hm.Q(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hm.Qprime(1.0) ==
        doctest::Approx(hm.surface().g(1.0)).epsilon(1e-11));
  CHECK(hm.Q(1000.0) > 3.13);
  CHECK(hm.Q(1000.0) < kPi);
}
