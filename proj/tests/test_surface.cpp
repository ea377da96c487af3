#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/surface.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

// g = sin(rho) + 0.05 sin^3(rho) = 1.0375 sin(rho) - 0.0125 sin(3 rho);
// still closes at rho = pi with g'(pi) = -1.
std::vector<double> wobbly_coeffs() {
  std::vector<double> c;
  double fact = 1.0;  // (2k+1)!
  double nine = 1.0;  // 9^k
  for (int k = 0; k < 24; ++k) {
    if (k > 0) fact *= (2.0 * k) * (2.0 * k + 1.0);
    double sign = (k % 2 == 0) ? 1.0 : -1.0;
    c.push_back(sign * (1.0375 - 0.0375 * nine) / fact);
    nine *= 9.0;
  }
  return c;
}

double wobbly_g(double rho) {
  return 1.0375 * std::sin(rho) - 0.0125 * std::sin(3.0 * rho);
}

std::vector<double> quarter_coeffs() {
  // g = sin(4 rho) / 4, first zero at pi/4.
  std::vector<double> c;
  double fact = 1.0, p16 = 1.0;
  for (int k = 0; k < 24; ++k) {
    if (k > 0) fact *= (2.0 * k) * (2.0 * k + 1.0);
    c.push_back(((k % 2 == 0) ? 1.0 : -1.0) * p16 / fact);
    p16 *= 16.0;
  }
  return c;
}

}  // namespace

TEST_CASE("sphere matches sin/cos closed forms across both charts") {
  SurfaceProfile s = SurfaceProfile::sphere();
  CHECK(s.is_sphere());
  CHECK(s.name() == std::string("sphere"));
  CHECK(s.rho_M() == doctest::Approx(kPi).epsilon(1e-13));
  for (int i = 1; i <= 40; ++i) {
    double rho = kPi * i / 40.5;  // reaches 0.9876 pi, well past the switch
    CHECK(s.g(rho) == doctest::Approx(std::sin(rho)).epsilon(1e-13));
    CHECK(s.g1(rho) == doctest::Approx(std::cos(rho)).epsilon(2e-13));
    CHECK(s.g2(rho) == doctest::Approx(-std::sin(rho)).epsilon(2e-13));
    CHECK(s.g3(rho) == doctest::Approx(-std::cos(rho)).epsilon(2e-13));
    CHECK(s.f(rho) == doctest::Approx(0.5 * std::sin(2.0 * rho)).epsilon(2e-13));
    CHECK(s.f1(rho) == doctest::Approx(std::cos(2.0 * rho)).epsilon(5e-13));
    CHECK(s.f2(rho) == doctest::Approx(-2.0 * std::sin(2.0 * rho)).epsilon(5e-13));
  }
}

TEST_CASE("difference forms keep relative accuracy where values cancel") {
  SurfaceProfile s = SurfaceProfile::sphere();
  const double e = 1e-8;
  // 1 - cos(e) = 2 sin^2(e/2) ~ 5e-17: the plain difference has no digits.
  CHECK(s.one_minus_g1(e) ==
        doctest::Approx(2.0 * std::pow(std::sin(e / 2.0), 2)).epsilon(1e-12));
  CHECK(s.one_minus_f1(e) ==
        doctest::Approx(2.0 * std::pow(std::sin(e), 2)).epsilon(1e-12));
  // Toward rho_M: 1 + cos(rho) = 2 sin^2((pi - rho)/2).
  CHECK(s.one_plus_g1(kPi - e) ==
        doctest::Approx(2.0 * std::pow(std::sin(e / 2.0), 2)).epsilon(1e-12));
  CHECK(s.one_minus_f1(kPi - e) ==
        doctest::Approx(2.0 * std::pow(std::sin(e), 2)).epsilon(1e-12));
}

TEST_CASE("reflected chart agrees with the defining series") {
  SurfaceProfile s = SurfaceProfile::sphere();
  for (double y : {1e-6, 1e-3, 0.1, 0.5}) {
    CHECK(s.g_reflected(y) == doctest::Approx(std::sin(y)).epsilon(1e-13));
    CHECK(s.g1_reflected(y) == doctest::Approx(std::cos(y)).epsilon(1e-13));
    CHECK(s.one_minus_g1_reflected(y) ==
          doctest::Approx(2.0 * std::pow(std::sin(y / 2.0), 2)).epsilon(1e-12));
  }
  // gt(y) - y = -y^3/6 + y^5/120: cancellation-free down to tiny y.
  const double y = 1e-4;
  CHECK(s.g_reflected_tail(y) ==
        doctest::Approx(-y * y * y / 6.0 + std::pow(y, 5) / 120.0)
            .epsilon(1e-8));
  CHECK(s.series_reflected()[0] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("f vanishes linearly at the far pole with slope -1") {
  SurfaceProfile s = SurfaceProfile::sphere();
  const double d = 1e-6;
  CHECK(s.f(s.rho_M() - d) / d == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("series accessors expose the normalized expansions") {
  SurfaceProfile s = SurfaceProfile::sphere();
  REQUIRE(s.series_g().size() >= 2);
  CHECK(s.series_g()[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.series_g()[1] == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
  // F_0 = G_0^2 = 1 for every admissible profile.
  CHECK(s.series_f()[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.series_f()[1] == doctest::Approx(-2.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("jets carry derivatives in both charts") {
  SurfaceProfile s = SurfaceProfile::sphere();
  for (double rho0 : {0.3, 2.9}) {  // defining chart, reflected chart
    TaylorJet rho = TaylorJet::variable(rho0, 5);
    TaylorJet gj = s.g_jet(rho);
    CHECK(gj.value() == doctest::Approx(s.g(rho0)).epsilon(1e-13));
    CHECK(gj.derivative(1) == doctest::Approx(s.g1(rho0)).epsilon(1e-12));
    CHECK(gj.derivative(2) == doctest::Approx(s.g2(rho0)).epsilon(1e-11));
    CHECK(gj.derivative(3) == doctest::Approx(s.g3(rho0)).epsilon(1e-10));
    TaylorJet g1j = s.g1_jet(rho);
    CHECK(g1j.value() == doctest::Approx(s.g1(rho0)).epsilon(1e-13));
    CHECK(g1j.derivative(1) == doctest::Approx(s.g2(rho0)).epsilon(1e-12));
    TaylorJet omf = s.one_minus_f1_jet(rho);
    CHECK(omf.value() == doctest::Approx(s.one_minus_f1(rho0)).epsilon(1e-12));
    CHECK(omf.derivative(1) == doctest::Approx(-s.f2(rho0)).epsilon(1e-11));
    TaylorJet f2j = s.f2_jet(rho);
    CHECK(f2j.value() == doctest::Approx(s.f2(rho0)).epsilon(1e-12));
    CHECK(f2j.derivative(1) ==
          doctest::Approx(-4.0 * std::cos(2.0 * rho0)).epsilon(1e-10));
  }
}

TEST_CASE("validation passes the sphere on every assumption") {
  ValidationReport rep = validate_surface(SurfaceProfile::sphere(), 2000);
  CHECK(rep.all_pass());
  CHECK(rep.rows.size() >= 6);
  for (const auto& row : rep.rows) {
    CHECK(row.pass);
    CHECK_FALSE(row.assumption.empty());
  }
}

TEST_CASE("perturbed sphere series reproduces its closed form and validates") {
  SurfaceProfile s = SurfaceProfile::from_series(wobbly_coeffs(), 3.1, "wobbly");
  CHECK_FALSE(s.is_sphere());
  CHECK(s.rho_M() == doctest::Approx(kPi).epsilon(1e-12));
  for (int i = 1; i <= 30; ++i) {
    double rho = kPi * i / 30.5;
    CHECK(s.g(rho) == doctest::Approx(wobbly_g(rho)).epsilon(1e-12));
    CHECK(s.g1(rho) ==
          doctest::Approx(1.0375 * std::cos(rho) - 0.0375 * std::cos(3.0 * rho))
              .epsilon(1e-11));
  }
  // Reflected chart of this g is the same function of y = pi - rho.
  CHECK(s.g_reflected(0.05) == doctest::Approx(wobbly_g(0.05)).epsilon(1e-12));
  CHECK(validate_surface(s, 800).all_pass());
}

TEST_CASE("a quarter-period target closes early") {
  SurfaceProfile s = SurfaceProfile::from_series(quarter_coeffs(), 0.8, "quarter");
  CHECK(s.rho_M() == doctest::Approx(kPi / 4.0).epsilon(1e-12));
  CHECK(s.f(s.rho_M() - 1e-6) / 1e-6 == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("series constructor rejects a bad normalization") {
  std::vector<double> c = wobbly_coeffs();
  c[0] = 1.05;
  CHECK_THROWS_AS(SurfaceProfile::from_series(c, 3.1), invalid_profile_error);
  std::vector<double> empty;
  CHECK_THROWS_AS(SurfaceProfile::from_series(empty, 3.1), invalid_profile_error);
}

TEST_CASE("profile files round-trip through the loader") {
  std::string path = "surface_roundtrip.profile";
  {
    std::ofstream out(path);
    out << "# perturbed sphere\n";
    out << "kind=series\n\n";
    out << "coeffs=";
    auto c = wobbly_coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) out << ',';
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", c[i]);
      out << buf;
    }
    out << "\nrho_m_hint=3.1\n";
  }
  SurfaceProfile s = load_surface_profile(path);
  CHECK(s.rho_M() == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(s.g(1.3) == doctest::Approx(wobbly_g(1.3)).epsilon(1e-12));

  SurfaceProfile viaResolve = resolve_surface_profile(path);
  CHECK(viaResolve.g(0.7) == doctest::Approx(s.g(0.7)).epsilon(1e-15));
  std::remove(path.c_str());

  CHECK(resolve_surface_profile("sphere").is_sphere());
  CHECK_THROWS_AS(load_surface_profile("no_such_file.profile"),
                  invalid_profile_error);
}

TEST_CASE("loader rejects malformed descriptions") {
  std::string path = "surface_bad.profile";
  {
    std::ofstream out(path);
    out << "kind=series\nrho_m_hint=3.1\n";  // coeffs missing
  }
  CHECK_THROWS_AS(load_surface_profile(path), invalid_profile_error);
  {
    std::ofstream out(path);
    out << "kind=torus\n";
  }
  CHECK_THROWS_AS(load_surface_profile(path), invalid_profile_error);
  std::remove(path.c_str());
}
