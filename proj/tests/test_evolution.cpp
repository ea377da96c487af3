#include <cmath>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/evolution.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

const HarmonicMap& sphere_map() {
  static HarmonicMap hm = solve_harmonic_map(SurfaceProfile::sphere());
  return hm;
}

// Smooth bump vanishing at the axis and well inside the outer boundary.
std::vector<double> bump(const RadialWaveField& f, double amp, double center,
                         double width) {
  std::vector<double> u(f.cells() + 1, 0.0);
  for (std::size_t j = 1; j < f.cells(); ++j) {
    double x = (f.r(j) - center) / width;
    u[j] = amp * f.r(j) * std::exp(-x * x);
  }
  return u;
}

}  // namespace

TEST_CASE("construction and state guards") {
  SurfaceProfile s = SurfaceProfile::sphere();
  CHECK_THROWS_AS(RadialWaveField(s, 0.0, 100), numerical_fault);
  CHECK_THROWS_AS(RadialWaveField(s, 0.1, 2), numerical_fault);
  RadialWaveField f(s, 0.01, 100);
  CHECK(f.cells() == 100);
  CHECK(f.h() == doctest::Approx(0.01));
  CHECK(f.r(7) == doctest::Approx(0.07));
  std::vector<double> wrong(5, 0.0);
  CHECK_THROWS_AS(f.set_state(wrong, wrong), numerical_fault);
  CHECK_THROWS_AS(f.set_sponge(2.0, 1.0), numerical_fault);
}

TEST_CASE("axis and boundary values are pinned by set_state") {
  RadialWaveField f(SurfaceProfile::sphere(), 0.02, 50);
  std::vector<double> u(51, 0.3), ut(51, 0.1);
  f.set_state(u, ut);
  CHECK(f.u()[0] == 0.0);
  CHECK(f.ut()[0] == 0.0);
  CHECK(f.ut()[50] == 0.0);
  CHECK(f.u()[50] == doctest::Approx(0.3));
  CHECK(f.sup_abs_u() == doctest::Approx(0.3));
  f.step(-0.01);
  CHECK(f.u()[50] == doctest::Approx(0.3));  // Dirichlet-pinned
  CHECK(f.finite());
}

TEST_CASE("acceleration is the exact gradient of the discrete energy") {
  // Recover a from one Verlet position update with ut = 0, then compare
  // against central differences of the energy functional.
  SurfaceProfile s = SurfaceProfile::sphere();
  const double h = 0.1;
  RadialWaveField f(s, h, 40);
  std::vector<double> u0 = bump(f, 0.4, 2.0, 0.8), zero(41, 0.0);

  const double dt = 1e-5;
  f.set_state(u0, zero);
  f.step(dt);
  std::vector<double> a(41, 0.0);
  for (std::size_t j = 0; j <= 40; ++j)
    a[j] = 2.0 * (f.u()[j] - u0[j]) / (dt * dt);

  auto energy_of = [&](const std::vector<double>& u) {
    RadialWaveField g(s, h, 40);
    g.set_state(u, zero);
    return g.energy();
  };
  const double d = 1e-4;
  for (std::size_t j : {1ul, 7ul, 20ul, 39ul}) {
    std::vector<double> up = u0, dn = u0;
    up[j] += d;
    dn[j] -= d;
    double grad = (energy_of(up) - energy_of(dn)) / (2.0 * d);
    CHECK(a[j] == doctest::Approx(-grad / (h * f.r(j))).epsilon(1e-4));
  }
}

TEST_CASE("energy drifts only at the Verlet oscillation scale") {
  RadialWaveField f(SurfaceProfile::sphere(), 1.0 / 512.0, 1024);
  std::vector<double> zero(1025, 0.0);
  f.set_state(bump(f, 0.5, 0.8, 0.25), zero);
  const double e0 = f.energy();
  const double dt = 0.5 / 512.0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    for (int i = 0; i < 100; ++i) f.step(dt);
    worst = std::max(worst, std::abs(f.energy() - e0) / e0);
  }
  CHECK(worst < 1e-4);
  CHECK(f.local_energy(1.0) <= f.energy() * (1.0 + 1e-12));
}

TEST_CASE("undamped stepping is exactly reversible") {
  RadialWaveField f(SurfaceProfile::sphere(), 0.02, 256);
  std::vector<double> u0 = bump(f, 0.6, 2.0, 0.5), zero(257, 0.0);
  f.set_state(u0, zero);
  for (int i = 0; i < 1000; ++i) f.step(0.01);
  for (int i = 0; i < 1000; ++i) f.step(-0.01);
  double worst = 0.0;
  for (std::size_t j = 0; j <= 256; ++j)
    worst = std::max(worst, std::abs(f.u()[j] - u0[j]));
  CHECK(worst < 1e-8);
}

TEST_CASE("stepping converges at second order in dt") {
  SurfaceProfile s = SurfaceProfile::sphere();
  auto run = [&](double dt) {
    RadialWaveField f(s, 1.0 / 128.0, 128);
    std::vector<double> zero(129, 0.0);
    f.set_state(bump(f, 0.5, 0.4, 0.15), zero);
    int n = static_cast<int>(std::lround(0.25 / dt));
    for (int i = 0; i < n; ++i) f.step(dt);
    return std::vector<double>(f.u().begin(), f.u().end());
  };
  auto ref = run(0.25 / 1024.0);
  auto coarse = run(0.25 / 64.0);
  auto fine = run(0.25 / 128.0);
  double ec = 0.0, ef = 0.0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    ec = std::max(ec, std::abs(coarse[j] - ref[j]));
    ef = std::max(ef, std::abs(fine[j] - ref[j]));
  }
  double order = std::log2(ec / ef);
  CHECK(order > 1.8);
  CHECK(order < 2.2);
}

TEST_CASE("sponge damps the outgoing wave and breaks reversibility") {
  SurfaceProfile s = SurfaceProfile::sphere();
  RadialWaveField f(s, 0.02, 256);
  std::vector<double> zero(257, 0.0);
  f.set_state(bump(f, 0.6, 2.0, 0.4), zero);
  f.set_sponge(3.5, 8.0);
  double e0 = f.energy();
  for (int i = 0; i < 800; ++i) f.step(0.01);  // wave crosses the sponge
  CHECK(f.energy() < 0.25 * e0);
  CHECK(f.finite());
}

TEST_CASE("finite detects a poisoned state") {
  RadialWaveField f(SurfaceProfile::sphere(), 0.1, 10);
  std::vector<double> u(11, 0.0), ut(11, 0.0);
  u[3] = std::nan("");
  f.set_state(u, ut);
  CHECK_FALSE(f.finite());
}

TEST_CASE("experiment driver validates its configuration") {
  BlowupProfile profile(sphere_map(), 1.0);
  BlowupRunConfig cfg;
  cfg.cells = 1024;
  cfg.t_start = 0.2;
  cfg.t_end = 0.15;
  cfg.r_max = 0.5;
  cfg.checkpoints = 3;

  BlowupRunConfig bad = cfg;
  bad.t_end = 0.3;
  CHECK_THROWS_AS(run_blowup_experiment(profile, bad), numerical_fault);
  bad = cfg;
  bad.cfl = 0.0;
  CHECK_THROWS_AS(run_blowup_experiment(profile, bad), numerical_fault);
  bad = cfg;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(run_blowup_experiment(profile, bad), numerical_fault);
  bad = cfg;
  bad.checkpoints = 1;
  CHECK_THROWS_AS(run_blowup_experiment(profile, bad), numerical_fault);
  bad = cfg;
  bad.cells = 64;  // far too coarse for the core scale t_end^{1+nu}
  CHECK_THROWS_WITH_AS(run_blowup_experiment(profile, bad),
                       doctest::Contains("cells across the core"),
                       numerical_fault);
}

TEST_CASE("short corrected-profile run conserves energy on the way in") {
  BlowupProfile profile(sphere_map(), 1.0);
  BlowupRunConfig cfg;
  cfg.cells = 1024;
  cfg.t_start = 0.2;
  cfg.t_end = 0.15;
  cfg.r_max = 0.5;
  cfg.checkpoints = 4;
  auto reports = run_blowup_experiment(profile, cfg);
  REQUIRE(reports.size() == 4);
  CHECK(reports.front().t == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(reports.back().t == doctest::Approx(0.15).epsilon(1e-12));
  for (std::size_t k = 1; k < reports.size(); ++k) {
    CHECK(reports[k].t < reports[k - 1].t);
    CHECK(reports[k].min_dt > 0.0);
    CHECK(reports[k].e_cone <= reports[k].e_total * (1.0 + 1e-12));
    CHECK(std::abs(reports[k].e_total - reports[0].e_total) <
          1e-3 * reports[0].e_total);
  }
  CHECK(reports.front().sup_u > 0.0);
}

TEST_CASE("control run releases a truncated bump at rest") {
  BlowupProfile profile(sphere_map(), 1.0);
  BlowupRunConfig cfg;
  cfg.cells = 1024;
  cfg.t_start = 0.2;
  cfg.t_end = 0.15;
  cfg.r_max = 0.5;
  cfg.checkpoints = 3;
  cfg.control = true;
  cfg.amplitude = 0.8;
  auto reports = run_blowup_experiment(profile, cfg);
  REQUIRE(reports.size() == 3);
  // Data is amplitude * Q(lambda r) cos^2(pi r / (4 t)), so the sup is
  // bounded by amplitude * pi and the cutoff keeps it below that.
  CHECK(reports.front().sup_u > 0.1);
  CHECK(reports.front().sup_u <= 0.8 * kPi);
  CHECK(std::abs(reports.back().e_total - reports.front().e_total) <
        1e-3 * reports.front().e_total);
}
