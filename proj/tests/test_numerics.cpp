#include <cmath>
#include <cstdlib>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/numerics.hpp"
#include "doctest.h"

using namespace blowup;

TEST_CASE("linspace and logspace hit both endpoints") {
  auto lin = linspace(-1.0, 3.0, 9);
  REQUIRE(lin.size() == 9);
  CHECK(lin.front() == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(lin.back() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(lin[2] == doctest::Approx(0.0).epsilon(1e-15));

  auto geo = logspace(1e-2, 1e2, 5);
  REQUIRE(geo.size() == 5);
  for (std::size_t i = 0; i < geo.size(); ++i)
    CHECK(geo[i] == doctest::Approx(std::pow(10.0, static_cast<double>(i) - 2.0))
                        .epsilon(1e-13));
  CHECK_THROWS_AS(logspace(0.0, 1.0, 4), numerical_fault);
}

TEST_CASE("ode_integrate reproduces the exponential both directions") {
  OdeRhs rhs = [](double, const double* y, double* dy) { dy[0] = y[0]; };
  double y = 1.0;
  ode_integrate(rhs, 1, 0.0, 1.0, &y);
  CHECK(y == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  ode_integrate(rhs, 1, 1.0, 0.0, &y);
  CHECK(y == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("ode_integrate returns the oscillator after a full period") {
  OdeRhs rhs = [](double, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  double y[2] = {0.3, -0.7};
  ode_integrate(rhs, 2, 0.0, 2.0 * kPi, y);
  CHECK(y[0] == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(y[1] == doctest::Approx(-0.7).epsilon(1e-10));
}

TEST_CASE("ode_integrate faults when the step budget is exhausted") {
  OdeRhs rhs = [](double, const double* y, double* dy) { dy[0] = y[0]; };
  double y = 1.0;
  OdeOptions opt;
  opt.max_steps = 3;
  CHECK_THROWS_AS(ode_integrate(rhs, 1, 0.0, 100.0, &y, opt), numerical_fault);
}

TEST_CASE("ode_integrate_nodes lands on every node, either direction") {
  OdeRhs rhs = [](double x, const double*, double* dy) { dy[0] = 2.0 * x; };
  std::vector<double> xs = {0.0, 0.25, 0.5, 1.0, 2.0};
  std::vector<double> seen;
  double y = 0.0;
  ode_integrate_nodes(rhs, 1, xs, &y,
                      [&](std::size_t i, const double* v) {
                        CHECK(v[0] == doctest::Approx(xs[i] * xs[i]).epsilon(1e-12));
                        seen.push_back(xs[i]);
                      });
  REQUIRE(seen.size() == xs.size());

  std::vector<double> rev(xs.rbegin(), xs.rend());
  y = 4.0;
  std::size_t count = 0;
  ode_integrate_nodes(rhs, 1, rev, &y,
                      [&](std::size_t i, const double* v) {
                        CHECK(v[0] == doctest::Approx(rev[i] * rev[i]).epsilon(1e-11));
                        ++count;
                      });
  CHECK(count == rev.size());
}

TEST_CASE("gauss_legendre is exact up to degree 2n-1") {
  const QuadRule& q = gauss_legendre(8);
  double wsum = 0.0, m14 = 0.0, m15 = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    wsum += q.w[i];
    m14 += q.w[i] * std::pow(q.x[i], 14);
    m15 += q.w[i] * std::pow(q.x[i], 15);
  }
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m14 == doctest::Approx(2.0 / 15.0).epsilon(1e-13));
  CHECK(std::abs(m15) < 1e-15);
  CHECK_THROWS_AS(gauss_legendre(0), numerical_fault);
  CHECK_THROWS_AS(gauss_legendre(65), numerical_fault);
}

TEST_CASE("quadrature drivers agree with closed forms") {
  auto sine = [](double x) { return std::sin(x); };
  CHECK(integrate_gl(sine, 0.0, kPi) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(integrate_gl_cells(sine, 0.0, kPi, 16, 8) ==
        doctest::Approx(2.0).epsilon(1e-13));

  // Narrow Gaussian, resolved only by adaptive refinement.
  auto peak = [](double x) { return std::exp(-400.0 * (x - 0.3) * (x - 0.3)); };
  const double exact =
      std::sqrt(kPi) / 20.0 * 0.5 * (std::erf(14.0) + std::erf(6.0));
  CHECK(integrate_adaptive(peak, 0.0, 1.0, 1e-12) ==
        doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("HermiteTable reproduces cubics exactly and sin to fourth order") {
  {
    std::vector<double> y, dy;
    for (int i = 0; i <= 10; ++i) {
      double x = 0.5 * i;
      y.push_back(x * x * x - 2.0 * x);
      dy.push_back(3.0 * x * x - 2.0);
    }
    HermiteTable t(0.0, 0.5, y, dy);
    for (double x : {0.13, 1.77, 3.2, 4.9}) {
      CHECK(t(x) == doctest::Approx(x * x * x - 2.0 * x).epsilon(1e-14));
      CHECK(t.deriv(x) == doctest::Approx(3.0 * x * x - 2.0).epsilon(1e-13));
    }
    CHECK(t.contains(5.0));
    CHECK_FALSE(t.contains(5.0001));
    CHECK_THROWS_AS(t(5.1), numerical_fault);
    CHECK(t.node_x(3) == doctest::Approx(1.5));
    CHECK(t.node_value(2) == doctest::Approx(1.0 - 2.0));
  }
  {
    const double dx = 0.01;
    std::vector<double> y, dy;
    for (int i = 0; i <= 200; ++i) {
      y.push_back(std::sin(dx * i));
      dy.push_back(std::cos(dx * i));
    }
    HermiteTable t(0.0, dx, y, dy);
    double worst = 0.0;
    for (double x = 0.004; x < 2.0; x += 0.0173)
      worst = std::max(worst, std::abs(t(x) - std::sin(x)));
    CHECK(worst < 5e-11);  // ~ dx^4 / 384
  }
}

TEST_CASE("Lagrange6Table reproduces quintics exactly") {
  auto p = [](double x) {
    return ((((x - 0.3) * x + 2.0) * x - 1.0) * x + 0.5) * x - 3.0;
  };
  std::vector<double> y;
  for (int i = 0; i <= 20; ++i) y.push_back(p(-1.0 + 0.2 * i));
  Lagrange6Table t(-1.0, 0.2, y);
  for (double x : {-0.93, -0.11, 0.77, 2.41, 2.99})
    CHECK(t(x) == doctest::Approx(p(x)).epsilon(1e-12));
  CHECK_THROWS_AS(t(3.01), numerical_fault);
}

TEST_CASE("cumulative_table integrates through a sign change of the slope") {
  // Antiderivative of cos crosses zero inside the range; node values track
  // sin to the ODE tolerance, off-node values pick up the ~ dx^4/384
  // Hermite interpolation error on top.
  HermiteTable t = cumulative_table([](double x) { return std::cos(x); }, 0.0,
                                    0.05, 141, -1.0);
  for (double x : {0.3, 3.3, 6.9})
    CHECK(t(x) == doctest::Approx(std::sin(x) - 1.0).epsilon(5e-12));
  CHECK(t(1.5707963) ==
        doctest::Approx(std::sin(1.5707963) - 1.0).epsilon(5e-8));
  CHECK(t.deriv(2.0) == doctest::Approx(std::cos(2.0)).epsilon(1e-11));
}

TEST_CASE("TaylorJet arithmetic matches polynomial algebra") {
  TaylorJet x = TaylorJet::variable(2.0, 4);  // 2 + h
  TaylorJet p = x * x * x;                    // (2+h)^3
  CHECK(p[0] == doctest::Approx(8.0));
  CHECK(p[1] == doctest::Approx(12.0));
  CHECK(p[2] == doctest::Approx(6.0));
  CHECK(p[3] == doctest::Approx(1.0));
  CHECK(p[4] == doctest::Approx(0.0));
  CHECK(p.derivative(2) == doctest::Approx(12.0));  // (x^3)'' = 6x

  TaylorJet r = x.reciprocal();
  for (int k = 0; k <= 4; ++k)
    CHECK(r[k] == doctest::Approx(std::pow(-0.5, k) * 0.5).epsilon(1e-14));
  CHECK_THROWS_AS(TaylorJet(3).reciprocal(), numerical_fault);

  const double c[3] = {1.0, -2.0, 0.5};
  TaylorJet q = poly_eval_jet(std::span<const double>(c, 3), x);
  CHECK(q[0] == doctest::Approx(1.0 - 4.0 + 2.0));
  CHECK(q[1] == doctest::Approx(-2.0 + 2.0 * 0.5 * 2.0));
  CHECK(q[2] == doctest::Approx(0.5));
}

TEST_CASE("bisect finds a root and rejects a one-signed bracket") {
  double r = bisect([](double x) { return std::cos(x); }, 1.0, 2.0);
  CHECK(r == doctest::Approx(kPi / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(bisect([](double x) { return 1.0 + x * x; }, 0.0, 1.0),
                  numerical_fault);
}

TEST_CASE("fit_line recovers exact slope and intercept") {
  std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> y;
  for (double v : x) y.push_back(-1.7 * v + 0.4);
  LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(-1.7).epsilon(1e-14));
  CHECK(fit.intercept == doctest::Approx(0.4).epsilon(1e-13));
  std::vector<double> bad = {1.0};
  CHECK_THROWS_AS(fit_line(bad, bad), numerical_fault);
}

TEST_CASE("solve_dense handles a pivoting system and flags singularity") {
  // First pivot is zero, forcing a row swap.
  std::vector<double> a = {0.0, 2.0, 1.0,
                           1.0, 0.0, -1.0,
                           3.0, 1.0, 4.0};
  std::vector<double> b = {3.0, -2.0, 2.0};  // solution (-1, 1, 1)
  solve_dense(a, b, 3);
  CHECK(b[0] == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(b[2] == doctest::Approx(1.0).epsilon(1e-13));

  std::vector<double> s = {1.0, 2.0, 2.0, 4.0};
  std::vector<double> rhs = {1.0, 2.0};
  CHECK_THROWS_AS(solve_dense(s, rhs, 2), numerical_fault);
}

TEST_CASE("Lcg streams are deterministic and bounded") {
  Lcg a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Lcg c(7);
  for (int i = 0; i < 1000; ++i) {
    double u = c.uniform(-2.0, 5.0);
    CHECK(u >= -2.0);
    CHECK(u < 5.0);
  }
  // Seed zero is remapped, not a fixed point.
  Lcg z(0);
  CHECK(z.next() != 0);
}

TEST_CASE("parallel_for matches the serial fill") {
  const std::size_t n = 1000;
  std::vector<double> serial(n), parallel(n);
  auto body = [](std::vector<double>& out) {
    return [&out](std::size_t i) {
      out[i] = std::sqrt(static_cast<double>(i) + 0.25);
    };
  };
  parallel_for(n, 1, body(serial));
  parallel_for(n, 4, body(parallel));
  CHECK(serial == parallel);
}

TEST_CASE("resolve_thread_count prefers the request, then the environment") {
  CHECK(resolve_thread_count(3) == 3);
  unsetenv("BLOWUP_LAB_THREADS");
  CHECK(resolve_thread_count(0) == 1);
  setenv("BLOWUP_LAB_THREADS", "7", 1);
  CHECK(resolve_thread_count(0) == 7);
  CHECK(resolve_thread_count(2) == 2);
  unsetenv("BLOWUP_LAB_THREADS");
}
