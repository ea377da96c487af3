#include <cmath>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/transference.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

const SpectralWorkspace& sphere_ws() {
  static SpectralWorkspace ws(solve_harmonic_map(SurfaceProfile::sphere()));
  return ws;
}

TransferenceOptions fast_opts() {
  TransferenceOptions opt;
  opt.r_cut = 400.0;  // plenty for agreement checks at this grid scale
  return opt;
}

const KernelTable& small_table() {
  static KernelTable table(sphere_ws(), logspace(0.05, 5.0, 6), fast_opts());
  return table;
}

}  // namespace

TEST_CASE("kernel table echoes its grid and stays symmetric") {
  const KernelTable& t = small_table();
  REQUIRE(t.size() == 6);
  CHECK(t.grid().front() == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(t.xi(5) == doctest::Approx(5.0).epsilon(1e-14));
  // Rows are filled forward above the diagonal and backward below it, so
  // this measures genuine accumulation noise.
  CHECK(t.symmetry_defect() <= 1e-8);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.rho(i) > 0.0);
}

TEST_CASE("table entries agree with the single-pair integral") {
  const KernelTable& t = small_table();
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 4}, {1, 5}}) {
    // The standalone path sizes its own mesh, so agreement is a quadrature
    // convergence statement, not an identity.
    double direct = transference_F(sphere_ws(), t.xi(i), t.xi(j), fast_opts());
    CHECK(t.F(i, j) == doctest::Approx(direct).epsilon(1e-6));
  }
}

TEST_CASE("off-diagonal kernel divides by the spectral gap") {
  const KernelTable& t = small_table();
  CHECK_FALSE(t.in_band(0, 4));
  CHECK(t.in_band(2, 2));
  CHECK(t.in_band(2, 3));
  double expect = t.rho(0) * t.F(0, 4) / (t.xi(0) - t.xi(4));
  CHECK(t.K0(0, 4) == doctest::Approx(expect).epsilon(1e-13));
  CHECK_THROWS_AS(t.K0(2, 2), numerical_fault);
  CHECK_THROWS_AS(t.K0(2, 3), numerical_fault);
  CHECK_THROWS_WITH_AS(t.K0(3, 2),
                       doctest::Contains("diagonal band"), numerical_fault);
}

TEST_CASE("diagonal coefficient is centered, so the edges are undefined") {
  const KernelTable& t = small_table();
  CHECK_THROWS_AS(t.diag_coefficient(0), numerical_fault);
  CHECK_THROWS_AS(t.diag_coefficient(t.size() - 1), numerical_fault);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    double d = t.diag_coefficient(i);
    CHECK(std::isfinite(d));
    // Between the small-eta limit -1/2 and the large-eta limit -5/2.
    CHECK(d < -0.2);
    CHECK(d > -3.5);
  }
}

TEST_CASE("free mode has no pairing weight at all") {
  SpectralOptions sopt;
  sopt.free_mode = true;
  SpectralWorkspace free_ws(sphere_ws().harmonic_map(), sopt);
  KernelTable t(free_ws, logspace(0.1, 2.0, 4), fast_opts());
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j)
      CHECK(t.F(i, j) == 0.0);
  CHECK(t.symmetry_defect() == 0.0);
}

TEST_CASE("eta derivative of the pairing matches finite differences") {
  const double xi = 0.8, eta = 2.4, rel = 1e-5;
  double d = transference_dFdeta(sphere_ws(), xi, eta, fast_opts());
  double hi = transference_F(sphere_ws(), xi, eta * (1.0 + rel), fast_opts());
  double lo = transference_F(sphere_ws(), xi, eta * (1.0 - rel), fast_opts());
  CHECK(d == doctest::Approx((hi - lo) / (2.0 * rel * eta)).epsilon(1e-4));
}

TEST_CASE("grids must be positive, ascending, and long enough") {
  std::vector<double> decreasing = {2.0, 1.0, 0.5};
  CHECK_THROWS_AS(KernelTable(sphere_ws(), decreasing, fast_opts()),
                  numerical_fault);
  std::vector<double> negative = {-1.0, 1.0};
  CHECK_THROWS_AS(KernelTable(sphere_ws(), negative, fast_opts()),
                  numerical_fault);
  std::vector<double> empty;
  CHECK_THROWS_AS(KernelTable(sphere_ws(), empty, fast_opts()),
                  numerical_fault);
}
