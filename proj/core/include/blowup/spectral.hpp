#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "blowup/harmonic_map.hpp"
#include "blowup/numerics.hpp"

namespace blowup {

struct SpectralOptions {
  // Volterra series zone, in the even variable u = r^2.
  double u_min = 1e-9;
  double u_max = 4e6;
  int volterra_cells = 2048;
  int volterra_levels = 16;

  // Outgoing-wave symbol tables, in r.
  int psi_levels = 8;  // expansion order j0 in powers of xi^{-1/2}
  double psi_r_min = 0.05;
  double psi_r_max = 1e6;
  double psi_step = 0.02;  // log-r node spacing

  // Phase thresholds in q = r * sqrt(xi): the power series is trusted for
  // q <= q_series, the oscillatory expansion for q >= q_asym; an ODE leg
  // bridges the gap.
  double q_series = 1.0;
  double q_asym = 10.0;

  double ode_rtol = 1e-10;
  double ode_atol = 1e-14;
  int threads = 1;
  // Drops the potential (free half-line operator); every output then has a
  // Bessel closed form, which is what the oracle tests compare against.
  bool free_mode = false;
};

// Zero-energy fundamental pair of L = -d^2/dR^2 + (3/4 + R^2 V(R)) / R^2:
// phi0 = R^{3/2} Q'(R) vanishes at the origin, theta0 = phi0 * I grows,
// with I(R) = int_1^R phi0^{-2}; the pair is normalized so that
// W(phi0, theta0) = phi0 theta0' - phi0' theta0 = 1.
class FundamentalSystem {
 public:
  explicit FundamentalSystem(const HarmonicMap& hm, bool free_mode = false);

  bool free_mode() const { return free_; }
  const HarmonicMap& harmonic_map() const { return *hm_; }

  double phi0(double R) const;
  double phi0_prime(double R) const;
  double theta0(double R) const;
  double theta0_prime(double R) const;
  double I(double R) const;

  double V(double R) const;            // -(1 - f'(Q(R))) / R^2, finite at 0
  double potential_W(double R) const;  // -2 [ (1-f'(Q))/R^2 + f''(Q) Q'/R ]
  double P(double R) const { return 0.75 / (R * R) + V(R); }

  // The same data in u = R^2, as the Volterra iteration consumes it.
  double B(double u) const;   // Q'(sqrt u); B(0) = Q0
  double Bp(double u) const;  // dB/du
  double X(double u) const;   // u * I(sqrt u); X(0) = -1/(2 Q0^2)
  double Xp(double u) const;  // I(sqrt u) + 1/(2 g(Q)^2), cancellation at 0
  double X0() const { return x0_; }

 private:
  const HarmonicMap* hm_ = nullptr;
  bool free_ = false;
  HermiteTable itab_;  // I against s = log R
  double d_lo_ = 0.0, d_hi_ = 0.0;  // dI/ds at the table ends, for the tails
  double x0_ = 0.0;
};

// Iterates f~_0 = u B(u),
//   f~_j(u) = (1/2) B(u) [ u Rint_{j-1}(u) - X(u) Pint_{j-1}(u) ],
// with Pint_j = int_0^u B f~_j dv and Rint_j = int_0^u (B X / v) f~_j dv,
// which resums the regular solution phi(r, xi) as
//   phi = r^{-1/2} sum_j xi^j f~_j(r^2).
// Each iterate gains a power: f~_j = O(u^{j+1}) at 0 and O(u^j log u) at
// infinity. In free mode f~_j = (-1)^j u^{j+1} / (4^j j! (j+1)!) exactly.
class VolterraTables {
 public:
  VolterraTables(const FundamentalSystem& fs, const SpectralOptions& opt);

  int levels() const { return levels_; }
  double u_min() const { return u_min_; }
  double u_max() const { return u_max_; }

  double f_tilde(int j, double u) const;
  double df_tilde(int j, double u) const;  // d/du
  double phi_j(int j, double u) const;     // f~_j / u^j, vanishing linearly

  // sup over the grid of |phi_j| / log(1 + u), and the growth constant C of
  // the envelope model |phi_j| <= C2 C^j / (j-1)! log(1+u), fit over levels.
  double envelope(int j) const;
  double fitted_growth_constant() const;

 private:
  int levels_ = 0;
  double u_min_ = 0.0, u_max_ = 0.0, x0_ = 0.0, dx_ = 0.0;
  std::vector<Lagrange6Table> val_, der_;    // against x = log u
  std::vector<std::vector<double>> raw_;     // node values per level
  std::vector<double> head_;                 // f~_j(u_min)
};

// Nodewise coefficients f_j(r) of the outgoing solution
//   psi+(r, xi) = xi^{-1/4} e^{i r sqrt(xi)} sum_{j<=j0} xi^{-j/2} f_j(r),
// built by the descending cascade
//   f_j = (i/2) f_{j-1}' + (i/2) int_r^inf w f_{j-1},  w = 3/(4 r^2) + V,
// carrying enough r-derivatives at each level to seed the next one.
class PsiTables {
 public:
  PsiTables(const FundamentalSystem& fs, const SpectralOptions& opt);

  int levels() const { return levels_; }
  double r_min() const { return r_lo_; }
  double r_max() const { return r_hi_; }

  // Power-law continuation f_j ~ f_j(r_max) (r_max/r)^j applies beyond the
  // table; below it is an error.
  std::complex<double> f(int j, double r) const;
  std::complex<double> df(int j, double r) const;

 private:
  int levels_ = 0;
  double x0_ = 0.0, dx_ = 0.0, r_lo_ = 0.0, r_hi_ = 0.0;
  // Per level: value and first-derivative Hermite tables, split re/im.
  std::vector<HermiteTable> vre_, vim_, dre_, dim_;
  std::vector<std::complex<double>> f_end_;
};

struct MeasureSample {
  double xi = 0.0;
  std::complex<double> a;  // -(i/2) W(phi, psi-), psi- = conj(psi+)
  double rho = 0.0;        // 1 / (4 pi |a|^2)
  double drift = 0.0;      // relative Wronskian change between the two radii
};

struct PhiRow {
  std::vector<double> phi, dphi;        // value and d/dr at the nodes
  std::vector<double> phi_xi, dphi_xi;  // d/dxi pair, when requested
};

// Everything spectral for one target surface: generalized eigenfunctions,
// the outgoing pair, the scattering coefficient a(xi) and density rho(xi).
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const HarmonicMap& hm, SpectralOptions opt = {});

  const SpectralOptions& options() const { return opt_; }
  const HarmonicMap& harmonic_map() const { return hm_; }
  const FundamentalSystem& system() const { return fs_; }
  const VolterraTables& volterra() const { return volterra_; }

  // Regular solution, series inside q <= q_series and ODE continuation
  // beyond; nodes must be positive and ascending.
  PhiRow phi_row(std::span<const double> r_nodes, double xi,
                 bool with_xi_derivative = false) const;
  double phi(double r, double xi) const;
  void phi_state(double r, double xi, double* value, double* deriv) const;

  // Outgoing solution; direct expansion for q >= q_asym, inward ODE
  // continuation for smaller radii (nodes ascending).
  void psi_state(double r, double xi, std::complex<double>* value,
                 std::complex<double>* deriv) const;
  std::vector<std::complex<double>> psi_row(std::span<const double> r_nodes,
                                            double xi,
                                            std::vector<std::complex<double>>* deriv
                                            = nullptr) const;

  MeasureSample measure_point(double xi) const;
  double rho(double xi) const { return measure_point(xi).rho; }
  std::vector<MeasureSample> measure_grid(std::span<const double> xi,
                                          int threads = 0) const;

 private:
  double series_radius(double xi) const;
  void phi_series(double r, double xi, bool with_xi, double* out) const;

  HarmonicMap hm_;  // private copy; members below point into it
  SpectralOptions opt_;
  FundamentalSystem fs_;
  VolterraTables volterra_;
  PsiTables psi_;
};

// Distorted Hankel transform plan on [r_lo, r_hi] x xi_grid: composite
// Gauss-Legendre in r, trapezoid in log xi with a fitted
// rho ~ C / (xi (log xi + kappa)^2) continuation below the grid.
class TransformPlan {
 public:
  TransformPlan(const SpectralWorkspace& ws, double r_lo, double r_hi,
                std::span<const double> xi_grid, int threads = 0);

  const std::vector<double>& r_nodes() const { return rn_; }
  const std::vector<double>& r_weights() const { return rw_; }
  const std::vector<double>& xi_grid() const { return xi_; }
  const std::vector<double>& rho() const { return rho_; }
  double tail_C() const { return tail_c_; }
  double tail_kappa() const { return tail_kappa_; }

  std::vector<double> forward(const std::function<double(double)>& f) const;
  std::vector<double> forward(std::span<const double> f_on_nodes) const;
  // int f^2 dr and int fhat^2 rho dxi (with the small-xi tail model).
  double integral_sq(std::span<const double> f_on_nodes) const;
  double plancherel_sq(std::span<const double> fhat) const;
  std::vector<double> inverse_on_nodes(std::span<const double> fhat) const;

 private:
  const SpectralWorkspace* ws_;
  std::vector<double> rn_, rw_, xi_, xiw_, rho_;
  std::vector<std::vector<double>> phi_;  // [xi][r node]
  double tail_c_ = 0.0, tail_kappa_ = 0.0;
};

}  // namespace blowup
