#pragma once

#include <cmath>

#include "blowup/harmonic_map.hpp"
#include "blowup/spectral.hpp"

namespace blowup {

struct CorrectorOptions {
  double R_base = 0.2;   // series seeding radius for the integral constants
  double R_match = 0.5;  // series below, variation of parameters above
  double R_top = 2.0e4;
  int series_terms = 40;
  double ds = 1.0 / 96.0;
  double tol = 1e-11;
};

// Blow-up family u0(t, r) = Q(lambda r), lambda = t^{-1-nu}, together with
// the first corrector: u1 = u0 + t^{2 nu} w(lambda r) where
//   L w = w'' + w'/R - f'(Q) w / R^2 = Phi,   Phi(R) = -t^2 e0,
// so the corrector kills the leading error of u0 inside the light cone.
//
// w is carried two ways that are cross-checked at R_match: the even series
// w = sum_k V_k R^{2k+1} with
//   ((2k+1)^2 - 1) V_k = Phi_{k-1} + sum_{l>=1} f_l V_{k-l},
// and variation of parameters w = (theta0 A - phi0 B)/sqrt(R) with
//   A(R) = int_0^R phi0 sqrt(S) Phi dS,  B(R) = int_0^R theta0 sqrt(S) Phi dS,
// seeded exactly from the series at R_base.
class BlowupProfile {
 public:
  BlowupProfile(const HarmonicMap& hm, double nu, CorrectorOptions opt = {});

  double nu() const { return nu_; }
  double lambda(double t) const { return std::pow(t, -1.0 - nu_); }
  const HarmonicMap& harmonic_map() const { return hm_; }
  const CorrectorOptions& options() const { return opt_; }

  double Phi(double R) const;  // -t^2 e0 as a function of R = lambda r
  double w(double R) const;
  double w_prime(double R) const;
  double w_second(double R) const;
  double V1() const { return v_[1]; }  // w ~ V1 R^3 at the origin

  // L w - Phi, which only interpolation noise keeps from vanishing.
  double corrector_residual(double R) const;

  double u0(double t, double r) const;
  double u0_t(double t, double r) const;
  double u1(double t, double r) const;
  double u1_t(double t, double r) const;

  double e0(double t, double r) const;
  // Structured form: the pieces that cancel algebraically are removed
  // before evaluation, leaving -t^{2nu-2} [C1 w + C2 R w' + C3 R^2 w'']
  // minus the quadratic Taylor remainder of the nonlinearity.
  double e1(double t, double r) const;
  // Term-by-term assembly of -u_tt + u_rr + u_r/r - f(u)/r^2 for u = u1;
  // agrees with e1 up to the cancellation it does not perform.
  double e1_raw(double t, double r) const;

  // sup over 0 < r <= t/2 of |t^2 e| on a fixed geometric sample set.
  double sup_t2e0(double t) const;
  double sup_t2e1(double t) const;

  // Energy of u0(t, .) over the backward cone r < t.
  double local_energy_u0(double t) const;

 private:
  double w_series(double R, int deriv) const;
  double w_vop(double R, int deriv) const;
  double nonlinear_remainder(double R, double delta) const;

  HarmonicMap hm_;
  double nu_ = 0.0;
  CorrectorOptions opt_;
  FundamentalSystem fs_;
  std::vector<double> v_;     // V_k, index k (v_[0] unused)
  std::vector<double> omega_; // w = R^3 sum omega_m R^{2m}
  HermiteTable atab_, btab_;  // A, B against s = log R
};

}  // namespace blowup
