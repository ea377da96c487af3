#pragma once

#include <cstddef>
#include <vector>

#include "blowup/surface.hpp"

namespace blowup {

// The equivariant harmonic map profile: dQ/ds = g(Q) in s = log r with the
// normalization Q(1) = 1 (so the target must satisfy rho_M > 1).
//
// Q is tabulated on a uniform s-grid. Past the point where Q crosses
// 0.75 * rho_M the solve continues in the fall-off variable y = rho_M - Q
// (integrated as z = e^s y, which is asymptotically constant), so far-field
// quantities such as r^2 Q' keep full relative accuracy; Q itself would
// drown their increments in rounding at the top of the grid.
class HarmonicMap {
 public:
  const SurfaceProfile& surface() const { return surf_; }
  double s_min() const { return s0_; }
  double s_max() const { return node_s(n_ - 1); }
  double ds() const { return ds_; }
  double switch_s() const { return node_s(i_switch_); }

  double Q(double r) const;
  double Qprime(double r) const;   // g(Q)/r, the first-order relation
  double Qsecond(double r) const;  // -g(Q) (1 - g'(Q)) / r^2
  double g_of_Q(double r) const;
  double one_minus_g1_of_Q(double r) const;  // 1 - g'(Q(r))
  double one_plus_g1_of_Q(double r) const;   // 1 + g'(Q(r)), small at infinity
  double rhoM_minus_Q(double r) const;       // y(r), relatively accurate

  double Q0() const { return q_origin_; }        // lim_{r->0} Q / r
  double Qtilde0() const { return q_infinity_; }  // lim r (rho_M - Q)

  // Coefficients q_m of the odd expansion Q = sum_m q_m r^{2m+1} at 0.
  std::vector<double> q_series(int terms) const;
  // Truncated Taylor expansion of Q about r0 > 0.
  TaylorJet Q_jet(double r0, int order) const;

  // Energy of the static map over r <= r_max (infinite r_max allowed).
  double energy(double r_max) const;

  std::size_t nodes() const { return n_; }
  double node_s(std::size_t i) const { return s0_ + ds_ * static_cast<double>(i); }
  double node_r(std::size_t i) const;
  // r^2 Q' and Q' at the nodes, assembled from the stored variables so that
  // neighbor-to-neighbor increments are meaningful down to rounding scale.
  double node_r2_qprime(std::size_t i) const;
  double node_qprime(std::size_t i) const;

 private:
  friend HarmonicMap solve_harmonic_map(const SurfaceProfile&, double, double,
                                        double);
  explicit HarmonicMap(SurfaceProfile surface) : surf_(std::move(surface)) {}

  bool in_tail_chart(double s) const;

  SurfaceProfile surf_;
  double s0_ = 0.0, ds_ = 0.0;
  std::size_t n_ = 0, i_switch_ = 0;
  HermiteTable table_q_;  // Q on [s_min, switch_s]
  HermiteTable table_y_;  // y on [switch_s, s_max]
  std::vector<double> z_;  // e^s y at nodes i >= i_switch_
  double q_origin_ = 0.0, q_infinity_ = 0.0;
  double tail_a_ = 0.0, tail_b_ = 0.0;  // z ~ qt0 + a e^-s + b e^-2s
  std::vector<double> q_low_;           // origin series used below s_min
};

HarmonicMap solve_harmonic_map(const SurfaceProfile& surface,
                               double s_min = -14.0, double s_max = 14.0,
                               double tol = 1e-13);

}  // namespace blowup
