#include "blowup/harmonic_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

constexpr double kGridStep = 1.0 / 64.0;
constexpr double kSwitchFraction = 0.75;

// Truncated product of power series (same length).
std::vector<double> mul_trunc(const std::vector<double>& a,
                              const std::vector<double>& b) {
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; i + j < a.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// Horner composition P(S) for a zero-constant inner series S.
std::vector<double> compose_trunc(std::span<const double> outer,
                                  const std::vector<double>& s) {
  std::vector<double> acc(s.size(), 0.0);
  for (std::size_t k = outer.size(); k-- > 0;) {
    acc = mul_trunc(acc, s);
    acc[0] += outer[k];
  }
  return acc;
}

}  // namespace

bool HarmonicMap::in_tail_chart(double s) const { return s >= switch_s(); }

double HarmonicMap::node_r(std::size_t i) const { return std::exp(node_s(i)); }

double HarmonicMap::Q(double r) const {
  if (r == 0.0) return 0.0;
  if (!(r > 0.0)) throw numerical_fault("harmonic map: Q needs r >= 0");
  const double s = std::log(r);
  if (s < s0_) {
    double acc = 0.0;
    const double u = r * r;
    for (std::size_t k = q_low_.size(); k-- > 0;) acc = acc * u + q_low_[k];
    return r * acc;
  }
  if (s > s_max()) return surf_.rho_M() - rhoM_minus_Q(r);
  if (s <= switch_s()) return table_q_(s);
  return surf_.rho_M() - table_y_(s);
}

double HarmonicMap::rhoM_minus_Q(double r) const {
  if (!(r > 0.0)) return surf_.rho_M();
  const double s = std::log(r);
  if (s > s_max()) {
    const double es = std::exp(-s);
    return es * (q_infinity_ + es * (tail_a_ + es * tail_b_));
  }
  if (s >= switch_s()) return table_y_(s);
  return surf_.rho_M() - Q(r);
}

double HarmonicMap::g_of_Q(double r) const {
  if (r == 0.0) return 0.0;
  const double s = std::log(r);
  if (s >= switch_s()) return surf_.g_reflected(rhoM_minus_Q(r));
  return surf_.g(Q(r));
}

double HarmonicMap::one_minus_g1_of_Q(double r) const {
  if (r == 0.0) return 0.0;
  const double s = std::log(r);
  if (s >= switch_s()) return 1.0 + surf_.g1_reflected(rhoM_minus_Q(r));
  return surf_.one_minus_g1(Q(r));
}

double HarmonicMap::one_plus_g1_of_Q(double r) const {
  if (r == 0.0) return 2.0;
  const double s = std::log(r);
  if (s >= switch_s()) return surf_.one_minus_g1_reflected(rhoM_minus_Q(r));
  return 1.0 + surf_.g1(Q(r));
}

double HarmonicMap::Qprime(double r) const {
  if (!(r > 0.0)) throw numerical_fault("harmonic map: Q' needs r > 0");
  return g_of_Q(r) / r;
}

double HarmonicMap::Qsecond(double r) const {
  if (!(r > 0.0)) throw numerical_fault("harmonic map: Q'' needs r > 0");
  return -g_of_Q(r) * one_minus_g1_of_Q(r) / (r * r);
}

double HarmonicMap::node_r2_qprime(std::size_t i) const {
  if (i < i_switch_) {
    const double q = table_q_.node_value(i);
    return std::exp(node_s(i)) * surf_.g(q);
  }
  // e^s gt(y) = e_1 z + e^s (gt(y) - e_1 y): both parts carry full relative
  // accuracy, so adjacent increments survive down to ~1e-13.
  const double e1 = surf_.series_reflected()[0];
  const double y = table_y_.node_value(i - i_switch_);
  return e1 * z_[i - i_switch_] +
         std::exp(node_s(i)) * surf_.g_reflected_tail(y);
}

double HarmonicMap::node_qprime(std::size_t i) const {
  const double g = (i < i_switch_)
                       ? surf_.g(table_q_.node_value(i))
                       : surf_.g_reflected(table_y_.node_value(i - i_switch_));
  return std::exp(-node_s(i)) * g;
}

std::vector<double> HarmonicMap::q_series(int terms) const {
  if (terms < 1) throw numerical_fault("q_series: terms must be >= 1");
  const auto T = static_cast<std::size_t>(terms);
  std::vector<double> q(T, 0.0);
  q[0] = q_origin_;
  const double g0 = surf_.series_g()[0];
  for (std::size_t m = 1; m < T; ++m) {
    // S = v * A(v)^2 is Q^2 in v = r^2; H = [A G(S)]_m uses only q_{<m}.
    std::vector<double> a(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(m));
    a.resize(m + 1, 0.0);
    std::vector<double> s = mul_trunc(a, a);
    s.insert(s.begin(), 0.0);
    s.resize(m + 1);
    const std::vector<double> h = mul_trunc(a, compose_trunc(surf_.series_g(), s));
    q[m] = h[m] / (2.0 * static_cast<double>(m) + 1.0 - g0);
  }
  return q;
}

TaylorJet HarmonicMap::Q_jet(double r0, int order) const {
  if (!(r0 > 0.0)) throw numerical_fault("Q_jet: r0 must be positive");
  TaylorJet qj = TaylorJet::constant(Q(r0), order);
  for (int k = 0; k < order; ++k) {
    const TaylorJet gq = surf_.g_jet(qj);
    qj[k + 1] = (gq[k] - static_cast<double>(k) * qj[k]) /
                (r0 * (static_cast<double>(k) + 1.0));
  }
  return qj;
}

double HarmonicMap::energy(double r_max) const {
  if (!(r_max > 0.0)) throw numerical_fault("energy: r_max must be positive");
  const double s_hi_req =
      std::isinf(r_max) ? std::numeric_limits<double>::infinity()
                        : std::log(r_max);
  const double e1 = surf_.series_reflected()[0];

  if (s_hi_req <= s0_) {
    // Entirely inside the origin series zone: g(Q)^2 ~ (q0 r)^2.
    const double r2 = std::exp(2.0 * s_hi_req);
    return 0.5 * q_origin_ * q_origin_ * r2;
  }

  double total = 0.5 * q_origin_ * q_origin_ * std::exp(2.0 * s0_);
  const double s_top = std::min(s_hi_req, s_max());
  const int cells = std::max(1, static_cast<int>((s_top - s0_) / ds_) + 1);
  total += integrate_gl_cells(
      [this](double s) {
        const double v = g_of_Q(std::exp(s));
        return v * v;
      },
      s0_, s_top, cells, 8);
  if (s_hi_req > s_max()) {
    const double amp = e1 * q_infinity_;
    const double upper =
        std::isinf(s_hi_req) ? 0.0 : std::exp(-2.0 * s_hi_req);
    total += 0.5 * amp * amp * (std::exp(-2.0 * s_max()) - upper);
  }
  return total;
}

HarmonicMap solve_harmonic_map(const SurfaceProfile& surface, double s_min,
                               double s_max, double tol) {
  if (surface.rho_M() <= 1.0)
    throw invalid_profile_error(
        "harmonic map: normalization Q(1) = 1 needs rho_M > 1");
  if (!(s_min <= -5.0) || !(s_max >= 5.0))
    throw numerical_fault("harmonic map: grid must cover at least [-5, 5]");
  if (!(tol > 0.0) || tol > 1e-6)
    throw numerical_fault("harmonic map: tolerance out of range");

  HarmonicMap hm(surface);
  hm.ds_ = kGridStep;
  const auto n_lo = static_cast<std::size_t>(std::ceil(-s_min / kGridStep - 1e-9));
  const auto n_hi = static_cast<std::size_t>(std::ceil(s_max / kGridStep - 1e-9));
  hm.s0_ = -kGridStep * static_cast<double>(n_lo);
  hm.n_ = n_lo + n_hi + 1;

  const double rho_m = surface.rho_M();
  const double e1 = surface.series_reflected()[0];
  const double q_switch = kSwitchFraction * rho_m;

  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = 0.0;

  const OdeRhs rhs_q = [&surface](double, const double* y, double* dy) {
    dy[0] = surface.g(y[0]);
  };
  const OdeRhs rhs_z = [&surface, e1](double s, const double* y, double* dy) {
    const double es = std::exp(s);
    dy[0] = (1.0 - e1) * y[0] - es * surface.g_reflected_tail(y[0] / es);
  };

  std::vector<double> qv(hm.n_, 0.0);
  // Downward sweep in Q.
  {
    double state = 1.0;
    qv[n_lo] = state;
    for (std::size_t i = n_lo; i-- > 0;) {
      ode_integrate(rhs_q, 1, hm.node_s(i + 1), hm.node_s(i), &state, opt);
      qv[i] = state;
    }
  }
  // Upward sweep, switching to z = e^s (rho_M - Q) once Q clears the knee.
  std::size_t i_switch = hm.n_;
  std::vector<double> yv, zv;
  {
    double state = 1.0;
    if (state > q_switch) i_switch = n_lo;
    for (std::size_t i = n_lo + 1; i < hm.n_ && i_switch == hm.n_; ++i) {
      ode_integrate(rhs_q, 1, hm.node_s(i - 1), hm.node_s(i), &state, opt);
      qv[i] = state;
      if (state > q_switch) i_switch = i;
    }
    if (i_switch == hm.n_)
      throw numerical_fault(
          "harmonic map: Q never clears 0.75 rho_M inside the grid; raise "
          "s_max");
    if (hm.node_s(i_switch) > s_max - 4.0 + 1e-12)
      throw numerical_fault(
          "harmonic map: less than four e-folds past the switch point; raise "
          "s_max");
    const std::size_t m = hm.n_ - i_switch;
    yv.resize(m);
    zv.resize(m);
    double z = std::exp(hm.node_s(i_switch)) * (rho_m - qv[i_switch]);
    zv[0] = z;
    yv[0] = z * std::exp(-hm.node_s(i_switch));
    for (std::size_t j = 1; j < m; ++j) {
      ode_integrate(rhs_z, 1, hm.node_s(i_switch + j - 1),
                    hm.node_s(i_switch + j), &z, opt);
      zv[j] = z;
      yv[j] = z * std::exp(-hm.node_s(i_switch + j));
    }
  }
  hm.i_switch_ = i_switch;
  hm.z_ = zv;

  // Tables with exact node slopes.
  {
    std::vector<double> q(qv.begin(), qv.begin() + static_cast<std::ptrdiff_t>(i_switch) + 1);
    q[i_switch] = rho_m - yv[0];
    std::vector<double> dq(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) dq[i] = surface.g(q[i]);
    hm.table_q_ = HermiteTable(hm.s0_, hm.ds_, std::move(q), std::move(dq));

    std::vector<double> dy(yv.size());
    for (std::size_t j = 0; j < yv.size(); ++j)
      dy[j] = -surface.g_reflected(yv[j]);
    hm.table_y_ =
        HermiteTable(hm.node_s(i_switch), hm.ds_, yv, std::move(dy));
  }

  // Endpoint extraction by three-point fits against the exact fall-off basis.
  const auto fit3 = [](const double xs[3], const double vals[3], double out[3]) {
    std::vector<double> a(9), b(3);
    for (int r = 0; r < 3; ++r) {
      a[static_cast<std::size_t>(3 * r)] = 1.0;
      a[static_cast<std::size_t>(3 * r + 1)] = xs[r];
      a[static_cast<std::size_t>(3 * r + 2)] = xs[r] * xs[r];
      b[static_cast<std::size_t>(r)] = vals[r];
    }
    solve_dense(a, b, 3);
    out[0] = b[0];
    out[1] = b[1];
    out[2] = b[2];
  };
  const auto steps2 = static_cast<std::size_t>(std::round(2.0 / kGridStep));
  {
    // Q / r = q0 + A e^{2s} + B e^{4s} near the bottom.
    double xs[3], vals[3], c[3];
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = static_cast<std::size_t>(k) * steps2;
      const double s = hm.node_s(i);
      xs[k] = std::exp(2.0 * (s - hm.s0_));
      vals[k] = qv[i] * std::exp(-s);
    }
    fit3(xs, vals, c);
    hm.q_origin_ = c[0];
  }
  {
    // z = qt0 + a e^{-s} + b e^{-2s} near the top.
    double xs[3], vals[3], c[3];
    const double s_end = hm.node_s(hm.n_ - 1);
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = hm.n_ - 1 - static_cast<std::size_t>(k) * steps2;
      const double s = hm.node_s(i);
      xs[k] = std::exp(-(s - s_end));
      vals[k] = zv[i - i_switch];
    }
    fit3(xs, vals, c);
    hm.q_infinity_ = c[0];
    hm.tail_a_ = c[1] * std::exp(-s_end);
    hm.tail_b_ = c[2] * std::exp(-2.0 * s_end);
  }
  hm.q_low_ = hm.q_series(3);
  return hm;
}

}  // namespace blowup
