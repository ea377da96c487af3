#include "blowup/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/numerics.hpp"

namespace blowup {

namespace {

// Truncated products/compositions of even series; all series share the
// truncation length of the output.
std::vector<double> mul_trunc(const std::vector<double>& a,
                              const std::vector<double>& b, std::size_t n) {
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < std::min(a.size(), n); ++i)
    for (std::size_t j = 0; i + j < n && j < b.size(); ++j)
      c[i + j] += a[i] * b[j];
  return c;
}

// outer(inner(u)) for inner with zero constant term, Horner in series form.
std::vector<double> compose_trunc(std::span<const double> outer,
                                  const std::vector<double>& inner,
                                  std::size_t n) {
  std::vector<double> res(n, 0.0);
  if (outer.empty()) return res;
  res[0] = outer[outer.size() - 1];
  for (std::size_t k = outer.size() - 1; k-- > 0;) {
    res = mul_trunc(res, inner, n);
    res[0] += outer[k];
  }
  return res;
}

double horner_even(const std::vector<double>& c, double u) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * u + c[k];
  return acc;
}

std::vector<double> series_derivative(const std::vector<double>& c) {
  std::vector<double> d(c.size() > 1 ? c.size() - 1 : 1, 0.0);
  for (std::size_t m = 1; m < c.size(); ++m)
    d[m - 1] = static_cast<double>(m) * c[m];
  return d;
}

}  // namespace

BlowupProfile::BlowupProfile(const HarmonicMap& hm, double nu,
                             CorrectorOptions opt)
    : hm_(hm), nu_(nu), opt_(opt), fs_(hm_, false) {
  if (!(nu_ > 0.5))
    throw invalid_profile_error("profile: nu must exceed 1/2");
  if (!(opt_.R_base > 0.0) || !(opt_.R_match > opt_.R_base) ||
      !(opt_.R_top > 4.0 * opt_.R_match) || opt_.series_terms < 8 ||
      !(opt_.tol > 0.0))
    throw numerical_fault("corrector: degenerate options");

  // Origin series. Q = R * Aq(R^2), S = Q^2 as an even series, and
  // f'(Q) - 1 = (F(S) - 1) + 2 S F'(S) feeds the V_k recursion.
  const auto K = static_cast<std::size_t>(opt_.series_terms);
  const std::vector<double> q = hm_.q_series(opt_.series_terms);
  std::vector<double> a2 = mul_trunc(q, q, K);
  std::vector<double> s(K, 0.0);
  for (std::size_t m = 1; m < K; ++m) s[m] = a2[m - 1];

  const std::span<const double> cf = hm_.surface().series_f();
  std::vector<double> fp(cf.size() > 1 ? cf.size() - 1 : 1, 0.0);
  for (std::size_t k = 1; k < cf.size(); ++k)
    fp[k - 1] = static_cast<double>(k) * cf[k];
  std::vector<double> fs_series = compose_trunc(cf, s, K);
  const std::vector<double> fps = compose_trunc(fp, s, K);
  const std::vector<double> sfp = mul_trunc(s, fps, K);
  std::vector<double> fl(K, 0.0);  // f'(Q) - 1 = sum_{l>=1} fl[l] R^{2l}
  for (std::size_t l = 1; l < K; ++l) fl[l] = fs_series[l] + 2.0 * sfp[l];

  std::vector<double> phi_m(K, 0.0);
  for (std::size_t m = 0; m < K; ++m)
    phi_m[m] = (2.0 * m + 1.0) * q[m] * (1.0 + nu_) *
               ((2.0 + nu_) + 2.0 * m * (1.0 + nu_));

  v_.assign(K + 1, 0.0);
  for (std::size_t k = 1; k <= K; ++k) {
    double rhs = phi_m[k - 1];
    for (std::size_t l = 1; l < k; ++l) rhs += fl[l] * v_[k - l];
    v_[k] = rhs / (4.0 * k * (k + 1.0));
  }
  omega_.assign(K, 0.0);
  for (std::size_t k = 1; k <= K; ++k) omega_[k - 1] = v_[k];

  // A and B against s = log R, slopes exact, seeded from the series so the
  // pair continues the same solution.
  const double s0 = std::log(opt_.R_base);
  const auto n = static_cast<std::size_t>(
                     std::ceil((std::log(opt_.R_top) - s0) / opt_.ds)) + 1;
  const double wb = w_series(opt_.R_base, 0), wb1 = w_series(opt_.R_base, 1);
  const double sq = std::sqrt(opt_.R_base);
  const double vb = sq * wb, vb1 = 0.5 * wb / sq + sq * wb1;
  const double a_base = fs_.phi0(opt_.R_base) * vb1 - fs_.phi0_prime(opt_.R_base) * vb;
  const double b_base = fs_.theta0(opt_.R_base) * vb1 - fs_.theta0_prime(opt_.R_base) * vb;
  const OdeOptions oopt{opt_.tol, 1e-13, 0.0, 4'000'000};
  atab_ = cumulative_table(
      [this](double sv) {
        const double R = std::exp(sv);
        return R * std::sqrt(R) * fs_.phi0(R) * Phi(R);
      },
      s0, opt_.ds, n, a_base, oopt);
  btab_ = cumulative_table(
      [this](double sv) {
        const double R = std::exp(sv);
        return R * std::sqrt(R) * fs_.theta0(R) * Phi(R);
      },
      s0, opt_.ds, n, b_base, oopt);

  // The two representations must agree where both are trusted.
  for (int d = 0; d <= 1; ++d) {
    const double lhs = w_series(opt_.R_match, d), rhs = w_vop(opt_.R_match, d);
    const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-30);
    if (!(rel <= 100.0 * opt_.tol)) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "corrector: branch mismatch %.3g in derivative %d at "
                    "R_match = %.3g",
                    rel, d, opt_.R_match);
      throw numerical_fault(buf);
    }
  }
}

double BlowupProfile::Phi(double R) const {
  const double g = hm_.g_of_Q(R);
  const double omg = hm_.one_minus_g1_of_Q(R);
  return (1.0 + nu_) * g * ((2.0 + nu_) - (1.0 + nu_) * omg);
}

double BlowupProfile::w_series(double R, int deriv) const {
  const double u = R * R;
  const double om = horner_even(omega_, u);
  if (deriv == 0) return R * u * om;
  const std::vector<double> o1 = series_derivative(omega_);
  if (deriv == 1) return 3.0 * u * om + 2.0 * u * u * horner_even(o1, u);
  const std::vector<double> o2 = series_derivative(o1);
  return 6.0 * R * om + 14.0 * R * u * horner_even(o1, u) +
         4.0 * R * u * u * horner_even(o2, u);
}

double BlowupProfile::w_vop(double R, int deriv) const {
  const double s = std::log(R);
  if (s > atab_.x_max() + 1e-12)
    throw numerical_fault("corrector: R beyond the tabulated range");
  const double a = atab_(s), b = btab_(s);
  const double p0 = fs_.phi0(R), t0 = fs_.theta0(R);
  const double up = t0 * a - p0 * b;
  const double sq = std::sqrt(R);
  if (deriv == 0) return up / sq;
  const double up1 = fs_.theta0_prime(R) * a - fs_.phi0_prime(R) * b;
  if (deriv == 1) return up1 / sq - 0.5 * up / (R * sq);
  const double up2 = fs_.P(R) * up + sq * Phi(R);
  return 0.75 * up / (R * R * sq) - up1 / (R * sq) + up2 / sq;
}

double BlowupProfile::w(double R) const {
  return R <= opt_.R_match ? w_series(R, 0) : w_vop(R, 0);
}
double BlowupProfile::w_prime(double R) const {
  return R <= opt_.R_match ? w_series(R, 1) : w_vop(R, 1);
}
double BlowupProfile::w_second(double R) const {
  return R <= opt_.R_match ? w_series(R, 2) : w_vop(R, 2);
}

double BlowupProfile::corrector_residual(double R) const {
  const double omf = hm_.surface().one_minus_f1(hm_.Q(R));
  const double lw = w_second(R) + w_prime(R) / R -
                    (1.0 - omf) * w(R) / (R * R);
  return lw - Phi(R);
}

double BlowupProfile::u0(double t, double r) const { return hm_.Q(lambda(t) * r); }

double BlowupProfile::u0_t(double t, double r) const {
  const double R = lambda(t) * r;
  return -(1.0 + nu_) * (R / t) * hm_.Qprime(R);
}

double BlowupProfile::u1(double t, double r) const {
  const double R = lambda(t) * r;
  return hm_.Q(R) + std::pow(t, 2.0 * nu_) * w(R);
}

double BlowupProfile::u1_t(double t, double r) const {
  const double R = lambda(t) * r;
  const double t2n = std::pow(t, 2.0 * nu_);
  return -(1.0 + nu_) * (R / t) * (hm_.Qprime(R) + t2n * w_prime(R)) +
         2.0 * nu_ * t2n / t * w(R);
}

double BlowupProfile::e0(double t, double r) const {
  return -Phi(lambda(t) * r) / (t * t);
}

double BlowupProfile::nonlinear_remainder(double R, double delta) const {
  // f(Q + d) - f(Q) - d f'(Q) = d^2 int_0^1 (1 - tau) f''(Q + tau d) dtau .
  const double Q = hm_.Q(R);
  const QuadRule& gl = gauss_legendre(16);
  double acc = 0.0;
  for (std::size_t k = 0; k < gl.x.size(); ++k) {
    const double tau = 0.5 + 0.5 * gl.x[k];
    acc += 0.5 * gl.w[k] * (1.0 - tau) * hm_.surface().f2(Q + tau * delta);
  }
  return delta * delta * acc;
}

double BlowupProfile::e1(double t, double r) const {
  const double R = lambda(t) * r;
  const double t2n = std::pow(t, 2.0 * nu_);
  const double c1 = 2.0 * nu_ * (2.0 * nu_ - 1.0);
  const double c2 = (1.0 + nu_) * (2.0 - 3.0 * nu_);
  const double c3 = (1.0 + nu_) * (1.0 + nu_);
  const double combo =
      c1 * w(R) + c2 * R * w_prime(R) + c3 * R * R * w_second(R);
  const double lam = lambda(t);
  const double rem = nonlinear_remainder(R, t2n * w(R));
  return -t2n / (t * t) * combo - lam * lam * rem / (R * R);
}

double BlowupProfile::e1_raw(double t, double r) const {
  const double lam = lambda(t);
  const double R = lam * r;
  const double t2n = std::pow(t, 2.0 * nu_);
  const double q1 = hm_.Qprime(R), q2 = hm_.Qsecond(R);
  const double wv = w(R), w1 = w_prime(R), w2 = w_second(R);
  const double c1 = 2.0 * nu_ * (2.0 * nu_ - 1.0);
  const double c2 = (1.0 + nu_) * (2.0 - 3.0 * nu_);
  const double c3 = (1.0 + nu_) * (1.0 + nu_);
  const double dtt_q = ((1.0 + nu_) * (2.0 + nu_) * R * q1 +
                        (1.0 + nu_) * (1.0 + nu_) * R * R * q2) /
                       (t * t);
  const double dtt_w = t2n / (t * t) * (c1 * wv + c2 * R * w1 + c3 * R * R * w2);
  const double spatial = lam * lam * (q2 + q1 / R + t2n * (w2 + w1 / R));
  const double uv = hm_.Q(R) + t2n * wv;
  const double nonlin = lam * lam * hm_.surface().f(uv) / (R * R);
  return -(dtt_q + dtt_w) + spatial - nonlin;
}

double BlowupProfile::sup_t2e0(double t) const {
  const double r_hi = 0.5 * t;
  double m = 0.0;
  const int n = 600;
  for (int i = 0; i < n; ++i) {
    const double r = r_hi * std::pow(10.0, -7.0 * i / (n - 1.0));
    m = std::max(m, std::abs(Phi(lambda(t) * r)));
  }
  return m;
}

double BlowupProfile::sup_t2e1(double t) const {
  const double r_hi = 0.5 * t;
  double m = 0.0;
  const int n = 600;
  for (int i = 0; i < n; ++i) {
    const double r = r_hi * std::pow(10.0, -7.0 * i / (n - 1.0));
    m = std::max(m, t * t * std::abs(e1(t, r)));
  }
  return m;
}

double BlowupProfile::local_energy_u0(double t) const {
  // In R = lambda r the cone energy becomes
  //   int_0^{t^-nu} [ (1+nu)^2 t^{2nu} R^2 Q'^2 + Q'^2 + g(Q)^2/R^2 ] R dR / 2.
  const double rc = std::pow(t, -nu_);
  const double t2n = std::pow(t, 2.0 * nu_);
  const double q0 = hm_.Q0();
  const double r_head = std::min(1e-6, 0.5 * rc);
  double e = 0.5 * q0 * q0 * r_head * r_head;
  const double s_lo = std::log(r_head), s_hi = std::log(rc);
  const int cells = std::max(8, static_cast<int>((s_hi - s_lo) / 0.25));
  e += integrate_gl_cells(
      [&](double sv) {
        const double R = std::exp(sv);
        const double q1 = hm_.Qprime(R), g = hm_.g_of_Q(R);
        const double dens = (1.0 + nu_) * (1.0 + nu_) * t2n * R * R * q1 * q1 +
                            q1 * q1 + g * g / (R * R);
        return 0.5 * dens * R * R;  // extra R from the measure, ds variable
      },
      s_lo, s_hi, cells, 8);
  return e;
}

}  // namespace blowup
