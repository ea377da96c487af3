#include "blowup/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

std::string fault_text(const char* what, double xi) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s at xi = %.6g", what, xi);
  return buf;
}

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * static_cast<double>(n - k + i) / i;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// FundamentalSystem
// ---------------------------------------------------------------------------

FundamentalSystem::FundamentalSystem(const HarmonicMap& hm, bool free_mode)
    : hm_(&hm), free_(free_mode) {
  if (free_) {
    x0_ = -0.5;
    return;
  }
  const double q0 = hm.Q0();
  x0_ = -1.0 / (2.0 * q0 * q0);

  // I(e^s) against s, slopes dI/ds = 1/g(Q)^2 exact at the nodes. Both
  // halves are integrated away from s = 0 so node values never come out of
  // a large-minus-large difference.
  const double s_lo = -14.0, s_hi = 14.0, ds = 1.0 / 128.0;
  const auto n_half = static_cast<std::size_t>(std::lround((s_hi - 0.0) / ds));
  const std::size_t n = 2 * n_half + 1;
  std::vector<double> y(n, 0.0), dy(n, 0.0);
  const auto slope = [&hm](double s) {
    const double g = hm.g_of_Q(std::exp(s));
    return 1.0 / (g * g);
  };
  for (std::size_t i = 0; i < n; ++i) dy[i] = slope(s_lo + ds * static_cast<double>(i));

  const OdeOptions iopt{1e-12, 0.0, 0.0, 4'000'000};
  const OdeRhs rhs = [&slope](double s, const double*, double* d) { d[0] = slope(s); };
  for (int dir = -1; dir <= 1; dir += 2) {
    std::vector<double> xs(n_half + 1);
    for (std::size_t i = 0; i <= n_half; ++i)
      xs[i] = dir * ds * static_cast<double>(i);
    double v[1] = {0.0};
    ode_integrate_nodes(rhs, 1, xs, v,
                        [&](std::size_t i, const double* vv) {
                          const std::size_t idx =
                              dir < 0 ? n_half - i : n_half + i;
                          y[idx] = vv[0];
                        },
                        iopt);
  }
  d_lo_ = dy.front();
  d_hi_ = dy.back();
  itab_ = HermiteTable(s_lo, ds, std::move(y), std::move(dy));
}

double FundamentalSystem::I(double R) const {
  if (free_) return 0.5 * (1.0 - 1.0 / (R * R));
  const double s = std::log(R);
  if (s < itab_.x_min())
    return itab_.node_value(0) -
           0.5 * d_lo_ * (std::exp(-2.0 * (s - itab_.x_min())) - 1.0);
  if (s > itab_.x_max())
    return itab_.node_value(itab_.size() - 1) +
           0.5 * d_hi_ * (std::exp(2.0 * (s - itab_.x_max())) - 1.0);
  return itab_(s);
}

double FundamentalSystem::phi0(double R) const {
  if (free_) return R * std::sqrt(R);
  return std::sqrt(R) * hm_->g_of_Q(R);
}

double FundamentalSystem::phi0_prime(double R) const {
  if (free_) return 1.5 * std::sqrt(R);
  // (g(Q)/sqrt R) (1/2 + g'(Q)); the paren stays accurate at both poles.
  return hm_->g_of_Q(R) * (hm_->one_plus_g1_of_Q(R) - 0.5) / std::sqrt(R);
}

double FundamentalSystem::theta0(double R) const { return phi0(R) * I(R); }

double FundamentalSystem::theta0_prime(double R) const {
  return phi0_prime(R) * I(R) + 1.0 / phi0(R);
}

double FundamentalSystem::V(double R) const {
  if (free_) return 0.0;
  return -hm_->surface().one_minus_f1(hm_->Q(R)) / (R * R);
}

double FundamentalSystem::potential_W(double R) const {
  if (free_) return 0.0;
  const double q = hm_->Q(R);
  return -2.0 * (hm_->surface().one_minus_f1(q) / (R * R) +
                 hm_->surface().f2(q) * hm_->Qprime(R) / R);
}

double FundamentalSystem::B(double u) const {
  if (free_) return 1.0;
  if (u <= 0.0) return hm_->Q0();
  return hm_->Qprime(std::sqrt(u));
}

double FundamentalSystem::Bp(double u) const {
  if (free_) return 0.0;
  const double r = std::sqrt(u);
  return hm_->Qsecond(r) / (2.0 * r);
}

double FundamentalSystem::X(double u) const {
  if (free_) return 0.5 * (u - 1.0);
  if (u <= 0.0) return x0_;
  return u * I(std::sqrt(u));
}

double FundamentalSystem::Xp(double u) const {
  if (free_) return 0.5;
  const double g = hm_->g_of_Q(std::sqrt(u));
  return I(std::sqrt(u)) + 0.5 / (g * g);
}

// ---------------------------------------------------------------------------
// VolterraTables
// ---------------------------------------------------------------------------

VolterraTables::VolterraTables(const FundamentalSystem& fs,
                               const SpectralOptions& opt)
    : levels_(opt.volterra_levels), u_min_(opt.u_min), u_max_(opt.u_max) {
  if (levels_ < 2 || opt.volterra_cells < 64 || !(u_min_ > 0.0) ||
      !(u_max_ > 4.0 * u_min_))
    throw numerical_fault("volterra: degenerate grid request");
  const int cells = opt.volterra_cells;
  x0_ = std::log(u_min_);
  dx_ = (std::log(u_max_) - x0_) / cells;
  const std::size_t nn = static_cast<std::size_t>(cells) + 1;

  std::vector<double> u(nn), bu(nn), bpu(nn), xu(nn), xpu(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    u[i] = std::exp(x0_ + dx_ * static_cast<double>(i));
    bu[i] = fs.B(u[i]);
    bpu[i] = fs.Bp(u[i]);
    xu[i] = fs.X(u[i]);
    xpu[i] = fs.Xp(u[i]);
  }

  // Shared Gauss nodes per cell; only the table of the previous level
  // changes between iterates.
  const QuadRule& gl = gauss_legendre(4);
  const std::size_t ng = static_cast<std::size_t>(cells) * gl.x.size();
  std::vector<double> xg(ng), vg(ng), bg(ng), bxg(ng), wg(ng);
  for (int c = 0; c < cells; ++c) {
    const double mid = x0_ + dx_ * (c + 0.5), half = 0.5 * dx_;
    for (std::size_t k = 0; k < gl.x.size(); ++k) {
      const std::size_t idx = static_cast<std::size_t>(c) * gl.x.size() + k;
      xg[idx] = mid + half * gl.x[k];
      vg[idx] = std::exp(xg[idx]);
      bg[idx] = fs.B(vg[idx]);
      bxg[idx] = bg[idx] * fs.X(vg[idx]);
      wg[idx] = gl.w[k] * half;
    }
  }

  std::vector<double> val(nn), der(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    val[i] = u[i] * bu[i];
    der[i] = bu[i] + u[i] * bpu[i];
  }
  raw_.push_back(val);
  head_.push_back(val[0]);
  val_.emplace_back(x0_, dx_, val);
  der_.emplace_back(x0_, dx_, std::move(der));

  const double b0 = fs.B(0.0), chi0 = fs.X0();
  for (int j = 1; j <= levels_; ++j) {
    const Lagrange6Table& prev = val_.back();
    const double fum = head_.back();
    // Below u_min the previous iterate is c u^j; both moments close in form.
    double pc = b0 * fum * u_min_ / (j + 1);
    double rc = b0 * chi0 * fum / j;
    std::vector<double> nval(nn), nder(nn);
    nval[0] = 0.5 * bu[0] * (u[0] * rc - xu[0] * pc);
    nder[0] = 0.5 * bpu[0] * (u[0] * rc - xu[0] * pc) +
              0.5 * bu[0] * (rc - xpu[0] * pc);
    for (int c = 0; c < cells; ++c) {
      double pinc = 0.0, rinc = 0.0;
      for (std::size_t k = 0; k < gl.x.size(); ++k) {
        const std::size_t idx = static_cast<std::size_t>(c) * gl.x.size() + k;
        const double ft = prev(xg[idx]);
        pinc += wg[idx] * bg[idx] * ft * vg[idx];  // dv = v dx
        rinc += wg[idx] * bxg[idx] * ft;           // dv / v = dx
      }
      pc += pinc;
      rc += rinc;
      const std::size_t i = static_cast<std::size_t>(c) + 1;
      const double core = u[i] * rc - xu[i] * pc;
      nval[i] = 0.5 * bu[i] * core;
      // d/du: the u R' and X P' contributions cancel identically.
      nder[i] = 0.5 * bpu[i] * core + 0.5 * bu[i] * (rc - xpu[i] * pc);
    }
    raw_.push_back(nval);
    head_.push_back(nval[0]);
    val_.emplace_back(x0_, dx_, std::move(nval));
    der_.emplace_back(x0_, dx_, std::move(nder));
  }
}

double VolterraTables::f_tilde(int j, double u) const {
  if (u <= 0.0) return 0.0;
  if (u < u_min_) return head_[static_cast<std::size_t>(j)] *
                         std::pow(u / u_min_, j + 1);
  if (u > u_max_ * (1.0 + 1e-9))
    throw numerical_fault("volterra: u beyond the tabulated range");
  return val_[static_cast<std::size_t>(j)](std::min(std::log(u), val_[0].x_max()));
}

double VolterraTables::df_tilde(int j, double u) const {
  if (u <= 0.0) return j == 0 ? head_[0] / u_min_ : 0.0;
  if (u < u_min_)
    return head_[static_cast<std::size_t>(j)] * (j + 1) / u_min_ *
           std::pow(u / u_min_, j);
  if (u > u_max_ * (1.0 + 1e-9))
    throw numerical_fault("volterra: u beyond the tabulated range");
  return der_[static_cast<std::size_t>(j)](std::min(std::log(u), der_[0].x_max()));
}

double VolterraTables::phi_j(int j, double u) const {
  if (u <= 0.0) return 0.0;
  if (u < u_min_)
    return head_[static_cast<std::size_t>(j)] * (u / u_min_) *
           std::pow(u_min_, -j);
  const double x = std::min(std::log(u), val_[0].x_max());
  return val_[static_cast<std::size_t>(j)](x) * std::exp(-j * x);
}

double VolterraTables::envelope(int j) const {
  const auto& row = raw_[static_cast<std::size_t>(j)];
  double m = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double x = x0_ + dx_ * static_cast<double>(i);
    const double u = std::exp(x);
    m = std::max(m, std::abs(row[i]) * std::exp(-j * x) / std::log1p(u));
  }
  return m;
}

double VolterraTables::fitted_growth_constant() const {
  std::vector<double> xs, ys;
  for (int j = 1; j <= levels_; ++j) {
    xs.push_back(j);
    ys.push_back(std::log(envelope(j)) + std::lgamma(static_cast<double>(j)));
  }
  return std::exp(fit_line(xs, ys).slope);
}

// ---------------------------------------------------------------------------
// PsiTables
// ---------------------------------------------------------------------------

PsiTables::PsiTables(const FundamentalSystem& fs, const SpectralOptions& opt)
    : levels_(opt.psi_levels) {
  if (levels_ < 1 || levels_ > 12)
    throw numerical_fault("psi: unsupported expansion order");
  x0_ = std::log(opt.psi_r_min);
  dx_ = opt.psi_step;
  const auto n = static_cast<std::size_t>(
                     std::ceil((std::log(opt.psi_r_max) - x0_) / dx_)) + 1;
  r_lo_ = std::exp(x0_);
  r_hi_ = std::exp(x0_ + dx_ * static_cast<double>(n - 1));
  const int j0 = levels_;

  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k)
    r[k] = std::exp(x0_ + dx_ * static_cast<double>(k));

  // w = 3/(4 r^2) + V and its first eight derivatives at every node.
  const int kWOrder = 8, kJet = 10;
  std::vector<std::vector<double>> wd(n, std::vector<double>(kWOrder + 1));
  const HarmonicMap& hm = fs.harmonic_map();
  for (std::size_t k = 0; k < n; ++k) {
    const TaylorJet rj = TaylorJet::variable(r[k], kJet);
    const TaylorJet inv2 = (rj * rj).reciprocal();
    TaylorJet wjet = inv2 * 0.75;
    if (!fs.free_mode())
      wjet -= hm.surface().one_minus_f1_jet(hm.Q_jet(r[k], kJet)) * inv2;
    for (int l = 0; l <= kWOrder; ++l) wd[k][l] = wjet.derivative(l);
  }

  using C = std::complex<double>;
  // cur[m][k] = f_{j-1}^{(m)}(r_k); level 0 is the constant 1.
  std::vector<std::vector<C>> cur(static_cast<std::size_t>(j0 + 3),
                                  std::vector<C>(n, C{0.0, 0.0}));
  std::fill(cur[0].begin(), cur[0].end(), C{1.0, 0.0});

  const auto push_tables = [&](const std::vector<C>& f, const std::vector<C>& f1,
                               const std::vector<C>& f2) {
    std::vector<double> a(n), b(n), c(n), d(n), e(n), g(n), p(n), q(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = f[k].real();
      b[k] = r[k] * f1[k].real();  // d/dx = r d/dr
      c[k] = f[k].imag();
      d[k] = r[k] * f1[k].imag();
      e[k] = f1[k].real();
      g[k] = r[k] * f2[k].real();
      p[k] = f1[k].imag();
      q[k] = r[k] * f2[k].imag();
    }
    vre_.emplace_back(x0_, dx_, std::move(a), std::move(b));
    vim_.emplace_back(x0_, dx_, std::move(c), std::move(d));
    dre_.emplace_back(x0_, dx_, std::move(e), std::move(g));
    dim_.emplace_back(x0_, dx_, std::move(p), std::move(q));
  };

  f_end_.assign(static_cast<std::size_t>(j0) + 1, C{0.0, 0.0});
  f_end_[0] = C{1.0, 0.0};
  for (int j = 1; j <= j0; ++j) {
    const int mm = j0 + 2 - j;
    std::vector<std::vector<C>> nxt(static_cast<std::size_t>(mm + 1),
                                    std::vector<C>(n));
    // T(r) = int_r^inf w f_{j-1}; the tail beyond the grid keeps the 3/(4r^2)
    // part against the power-law continuation of f_{j-1}.
    std::vector<C> tail(n);
    tail[n - 1] = 3.0 * cur[0][n - 1] / (4.0 * j * r[n - 1]);
    for (std::size_t k = n - 1; k-- > 0;) {
      const double h = r[k + 1] - r[k];
      const C pa = wd[k][0] * cur[0][k];
      const C pa1 = wd[k][1] * cur[0][k] + wd[k][0] * cur[1][k];
      const C pa2 = wd[k][2] * cur[0][k] + 2.0 * wd[k][1] * cur[1][k] +
                    wd[k][0] * cur[2][k];
      const C pb = wd[k + 1][0] * cur[0][k + 1];
      const C pb1 = wd[k + 1][1] * cur[0][k + 1] + wd[k + 1][0] * cur[1][k + 1];
      const C pb2 = wd[k + 1][2] * cur[0][k + 1] +
                    2.0 * wd[k + 1][1] * cur[1][k + 1] +
                    wd[k + 1][0] * cur[2][k + 1];
      const C cell = h * (pa + pb) * 0.5 + h * h * (pa1 - pb1) * 0.1 +
                     h * h * h * (pa2 + pb2) / 120.0;
      tail[k] = tail[k + 1] + cell;
    }
    for (std::size_t k = 0; k < n; ++k) {
      nxt[0][k] = 0.5 * kI * (cur[1][k] + tail[k]);
      for (int m = 1; m <= mm; ++m) {
        C s{0.0, 0.0};
        for (int l = 0; l <= m - 1; ++l)
          s += binom(m - 1, l) * wd[k][static_cast<std::size_t>(l)] *
               cur[static_cast<std::size_t>(m - 1 - l)][k];
        nxt[static_cast<std::size_t>(m)][k] =
            0.5 * kI * (cur[static_cast<std::size_t>(m + 1)][k] - s);
      }
    }
    push_tables(nxt[0], nxt[1], nxt[2]);
    f_end_[static_cast<std::size_t>(j)] = nxt[0][n - 1];
    cur = std::move(nxt);
  }
}

std::complex<double> PsiTables::f(int j, double r) const {
  if (j == 0) return {1.0, 0.0};
  const auto idx = static_cast<std::size_t>(j - 1);
  const double x = std::log(r);
  if (x > vre_[idx].x_max())
    return f_end_[static_cast<std::size_t>(j)] * std::pow(r_hi_ / r, j);
  if (x < x0_ - 1e-12)
    throw numerical_fault("psi: radius below the symbol table");
  return {vre_[idx](x), vim_[idx](x)};
}

std::complex<double> PsiTables::df(int j, double r) const {
  if (j == 0) return {0.0, 0.0};
  const auto idx = static_cast<std::size_t>(j - 1);
  const double x = std::log(r);
  if (x > vre_[idx].x_max()) return f(j, r) * (-static_cast<double>(j) / r);
  if (x < x0_ - 1e-12)
    throw numerical_fault("psi: radius below the symbol table");
  return {dre_[idx](x), dim_[idx](x)};
}

// ---------------------------------------------------------------------------
// SpectralWorkspace
// ---------------------------------------------------------------------------

SpectralWorkspace::SpectralWorkspace(const HarmonicMap& hm, SpectralOptions opt)
    : hm_(hm),
      opt_(opt),
      fs_(hm_, opt.free_mode),
      volterra_(fs_, opt_),
      psi_(fs_, opt_) {}

double SpectralWorkspace::series_radius(double xi) const {
  return std::min(opt_.q_series / std::sqrt(xi), 0.99 * std::sqrt(opt_.u_max));
}

// out = {phi, phi', phi_xi, phi_xi'}; the series is summed in f~_j so that
// the j = 0 term is exactly phi0.
void SpectralWorkspace::phi_series(double r, double xi, bool with_xi,
                                   double* out) const {
  const double u = r * r, rs = std::sqrt(r);
  double s0 = 0.0, s1 = 0.0, sx = 0.0, sx1 = 0.0;
  double xp = 1.0;  // xi^j
  int quiet = 0;
  for (int j = 0; j <= volterra_.levels(); ++j) {
    const double fv = volterra_.f_tilde(j, u);
    const double fd = volterra_.df_tilde(j, u);
    s0 += xp * fv;
    s1 += xp * fd;
    if (with_xi && j >= 1) {
      const double xq = j * xp / xi;
      sx += xq * fv;
      sx1 += xq * fd;
    }
    if (j >= 4) {
      quiet = std::abs(xp * fv) <= 1e-17 * std::abs(s0) ? quiet + 1 : 0;
      if (quiet >= 2) break;
    }
    xp *= xi;
  }
  out[0] = s0 / rs;
  out[1] = (2.0 * r * s1 - 0.5 * s0 / r) / rs;
  if (with_xi) {
    out[2] = sx / rs;
    out[3] = (2.0 * r * sx1 - 0.5 * sx / r) / rs;
  }
}

PhiRow SpectralWorkspace::phi_row(std::span<const double> r_nodes, double xi,
                                  bool with_xi) const {
  if (!(xi > 0.0)) throw numerical_fault(fault_text("spectral: xi must be positive", xi));
  const std::size_t n = r_nodes.size();
  PhiRow row;
  row.phi.resize(n);
  row.dphi.resize(n);
  if (with_xi) {
    row.phi_xi.resize(n);
    row.dphi_xi.resize(n);
  }
  const double rs = series_radius(xi);
  std::size_t split = 0;
  double st[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!(r_nodes[i] > 0.0) || (i > 0 && r_nodes[i] <= r_nodes[i - 1]))
      throw numerical_fault("spectral: phi nodes must be positive ascending");
    if (r_nodes[i] <= rs) {
      phi_series(r_nodes[i], xi, with_xi, st);
      row.phi[i] = st[0];
      row.dphi[i] = st[1];
      if (with_xi) {
        row.phi_xi[i] = st[2];
        row.dphi_xi[i] = st[3];
      }
      split = i + 1;
    }
  }
  if (split == n) return row;

  const int dim = with_xi ? 4 : 2;
  double y[4];
  phi_series(rs, xi, with_xi, st);
  y[0] = st[0];
  y[1] = st[1];
  if (with_xi) {
    y[2] = st[2];
    y[3] = st[3];
  }
  std::vector<double> xs;
  xs.reserve(n - split + 1);
  xs.push_back(rs);
  for (std::size_t i = split; i < n; ++i) xs.push_back(r_nodes[i]);
  const OdeRhs rhs = [this, xi, with_xi](double r, const double* v, double* d) {
    const double pm = fs_.P(r) - xi;
    d[0] = v[1];
    d[1] = pm * v[0];
    if (with_xi) {
      d[2] = v[3];
      d[3] = pm * v[2] - v[0];
    }
  };
  const OdeOptions oopt{opt_.ode_rtol, opt_.ode_atol, 0.0, 4'000'000};
  ode_integrate_nodes(rhs, dim, xs, y,
                      [&](std::size_t i, const double* v) {
                        if (i == 0) return;
                        const std::size_t k = split + i - 1;
                        row.phi[k] = v[0];
                        row.dphi[k] = v[1];
                        if (with_xi) {
                          row.phi_xi[k] = v[2];
                          row.dphi_xi[k] = v[3];
                        }
                      },
                      oopt);
  return row;
}

double SpectralWorkspace::phi(double r, double xi) const {
  double v, d;
  phi_state(r, xi, &v, &d);
  return v;
}

void SpectralWorkspace::phi_state(double r, double xi, double* value,
                                  double* deriv) const {
  const double node[1] = {r};
  const PhiRow row = phi_row(node, xi, false);
  if (value) *value = row.phi[0];
  if (deriv) *deriv = row.dphi[0];
}

void SpectralWorkspace::psi_state(double r, double xi,
                                  std::complex<double>* value,
                                  std::complex<double>* deriv) const {
  const double node[1] = {r};
  std::vector<std::complex<double>> dv;
  const auto v = psi_row(node, xi, &dv);
  if (value) *value = v[0];
  if (deriv) *deriv = dv[0];
}

std::vector<std::complex<double>> SpectralWorkspace::psi_row(
    std::span<const double> r_nodes, double xi,
    std::vector<std::complex<double>>* deriv) const {
  if (!(xi > 0.0)) throw numerical_fault(fault_text("spectral: xi must be positive", xi));
  const std::size_t n = r_nodes.size();
  std::vector<std::complex<double>> val(n), der(n);
  const double sq = std::sqrt(xi);
  const double ra = std::max(opt_.q_asym / sq, psi_.r_min());
  const double amp0 = std::pow(xi, -0.25);

  const auto direct = [&](double r, std::complex<double>* v,
                          std::complex<double>* d) {
    std::complex<double> s{0.0, 0.0}, s1{0.0, 0.0};
    double p = 1.0;  // xi^{-j/2}
    for (int j = 0; j <= psi_.levels(); ++j) {
      s += p * psi_.f(j, r);
      s1 += p * psi_.df(j, r);
      p /= sq;
    }
    const std::complex<double> osc =
        amp0 * std::exp(kI * (r * sq));
    *v = osc * s;
    *d = osc * (kI * sq * s + s1);
  };

  std::size_t split = n;  // first index with r >= ra
  for (std::size_t i = 0; i < n; ++i) {
    if (!(r_nodes[i] > 0.0) || (i > 0 && r_nodes[i] <= r_nodes[i - 1]))
      throw numerical_fault("spectral: psi nodes must be positive ascending");
    if (r_nodes[i] >= ra) {
      if (split == n) split = i;
      direct(r_nodes[i], &val[i], &der[i]);
    }
  }
  if (split > 0) {
    // Inward continuation from the anchor; the origin-singular component
    // dominates going down, so this direction is the stable one.
    std::complex<double> va, da;
    direct(ra, &va, &da);
    double y[4] = {va.real(), va.imag(), da.real(), da.imag()};
    std::vector<double> xs;
    xs.reserve(split + 1);
    xs.push_back(ra);
    for (std::size_t i = split; i-- > 0;) xs.push_back(r_nodes[i]);
    const OdeRhs rhs = [this, xi](double r, const double* v, double* d) {
      const double pm = fs_.P(r) - xi;
      d[0] = v[2];
      d[1] = v[3];
      d[2] = pm * v[0];
      d[3] = pm * v[1];
    };
    const OdeOptions oopt{opt_.ode_rtol, opt_.ode_atol, 0.0, 4'000'000};
    ode_integrate_nodes(rhs, 4, xs, y,
                        [&](std::size_t i, const double* v) {
                          if (i == 0) return;
                          const std::size_t k = split - i;
                          val[k] = {v[0], v[1]};
                          der[k] = {v[2], v[3]};
                        },
                        oopt);
  }
  if (deriv) *deriv = std::move(der);
  return val;
}

MeasureSample SpectralWorkspace::measure_point(double xi) const {
  if (!(xi > 0.0)) throw numerical_fault(fault_text("spectral: xi must be positive", xi));
  const double r1 = std::max(opt_.q_asym / std::sqrt(xi), psi_.r_min());
  const double nodes[2] = {r1, 1.5 * r1};
  const PhiRow pr = phi_row(nodes, xi, false);
  std::vector<std::complex<double>> dps;
  const auto ps = psi_row(nodes, xi, &dps);
  std::complex<double> a[2];
  for (int k = 0; k < 2; ++k) {
    const std::complex<double> psim = std::conj(ps[static_cast<std::size_t>(k)]);
    const std::complex<double> dpsim = std::conj(dps[static_cast<std::size_t>(k)]);
    a[k] = -0.5 * kI *
           (pr.phi[static_cast<std::size_t>(k)] * dpsim -
            pr.dphi[static_cast<std::size_t>(k)] * psim);
  }
  MeasureSample out;
  out.xi = xi;
  out.a = a[0];
  out.drift = std::abs(a[1] - a[0]) / std::abs(a[0]);
  if (!(out.drift < 1e-5))
    throw numerical_fault(
        fault_text("spectral measure: Wronskian constancy check failed", xi));
  out.rho = 1.0 / (4.0 * kPi * std::norm(a[0]));
  return out;
}

std::vector<MeasureSample> SpectralWorkspace::measure_grid(
    std::span<const double> xi, int threads) const {
  const int th = resolve_thread_count(threads > 0 ? threads : opt_.threads);
  std::vector<MeasureSample> out(xi.size());
  parallel_for(xi.size(), th,
               [&](std::size_t i) { out[i] = measure_point(xi[i]); });
  return out;
}

// ---------------------------------------------------------------------------
// TransformPlan
// ---------------------------------------------------------------------------

TransformPlan::TransformPlan(const SpectralWorkspace& ws, double r_lo,
                             double r_hi, std::span<const double> xi_grid,
                             int threads)
    : ws_(&ws), xi_(xi_grid.begin(), xi_grid.end()) {
  if (!(r_lo >= 0.0) || !(r_hi > r_lo) || xi_.size() < 4)
    throw numerical_fault("transform: degenerate plan request");
  for (std::size_t i = 0; i < xi_.size(); ++i)
    if (!(xi_[i] > 0.0) || (i > 0 && xi_[i] <= xi_[i - 1]))
      throw numerical_fault("transform: xi grid must be positive ascending");

  // r quadrature: fixed cells sized to the fastest oscillation in the plan.
  const double width = std::min(0.25, 1.2 / std::sqrt(xi_.back()));
  const int cells = std::max(1, static_cast<int>(std::ceil((r_hi - r_lo) / width)));
  const QuadRule& gl = gauss_legendre(8);
  rn_.reserve(static_cast<std::size_t>(cells) * gl.x.size());
  rw_.reserve(rn_.capacity());
  for (int c = 0; c < cells; ++c) {
    const double a = r_lo + (r_hi - r_lo) * c / cells;
    const double b = r_lo + (r_hi - r_lo) * (c + 1) / cells;
    for (std::size_t k = 0; k < gl.x.size(); ++k) {
      rn_.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.x[k]);
      rw_.push_back(0.5 * (b - a) * gl.w[k]);
    }
  }

  const int th = resolve_thread_count(threads > 0 ? threads : ws.options().threads);
  phi_.resize(xi_.size());
  rho_.resize(xi_.size());
  parallel_for(xi_.size(), th, [&](std::size_t i) {
    phi_[i] = ws.phi_row(rn_, xi_[i], false).phi;
    rho_[i] = ws.measure_point(xi_[i]).rho;
  });

  // Trapezoid weights in log xi, open toward both ends.
  xiw_.assign(xi_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < xi_.size(); ++i) {
    const double dl = std::log(xi_[i + 1] / xi_[i]);
    xiw_[i] += 0.5 * dl * xi_[i];
    xiw_[i + 1] += 0.5 * dl * xi_[i + 1];
  }

  // rho ~ C / (xi (log xi + kappa)^2) below the grid, pinned at the two
  // smallest nodes; the model integrates to C / |log xi_0 + kappa|.
  const double s1 = std::sqrt(rho_[0] * xi_[0]), s2 = std::sqrt(rho_[1] * xi_[1]);
  const double l1 = std::log(xi_[0]), l2 = std::log(xi_[1]);
  tail_kappa_ = (s2 * l2 - s1 * l1) / (s1 - s2);
  tail_c_ = rho_[0] * xi_[0] * (l1 + tail_kappa_) * (l1 + tail_kappa_);
  if (!std::isfinite(tail_kappa_) || !(l1 + tail_kappa_ < 0.0)) {
    tail_kappa_ = 0.0;
    tail_c_ = 0.0;
  }
}

std::vector<double> TransformPlan::forward(
    const std::function<double(double)>& f) const {
  std::vector<double> fv(rn_.size());
  for (std::size_t k = 0; k < rn_.size(); ++k) fv[k] = f(rn_[k]);
  return forward(fv);
}

std::vector<double> TransformPlan::forward(std::span<const double> f) const {
  if (f.size() != rn_.size())
    throw numerical_fault("transform: sample count mismatch");
  std::vector<double> out(xi_.size(), 0.0);
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < rn_.size(); ++k)
      s += rw_[k] * phi_[i][k] * f[k];
    out[i] = s;
  }
  return out;
}

double TransformPlan::integral_sq(std::span<const double> f) const {
  if (f.size() != rn_.size())
    throw numerical_fault("transform: sample count mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < rn_.size(); ++k) s += rw_[k] * f[k] * f[k];
  return s;
}

double TransformPlan::plancherel_sq(std::span<const double> fhat) const {
  if (fhat.size() != xi_.size())
    throw numerical_fault("transform: spectral sample count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < xi_.size(); ++i)
    s += xiw_[i] * rho_[i] * fhat[i] * fhat[i];
  if (tail_c_ > 0.0)
    s += fhat[0] * fhat[0] * tail_c_ /
         std::abs(std::log(xi_[0]) + tail_kappa_);
  return s;
}

std::vector<double> TransformPlan::inverse_on_nodes(
    std::span<const double> fhat) const {
  if (fhat.size() != xi_.size())
    throw numerical_fault("transform: spectral sample count mismatch");
  std::vector<double> out(rn_.size(), 0.0);
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    const double c = xiw_[i] * rho_[i] * fhat[i];
    for (std::size_t k = 0; k < rn_.size(); ++k) out[k] += c * phi_[i][k];
  }
  if (tail_c_ > 0.0) {
    const double c =
        fhat[0] * tail_c_ / std::abs(std::log(xi_[0]) + tail_kappa_);
    for (std::size_t k = 0; k < rn_.size(); ++k) out[k] += c * phi_[0][k];
  }
  return out;
}

}  // namespace blowup
