#include "blowup/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

namespace blowup {

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> out(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + h * static_cast<double>(i);
  out.back() = b;
  return out;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  if (a <= 0.0 || b <= 0.0)
    throw numerical_fault("logspace: endpoints must be positive");
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> out(n);
  const double la = std::log(a), lb = std::log(b);
  const double h = (lb - la) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(la + h * static_cast<double>(i));
  out.back() = b;
  return out;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

namespace {

// Butcher tableau, classic DOPRI5 coefficients.
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights.
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

struct Dopri5 {
  const OdeRhs& f;
  int dim;
  OdeOptions opt;
  std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;
  std::size_t steps = 0;
  bool have_k1 = false;  // FSAL: k1 holds f at the current point when set

  Dopri5(const OdeRhs& f_, int dim_, const OdeOptions& o)
      : f(f_), dim(dim_), opt(o) {
    const auto d = static_cast<std::size_t>(dim);
    k1.resize(d); k2.resize(d); k3.resize(d); k4.resize(d);
    k5.resize(d); k6.resize(d); k7.resize(d); ytmp.resize(d); ynew.resize(d);
  }

  double initial_step(double x, const double* y, double dir) const {
    double ynorm = 0.0, fnorm = 0.0;
    std::vector<double> dy(static_cast<std::size_t>(dim));
    f(x, y, dy.data());
    for (int i = 0; i < dim; ++i) {
      ynorm = std::max(ynorm, std::abs(y[i]));
      fnorm = std::max(fnorm, std::abs(dy[i]));
    }
    double h = (fnorm > 0.0) ? 0.01 * (ynorm + opt.atol) / fnorm : 1e-6;
    h = std::min(h, 1e-2 * (1.0 + std::abs(x)));
    h = std::max(h, 1e-12 * (1.0 + std::abs(x)));
    return dir * h;
  }

  // Advances y from x toward x_end; returns the x actually reached (== x_end).
  void advance(double x, double x_end, double* y, double* h_io) {
    const double dir = (x_end >= x) ? 1.0 : -1.0;
    double h = *h_io;
    if (h == 0.0 || (h > 0) != (dir > 0)) h = initial_step(x, y, dir);
    if (!have_k1) {
      f(x, y, k1.data());
      have_k1 = true;
    }
    while (dir * (x_end - x) > 0.0) {
      if (++steps > opt.max_steps)
        throw numerical_fault("ode_integrate: step budget exhausted");
      bool clipped = false;
      if (dir * (x + h - x_end) > 0.0) {
        h = x_end - x;
        clipped = true;
      }
      const double hmin = 16.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(x));
      if (std::abs(h) < hmin)
        throw numerical_fault("ode_integrate: step-size underflow");

      for (int i = 0; i < dim; ++i) ytmp[i] = y[i] + h * kA21 * k1[i];
      f(x + kC2 * h, ytmp.data(), k2.data());
      for (int i = 0; i < dim; ++i)
        ytmp[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
      f(x + kC3 * h, ytmp.data(), k3.data());
      for (int i = 0; i < dim; ++i)
        ytmp[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
      f(x + kC4 * h, ytmp.data(), k4.data());
      for (int i = 0; i < dim; ++i)
        ytmp[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] +
                              kA54 * k4[i]);
      f(x + kC5 * h, ytmp.data(), k5.data());
      for (int i = 0; i < dim; ++i)
        ytmp[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                              kA64 * k4[i] + kA65 * k5[i]);
      f(x + h, ytmp.data(), k6.data());
      for (int i = 0; i < dim; ++i)
        ynew[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] +
                              kB5 * k5[i] + kB6 * k6[i]);
      f(x + h, ynew.data(), k7.data());

      double err = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] +
                              kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
        const double sc =
            opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        if (sc > 0.0) err = std::max(err, std::abs(e) / sc);
      }

      if (err <= 1.0) {
        x += h;
        std::copy(ynew.begin(), ynew.end(), y);
        std::swap(k1, k7);  // FSAL
        const double grow =
            (err == 0.0) ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
        h *= std::max(clipped ? 1.0 : 0.2, grow);
      } else {
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      }
    }
    *h_io = h;
  }
};

}  // namespace

void ode_integrate(const OdeRhs& f, int dim, double x0, double x1, double* y,
                   const OdeOptions& opt) {
  if (x0 == x1) return;
  Dopri5 stepper(f, dim, opt);
  double h = opt.h_init;
  stepper.advance(x0, x1, y, &h);
}

void ode_integrate_nodes(
    const OdeRhs& f, int dim, std::span<const double> xs, double* y,
    const std::function<void(std::size_t, const double*)>& on_node,
    const OdeOptions& opt) {
  if (xs.empty()) return;
  on_node(0, y);
  if (xs.size() == 1) return;
  Dopri5 stepper(f, dim, opt);
  double h = opt.h_init;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    // A node that coincides with the previous one to rounding (a grid point
    // landing on an anchor) reuses the state; the stepper's floor would
    // reject such a span.
    const double tiny =
        64.0 * 2.220446049250313e-16 *
        std::max({1.0, std::abs(xs[i - 1]), std::abs(xs[i])});
    if (std::abs(xs[i] - xs[i - 1]) > tiny) stepper.advance(xs[i - 1], xs[i], y, &h);
    on_node(i, y);
  }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace {

QuadRule make_gauss_legendre(int n) {
  QuadRule rule;
  rule.x.resize(static_cast<std::size_t>(n));
  rule.w.resize(static_cast<std::size_t>(n));
  // Newton iteration on P_n from Chebyshev-like initial guesses.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-16 * (1.0 + std::abs(x))) break;
    }
    rule.x[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.w[static_cast<std::size_t>(n - 1 - i)] =
        2.0 / ((1.0 - x * x) * pp * pp);
  }
  return rule;
}

std::mutex g_gl_mutex;
std::map<int, QuadRule> g_gl_cache;

}  // namespace

const QuadRule& gauss_legendre(int n) {
  if (n < 1 || n > 64) throw numerical_fault("gauss_legendre: n out of range");
  std::lock_guard<std::mutex> lock(g_gl_mutex);
  auto it = g_gl_cache.find(n);
  if (it == g_gl_cache.end()) it = g_gl_cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n) {
  const QuadRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i)
    acc += rule.w[i] * f(mid + half * rule.x[i]);
  return acc * half;
}

double integrate_gl_cells(const std::function<double(double)>& f, double a,
                          double b, int cells, int n) {
  if (cells < 1) throw numerical_fault("integrate_gl_cells: cells < 1");
  double acc = 0.0;
  const double h = (b - a) / static_cast<double>(cells);
  for (int c = 0; c < cells; ++c) {
    const double lo = a + h * static_cast<double>(c);
    const double hi = (c == cells - 1) ? b : lo + h;
    acc += integrate_gl(f, lo, hi, n);
  }
  return acc;
}

namespace {

// Gauss-Kronrod 7-15 nodes/weights (positive half; symmetric).
constexpr double kGkX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
constexpr double kGkWk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kGkWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct GkEstimate {
  double value;
  double error;
};

GkEstimate gk15(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double fc = f(mid);
  double resk = kGkWk[7] * fc;
  double resg = kGkWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kGkX[j];
    const double fsum = f(mid - dx) + f(mid + dx);
    resk += kGkWk[j] * fsum;
    if (j % 2 == 1) resg += kGkWg[j / 2] * fsum;
  }
  return {resk * half, std::abs((resk - resg) * half)};
}

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double tol, int depth, int max_depth) {
  const GkEstimate e = gk15(f, a, b);
  if (e.error <= tol || depth >= max_depth) {
    if (depth >= max_depth && e.error > 64.0 * tol)
      throw numerical_fault("integrate_adaptive: refinement stalled");
    return e.value;
  }
  const double mid = 0.5 * (a + b);
  return adaptive_rec(f, a, mid, 0.5 * tol, depth + 1, max_depth) +
         adaptive_rec(f, mid, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rtol, double atol, int max_depth) {
  if (a == b) return 0.0;
  const GkEstimate coarse = gk15(f, a, b);
  const double tol = std::max(atol, rtol * std::abs(coarse.value));
  if (coarse.error <= tol) return coarse.value;
  const double mid = 0.5 * (a + b);
  return adaptive_rec(f, a, mid, 0.5 * tol, 1, max_depth) +
         adaptive_rec(f, mid, b, 0.5 * tol, 1, max_depth);
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

HermiteTable::HermiteTable(double x0, double dx, std::vector<double> y,
                           std::vector<double> dy)
    : x0_(x0), dx_(dx), n_(y.size()), y_(std::move(y)), dy_(std::move(dy)) {
  if (n_ < 2 || dy_.size() != n_ || dx_ <= 0.0)
    throw numerical_fault("HermiteTable: malformed construction");
}

double HermiteTable::operator()(double x) const {
  if (!contains(x)) throw numerical_fault("HermiteTable: x out of range");
  double cell_f = (x - x0_) / dx_;
  auto cell = static_cast<std::size_t>(cell_f);
  if (cell >= n_ - 1) cell = n_ - 2;
  const double t = (x - node_x(cell)) / dx_;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[cell] + h10 * dx_ * dy_[cell] + h01 * y_[cell + 1] +
         h11 * dx_ * dy_[cell + 1];
}

double HermiteTable::deriv(double x) const {
  if (!contains(x)) throw numerical_fault("HermiteTable: x out of range");
  double cell_f = (x - x0_) / dx_;
  auto cell = static_cast<std::size_t>(cell_f);
  if (cell >= n_ - 1) cell = n_ - 2;
  const double t = (x - node_x(cell)) / dx_;
  const double t2 = t * t;
  const double g00 = (6 * t2 - 6 * t) / dx_, g10 = 3 * t2 - 4 * t + 1;
  const double g01 = (-6 * t2 + 6 * t) / dx_, g11 = 3 * t2 - 2 * t;
  return g00 * y_[cell] + g10 * dy_[cell] + g01 * y_[cell + 1] +
         g11 * dy_[cell + 1];
}

Lagrange6Table::Lagrange6Table(double x0, double dx, std::vector<double> y)
    : x0_(x0), dx_(dx), y_(std::move(y)) {
  if (y_.size() < 6 || dx_ <= 0.0)
    throw numerical_fault("Lagrange6Table: need at least 6 nodes");
}

double Lagrange6Table::operator()(double x) const {
  if (!contains(x)) throw numerical_fault("Lagrange6Table: x out of range");
  const double u = (x - x0_) / dx_;
  auto center = static_cast<std::ptrdiff_t>(std::floor(u));
  std::ptrdiff_t first = center - 2;
  const auto n = static_cast<std::ptrdiff_t>(y_.size());
  first = std::clamp<std::ptrdiff_t>(first, 0, n - 6);
  double acc = 0.0;
  for (std::ptrdiff_t j = 0; j < 6; ++j) {
    double lj = 1.0;
    const double xj = static_cast<double>(first + j);
    for (std::ptrdiff_t m = 0; m < 6; ++m) {
      if (m == j) continue;
      const double xm = static_cast<double>(first + m);
      lj *= (u - xm) / (xj - xm);
    }
    acc += lj * y_[static_cast<std::size_t>(first + j)];
  }
  return acc;
}

HermiteTable cumulative_table(const std::function<double(double)>& g,
                              double x0, double dx, std::size_t n, double base,
                              const OdeOptions& opt) {
  if (n < 2) throw numerical_fault("cumulative_table: need n >= 2");
  std::vector<double> xs(n), y(n), dy(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x0 + dx * static_cast<double>(i);
  double state = base;
  const OdeRhs rhs = [&g](double x, const double*, double* dydx) {
    dydx[0] = g(x);
  };
  ode_integrate_nodes(
      rhs, 1, xs, &state,
      [&](std::size_t i, const double* s) {
        y[i] = s[0];
        dy[i] = g(xs[i]);
      },
      opt);
  return HermiteTable(x0, dx, std::move(y), std::move(dy));
}

// ---------------------------------------------------------------------------
// Taylor jets
// ---------------------------------------------------------------------------

TaylorJet TaylorJet::constant(double v, int order) {
  TaylorJet j(order);
  j.c_[0] = v;
  return j;
}

TaylorJet TaylorJet::variable(double x0, int order) {
  TaylorJet j(order);
  j.c_[0] = x0;
  if (order >= 1) j.c_[1] = 1.0;
  return j;
}

double TaylorJet::derivative(int k) const {
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= static_cast<double>(i);
  return fact * c_[static_cast<std::size_t>(k)];
}

TaylorJet& TaylorJet::operator+=(const TaylorJet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

TaylorJet& TaylorJet::operator-=(const TaylorJet& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

TaylorJet& TaylorJet::operator*=(double s) {
  for (double& c : c_) c *= s;
  return *this;
}

TaylorJet TaylorJet::operator*(const TaylorJet& o) const {
  TaylorJet out(order());
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (c_[i] == 0.0) continue;
    for (std::size_t j = 0; i + j < c_.size(); ++j)
      out.c_[i + j] += c_[i] * o.c_[j];
  }
  return out;
}

TaylorJet TaylorJet::reciprocal() const {
  if (c_[0] == 0.0) throw numerical_fault("TaylorJet: reciprocal of zero");
  TaylorJet out(order());
  out.c_[0] = 1.0 / c_[0];
  for (std::size_t k = 1; k < c_.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += c_[j] * out.c_[k - j];
    out.c_[k] = -acc / c_[0];
  }
  return out;
}

TaylorJet poly_eval_jet(std::span<const double> coeffs, const TaylorJet& z) {
  TaylorJet acc = TaylorJet::constant(0.0, z.order());
  for (std::size_t k = coeffs.size(); k-- > 0;) {
    acc = acc * z;
    acc[0] += coeffs[k];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Small solvers and helpers
// ---------------------------------------------------------------------------

double bisect(const std::function<double(double)>& f, double lo, double hi,
              int iters) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw numerical_fault("bisect: no sign change on bracket");
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw numerical_fault("fit_line: need matching inputs, n >= 2");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw numerical_fault("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

void solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
  const auto N = static_cast<std::size_t>(n);
  if (a.size() != N * N || b.size() != N)
    throw numerical_fault("solve_dense: shape mismatch");
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r * N + col]) > std::abs(a[piv * N + col])) piv = r;
    if (a[piv * N + col] == 0.0)
      throw numerical_fault("solve_dense: singular matrix");
    if (piv != col) {
      for (std::size_t c = col; c < N; ++c)
        std::swap(a[piv * N + c], a[col * N + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < N; ++r) {
      const double m = a[r * N + col] / a[col * N + col];
      if (m == 0.0) continue;
      for (std::size_t c = col; c < N; ++c) a[r * N + c] -= m * a[col * N + c];
      b[r] -= m * b[col];
    }
  }
  for (std::size_t row = N; row-- > 0;) {
    double acc = b[row];
    for (std::size_t c = row + 1; c < N; ++c) acc -= a[row * N + c] * b[c];
    b[row] = acc / a[row * N + row];
  }
}

std::uint64_t Lcg::next() {
  state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
  return state_;
}

double Lcg::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Lcg::uniform(double a, double b) { return a + (b - a) * uniform(); }

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const auto t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::vector<std::exception_ptr> errors(t);
  const std::size_t chunk = (n + t - 1) / t;
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w]() {
      const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BLOWUP_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace blowup
