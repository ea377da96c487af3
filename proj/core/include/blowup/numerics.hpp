#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "blowup/errors.hpp"

namespace blowup {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

std::vector<double> linspace(double a, double b, std::size_t n);
// Geometric spacing; requires a, b > 0.
std::vector<double> logspace(double a, double b, std::size_t n);

// ---------------------------------------------------------------------------
// Adaptive embedded Runge-Kutta, Dormand-Prince 5(4).
// ---------------------------------------------------------------------------

struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  double h_init = 0.0;  // 0 = choose automatically
  std::size_t max_steps = 4'000'000;
};

using OdeRhs = std::function<void(double x, const double* y, double* dydx)>;

// Integrates y (dimension dim) from x0 to x1, either direction, in place.
void ode_integrate(const OdeRhs& f, int dim, double x0, double x1, double* y,
                   const OdeOptions& opt = {});

// Integrates along monotone nodes xs (increasing or decreasing), landing on
// each node exactly; on_node(i, y) fires for every i including i = 0.
void ode_integrate_nodes(
    const OdeRhs& f, int dim, std::span<const double> xs, double* y,
    const std::function<void(std::size_t, const double*)>& on_node,
    const OdeOptions& opt = {});

// ---------------------------------------------------------------------------
// Quadrature.
// ---------------------------------------------------------------------------

struct QuadRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Gauss-Legendre rule with n points, cached; n in [1, 64].
const QuadRule& gauss_legendre(int n);

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n = 32);

// Composite Gauss-Legendre: cells equal subintervals, n points each.
double integrate_gl_cells(const std::function<double(double)>& f, double a,
                          double b, int cells, int n = 8);

// Adaptive Gauss-Kronrod 7-15 with recursive bisection.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rtol = 1e-10, double atol = 1e-13,
                          int max_depth = 48);

// ---------------------------------------------------------------------------
// Uniform-grid interpolation tables.
// ---------------------------------------------------------------------------

// Cubic Hermite interpolation with caller-supplied exact node derivatives.
class HermiteTable {
 public:
  HermiteTable() = default;
  HermiteTable(double x0, double dx, std::vector<double> y,
               std::vector<double> dy);

  double x_min() const { return x0_; }
  double x_max() const { return x0_ + dx_ * static_cast<double>(n_ - 1); }
  double dx() const { return dx_; }
  std::size_t size() const { return n_; }
  bool contains(double x) const { return x >= x_min() && x <= x_max(); }

  double operator()(double x) const;
  double deriv(double x) const;

  double node_x(std::size_t i) const { return x0_ + dx_ * static_cast<double>(i); }
  double node_value(std::size_t i) const { return y_[i]; }
  double node_deriv(std::size_t i) const { return dy_[i]; }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::size_t n_ = 0;
  std::vector<double> y_, dy_;
};

// Six-point Lagrange interpolation on a uniform grid (no derivatives needed).
class Lagrange6Table {
 public:
  Lagrange6Table() = default;
  Lagrange6Table(double x0, double dx, std::vector<double> y);

  double x_min() const { return x0_; }
  double x_max() const { return x0_ + dx_ * static_cast<double>(y_.size() - 1); }
  std::size_t size() const { return y_.size(); }
  bool contains(double x) const { return x >= x_min() && x <= x_max(); }

  double operator()(double x) const;

  double node_value(std::size_t i) const { return y_[i]; }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> y_;
};

// Cumulative integral of g on the uniform grid x0 + i*dx, i < n, as a Hermite
// table: table(x_i) = base + int_{x0}^{x_i} g, with exact node slopes g(x_i).
HermiteTable cumulative_table(const std::function<double(double)>& g,
                              double x0, double dx, std::size_t n,
                              double base = 0.0, const OdeOptions& opt = {});

// ---------------------------------------------------------------------------
// Truncated Taylor series (jet) arithmetic.
// ---------------------------------------------------------------------------

class TaylorJet {
 public:
  TaylorJet() = default;
  explicit TaylorJet(int order) : c_(static_cast<std::size_t>(order) + 1, 0.0) {}
  static TaylorJet constant(double v, int order);
  static TaylorJet variable(double x0, int order);  // x0 + h

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }
  double operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  double value() const { return c_[0]; }
  // k-th derivative at the expansion point: k! * c_[k].
  double derivative(int k) const;

  TaylorJet& operator+=(const TaylorJet& o);
  TaylorJet& operator-=(const TaylorJet& o);
  TaylorJet& operator*=(double s);
  friend TaylorJet operator+(TaylorJet a, const TaylorJet& b) { return a += b; }
  friend TaylorJet operator-(TaylorJet a, const TaylorJet& b) { return a -= b; }
  friend TaylorJet operator*(TaylorJet a, double s) { return a *= s; }
  friend TaylorJet operator*(double s, TaylorJet a) { return a *= s; }
  TaylorJet operator*(const TaylorJet& o) const;  // truncated product
  TaylorJet reciprocal() const;                   // requires c_[0] != 0

 private:
  std::vector<double> c_;
};

// Evaluates sum_k coeffs[k] * z^k on a jet by Horner's scheme.
TaylorJet poly_eval_jet(std::span<const double> coeffs, const TaylorJet& z);

// ---------------------------------------------------------------------------
// Small solvers and helpers.
// ---------------------------------------------------------------------------

// Root of f on [lo, hi]; requires a sign change.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              int iters = 200);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Solves the n-by-n system a*x = b in place by partial-pivot elimination.
// a is row-major; b is overwritten with the solution.
void solve_dense(std::vector<double>& a, std::vector<double>& b, int n);

// Deterministic 64-bit LCG, for reproducible sample points in tests.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next();
  double uniform();                       // [0, 1)
  double uniform(double a, double b);     // [a, b)

 private:
  std::uint64_t state_;
};

// Runs body(i) for i in [0, n) on `threads` workers over contiguous blocks.
// Deterministic provided each body(i) writes only slot i.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

// requested > 0 wins; otherwise BLOWUP_LAB_THREADS, otherwise 1.
int resolve_thread_count(int requested);

}  // namespace blowup
