#include "blowup/transference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "blowup/errors.hpp"
#include "blowup/numerics.hpp"

namespace blowup {

namespace {

struct Mesh {
  std::vector<double> r, w;  // nodes and weights, W(R) folded into w
};

Mesh build_mesh(const SpectralWorkspace& ws, double xi_fast,
                const TransferenceOptions& opt) {
  if (!(opt.r_cut > 1.0) || !(opt.cell_max > 0.0) || opt.gl_order < 2 ||
      opt.gl_order > 64)
    throw numerical_fault("transference: degenerate quadrature options");
  const double width = std::min(opt.cell_max, 1.2 / std::sqrt(xi_fast));
  const auto cells =
      static_cast<std::size_t>(std::ceil(opt.r_cut / width));
  const QuadRule& gl = gauss_legendre(opt.gl_order);
  const std::size_t per = gl.x.size();
  Mesh m;
  m.r.resize(cells * per);
  m.w.resize(cells * per);
  const FundamentalSystem& fs = ws.system();
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = opt.r_cut * static_cast<double>(c) / cells;
    const double b = opt.r_cut * static_cast<double>(c + 1) / cells;
    for (std::size_t k = 0; k < per; ++k) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[k];
      m.r[c * per + k] = r;
      m.w[c * per + k] = 0.5 * (b - a) * gl.w[k] * fs.potential_W(r);
    }
  }
  return m;
}

}  // namespace

KernelTable::KernelTable(const SpectralWorkspace& ws,
                         std::span<const double> xi_grid,
                         TransferenceOptions opt)
    : opt_(opt), xi_(xi_grid.begin(), xi_grid.end()) {
  const std::size_t n = xi_.size();
  if (n < 2) throw numerical_fault("transference: grid needs two nodes");
  for (std::size_t i = 0; i < n; ++i)
    if (!(xi_[i] > 0.0) || (i > 0 && !(xi_[i] > xi_[i - 1])))
      throw numerical_fault("transference: grid must be positive ascending");
  if (opt_.diag_band < 1)
    throw numerical_fault("transference: diag_band must be at least 1");

  const Mesh mesh = build_mesh(ws, xi_.back(), opt_);
  const std::size_t m = mesh.r.size();
  const int threads = resolve_thread_count(opt_.threads);

  std::vector<std::vector<double>> rows(n);
  rho_.assign(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    rows[i] = ws.phi_row(mesh.r, xi_[i]).phi;
    rho_[i] = ws.measure_point(xi_[i]).rho;
  });

  f_.assign(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      if (i <= j)
        for (std::size_t k = 0; k < m; ++k)
          acc += mesh.w[k] * rows[i][k] * rows[j][k];
      else
        for (std::size_t k = m; k-- > 0;)
          acc += mesh.w[k] * rows[i][k] * rows[j][k];
      f_[i * n + j] = acc;
    }
  });
}

double KernelTable::F(std::size_t i, std::size_t j) const {
  const std::size_t n = xi_.size();
  if (i >= n || j >= n)
    throw numerical_fault("transference: index outside the grid");
  return f_[i * n + j];
}

double KernelTable::symmetry_defect() const {
  const std::size_t n = xi_.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      worst = std::max(worst, std::abs(f_[i * n + j] - f_[j * n + i]));
  return worst;
}

bool KernelTable::in_band(std::size_t i, std::size_t j) const {
  const auto d = i > j ? i - j : j - i;
  return d < static_cast<std::size_t>(opt_.diag_band);
}

double KernelTable::K0(std::size_t i, std::size_t j) const {
  const double fij = F(i, j);
  if (in_band(i, j)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "transference: (%zu, %zu) lies in the diagonal band: use "
                  "diag_coefficient and a principal-value rule",
                  i, j);
    throw numerical_fault(buf);
  }
  return rho_[i] * fij / (xi_[i] - xi_[j]);
}

double KernelTable::diag_coefficient(std::size_t i) const {
  const std::size_t n = xi_.size();
  if (i >= n) throw numerical_fault("transference: index outside the grid");
  if (i == 0 || i + 1 == n)
    throw numerical_fault(
        "transference: diagonal coefficient is centered: interior nodes only");
  const double slope = (std::log(rho_[i + 1]) - std::log(rho_[i - 1])) /
                       (std::log(xi_[i + 1]) - std::log(xi_[i - 1]));
  return -(1.5 + slope);
}

double transference_F(const SpectralWorkspace& ws, double xi, double eta,
                      TransferenceOptions opt) {
  if (!(xi > 0.0) || !(eta > 0.0))
    throw numerical_fault("transference: frequencies must be positive");
  const Mesh mesh = build_mesh(ws, std::max(xi, eta), opt);
  const std::vector<double> a = ws.phi_row(mesh.r, xi).phi;
  const std::vector<double> b = ws.phi_row(mesh.r, eta).phi;
  double acc = 0.0;
  for (std::size_t k = 0; k < mesh.r.size(); ++k)
    acc += mesh.w[k] * a[k] * b[k];
  return acc;
}

double transference_dFdeta(const SpectralWorkspace& ws, double xi, double eta,
                           TransferenceOptions opt) {
  if (!(xi > 0.0) || !(eta > 0.0))
    throw numerical_fault("transference: frequencies must be positive");
  const Mesh mesh = build_mesh(ws, std::max(xi, eta), opt);
  const std::vector<double> a = ws.phi_row(mesh.r, xi).phi;
  const PhiRow be = ws.phi_row(mesh.r, eta, true);
  double acc = 0.0;
  for (std::size_t k = 0; k < mesh.r.size(); ++k)
    acc += mesh.w[k] * a[k] * be.phi_xi[k];
  return acc;
}

}  // namespace blowup
