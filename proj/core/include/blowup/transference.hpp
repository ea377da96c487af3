#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blowup/spectral.hpp"

namespace blowup {

struct TransferenceOptions {
  double r_cut = 2500.0;   // truncation radius of the pairing integral
  double cell_max = 0.66;  // quadrature cell width cap, shrunk with sqrt(xi)
  int gl_order = 8;
  int diag_band = 2;       // |i - j| < diag_band is left to the PV rule
  int threads = 1;
};

// F(xi, eta) = int_0^r_cut W(R) phi(R, xi) phi(R, eta) dR on one shared
// quadrature mesh, plus the pieces of the off-diagonal transference kernel
//   K0(xi, eta) = rho(xi) F(xi, eta) / (xi - eta)
// that are well defined away from the diagonal.  The matrix is filled twice,
// upper triangle summing the nodes forward and lower triangle backward, so
// the symmetry defect reports accumulation noise instead of a tautology.
class KernelTable {
 public:
  KernelTable(const SpectralWorkspace& ws, std::span<const double> xi_grid,
              TransferenceOptions opt = {});

  std::size_t size() const { return xi_.size(); }
  const std::vector<double>& grid() const { return xi_; }
  double xi(std::size_t i) const { return xi_.at(i); }

  double F(std::size_t i, std::size_t j) const;
  double rho(std::size_t i) const { return rho_.at(i); }
  double symmetry_defect() const;  // max |F_ij - F_ji| over the triangle

  bool in_band(std::size_t i, std::size_t j) const;
  double K0(std::size_t i, std::size_t j) const;  // throws inside the band

  // -(3/2 + eta rho'/rho) at node i; centered in log-log, so edges throw.
  double diag_coefficient(std::size_t i) const;

  const TransferenceOptions& options() const { return opt_; }

 private:
  TransferenceOptions opt_;
  std::vector<double> xi_, rho_, f_;
};

// Single-pair pairing integral and its eta derivative on a private mesh
// sized for the faster of the two oscillations.
double transference_F(const SpectralWorkspace& ws, double xi, double eta,
                      TransferenceOptions opt = {});
double transference_dFdeta(const SpectralWorkspace& ws, double xi, double eta,
                           TransferenceOptions opt = {});

}  // namespace blowup
