#pragma once

#include <span>
#include <string>
#include <vector>

#include "blowup/numerics.hpp"

namespace blowup {

// Surface of revolution with metric d rho^2 + g(rho)^2 d theta^2, where g is
// entire and odd, g'(0) = 1, and rho_M is the first positive critical point
// of g with g'(rho_M) = -1 (so the surface closes smoothly at both poles).
//
// g is carried as the even series G with g(rho) = rho * G(rho^2); the induced
// nonlinearity f = g * g' is carried the same way, f(rho) = rho * F(rho^2).
// An expansion of g about rho_M in y = rho_M - rho backs all far-pole
// evaluations, where the defining series would lose relative accuracy.
class SurfaceProfile {
 public:
  static SurfaceProfile sphere();
  static SurfaceProfile from_series(std::vector<double> g_coeffs,
                                    double rho_m_hint,
                                    std::string name = "series");

  const std::string& name() const { return name_; }
  bool is_sphere() const { return sphere_; }
  double rho_M() const { return rho_m_; }

  double g(double rho) const;
  double g1(double rho) const;  // g'
  double g2(double rho) const;  // g''
  double g3(double rho) const;  // g'''
  double f(double rho) const;   // g * g'
  double f1(double rho) const;  // f'
  double f2(double rho) const;  // f''

  // Difference forms that stay relatively accurate where the plain values
  // cancel: near rho = 0 (series in rho^2) and near rho_M (reflected form).
  double one_minus_g1(double rho) const;
  double one_plus_g1(double rho) const;  // 1 + g' cancels toward rho_M
  double one_minus_f1(double rho) const;

  // Reflected chart: y = rho_M - rho, gt(y) := g(rho_M - y).
  double g_reflected(double y) const;
  double g1_reflected(double y) const;            // d/dy gt = -g'(rho)
  double one_minus_g1_reflected(double y) const;  // 1 - gt'(y) = 1 + g'(rho)
  double g_reflected_tail(double y) const;        // gt(y) - e_1 y, O(y^2)

  // Truncated Taylor expansions along a jet of rho; the expansion point
  // rho_jet[0] selects the defining or the reflected chart internally.
  TaylorJet g_jet(const TaylorJet& rho) const;
  TaylorJet g1_jet(const TaylorJet& rho) const;
  TaylorJet one_minus_f1_jet(const TaylorJet& rho) const;
  TaylorJet f2_jet(const TaylorJet& rho) const;

  std::span<const double> series_g() const { return cg_; }
  std::span<const double> series_f() const { return cf_; }
  // Coefficients e_k of g(rho_M - y) = sum_{k>=1} e_k y^k (e_0 dropped).
  std::span<const double> series_reflected() const { return refl_; }

 private:
  SurfaceProfile() = default;
  void finalize();

  std::string name_;
  bool sphere_ = false;
  double rho_m_ = 0.0;
  std::vector<double> cg_;    // G_k: g = rho * sum G_k rho^{2k}
  std::vector<double> cf_;    // F_k: f = rho * sum F_k rho^{2k}
  std::vector<double> refl_;  // e_k, k >= 1, of g(rho_M - y) about y = 0
};

// Parses the on-disk description:
//   kind=series|sphere
//   coeffs=c0,c1,...        (series only)
//   rho_m_hint=<float>      (series only)
// Blank lines and lines starting with '#' are ignored.
SurfaceProfile load_surface_profile(const std::string& path);

// Resolves either a builtin name ("sphere") or a path.
SurfaceProfile resolve_surface_profile(const std::string& name_or_path);

struct ValidationRow {
  std::string assumption;
  bool pass = false;
  double worst_rho = 0.0;
  double worst_value = 0.0;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  bool all_pass() const;
};

// Checks the structural assumptions on n_samples points of (0, rho_M):
// oddness of g about 0 and about rho_M, |g'| < 1 inside, the endpoint
// derivative normalizations, and consistency of the two f evaluations.
ValidationReport validate_surface(const SurfaceProfile& p, int n_samples);

}  // namespace blowup
