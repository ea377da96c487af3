#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blowup/profile.hpp"
#include "blowup/surface.hpp"

namespace blowup {

// Radial semilinear wave field on r in [0, n h], nodes r_j = j h.
// Node 0 is the axis (u = 0 always) and node n is pinned to its initial
// value.  The acceleration is the flux form
//   a_j = [r_{j+1/2}(u_{j+1}-u_j) - r_{j-1/2}(u_j-u_{j-1})] / (h^2 r_j)
//         - f(u_j)/r_j^2,
// the exact gradient of the discrete energy below, so velocity-Verlet
// stepping keeps the energy drift bounded and oscillatory.
class RadialWaveField {
 public:
  RadialWaveField(const SurfaceProfile& surface, double h, std::size_t cells);

  std::size_t cells() const { return n_; }
  double h() const { return h_; }
  double r(std::size_t j) const { return h_ * static_cast<double>(j); }

  void set_state(std::span<const double> u, std::span<const double> ut);
  std::span<const double> u() const { return u_; }
  std::span<const double> ut() const { return ut_; }

  // Exponential velocity damping on r >= r_start; strength 0 disables.
  // Damping breaks the exact time reversibility of the integrator.
  void set_sponge(double r_start, double strength);

  void step(double dt);

  // sum_j h r_j [ut_j^2 + (g(u_j)/r_j)^2]/2
  //   + sum_faces h r_{j+1/2} ((u_{j+1}-u_j)/h)^2 / 2 .
  double energy() const { return local_energy(r(n_) + h_); }
  double local_energy(double r_cut) const;
  double sup_abs_u() const;
  bool finite() const;

 private:
  void acceleration(const std::vector<double>& u, std::vector<double>& a) const;

  SurfaceProfile surface_;
  double h_ = 0.0;
  std::size_t n_ = 0;
  std::vector<double> u_, ut_, acc_, scratch_, damp_;
  bool acc_fresh_ = false;
};

struct EnergyReport {
  double t = 0.0;
  double e_total = 0.0;
  double e_cone = 0.0;  // energy over r < t
  double sup_u = 0.0;
  double min_dt = 0.0;  // smallest |dt| taken so far; 0 before any step
};

struct BlowupRunConfig {
  double t_start = 0.2;
  double t_end = 0.05;
  std::size_t cells = 6400;
  double cfl = 0.5;       // |dt| = cfl h, must stay in (0, 1]
  double r_max = 0.0;     // <= 0 picks 2.5 t_start
  double amplitude = 1.0; // control-run scaling
  bool control = false;   // cos^2-truncated data at rest instead of u1
  bool sponge = false;
  int checkpoints = 33;   // geometric in t
};

// March t_start -> t_end (dt < 0, toward the blow-up time) and sample the
// energy split at geometric checkpoints.  Data is either the corrected
// profile u1(t_start, .) with its exact time derivative, or the control
// bump amplitude Q(lambda(t_start) r) cos^2(pi r / (4 t_start)) supported
// in r < 2 t_start and released at rest.
std::vector<EnergyReport> run_blowup_experiment(const BlowupProfile& profile,
                                                const BlowupRunConfig& cfg);

}  // namespace blowup
