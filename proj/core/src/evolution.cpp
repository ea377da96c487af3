#include "blowup/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "blowup/errors.hpp"
#include "blowup/numerics.hpp"

namespace blowup {

RadialWaveField::RadialWaveField(const SurfaceProfile& surface, double h,
                                 std::size_t cells)
    : surface_(surface), h_(h), n_(cells) {
  if (!(h > 0.0) || cells < 4)
    throw numerical_fault("evolution: degenerate grid");
  u_.assign(n_ + 1, 0.0);
  ut_.assign(n_ + 1, 0.0);
  acc_.assign(n_ + 1, 0.0);
  scratch_.assign(n_ + 1, 0.0);
}

void RadialWaveField::set_state(std::span<const double> u,
                                std::span<const double> ut) {
  if (u.size() != n_ + 1 || ut.size() != n_ + 1)
    throw numerical_fault("evolution: state size does not match the grid");
  std::copy(u.begin(), u.end(), u_.begin());
  std::copy(ut.begin(), ut.end(), ut_.begin());
  u_[0] = 0.0;
  ut_[0] = 0.0;
  ut_[n_] = 0.0;  // pinned boundary
  acc_fresh_ = false;
}

void RadialWaveField::set_sponge(double r_start, double strength) {
  damp_.clear();
  if (!(strength > 0.0)) return;
  damp_.assign(n_ + 1, 0.0);
  const double r_top = r(n_);
  if (!(r_start < r_top))
    throw numerical_fault("evolution: sponge must start inside the grid");
  for (std::size_t j = 0; j <= n_; ++j) {
    const double q = (r(j) - r_start) / (r_top - r_start);
    if (q > 0.0) damp_[j] = strength * q * q;
  }
}

void RadialWaveField::acceleration(const std::vector<double>& u,
                                   std::vector<double>& a) const {
  a[0] = 0.0;
  a[n_] = 0.0;
  const double inv_h2 = 1.0 / (h_ * h_);
  for (std::size_t j = 1; j < n_; ++j) {
    const double rj = h_ * static_cast<double>(j);
    const double flux = (static_cast<double>(j) + 0.5) * (u[j + 1] - u[j]) -
                        (static_cast<double>(j) - 0.5) * (u[j] - u[j - 1]);
    a[j] = flux * inv_h2 / static_cast<double>(j) -
           surface_.f(u[j]) / (rj * rj);
  }
}

void RadialWaveField::step(double dt) {
  if (!acc_fresh_) {
    acceleration(u_, acc_);
    acc_fresh_ = true;
  }
  const double half = 0.5 * dt;
  for (std::size_t j = 1; j < n_; ++j)
    u_[j] += dt * ut_[j] + half * dt * acc_[j];
  acceleration(u_, scratch_);
  for (std::size_t j = 1; j < n_; ++j)
    ut_[j] += half * (acc_[j] + scratch_[j]);
  acc_.swap(scratch_);
  if (!damp_.empty())
    for (std::size_t j = 1; j < n_; ++j)
      if (damp_[j] > 0.0) ut_[j] *= std::exp(-std::abs(dt) * damp_[j]);
}

double RadialWaveField::local_energy(double r_cut) const {
  double e = 0.0;
  for (std::size_t j = 1; j <= n_; ++j) {
    const double rj = r(j);
    if (rj >= r_cut) break;
    const double gr = surface_.g(u_[j]) / rj;
    e += 0.5 * h_ * rj * (ut_[j] * ut_[j] + gr * gr);
  }
  for (std::size_t j = 0; j < n_; ++j) {
    const double rf = r(j) + 0.5 * h_;
    if (rf >= r_cut) break;
    const double du = (u_[j + 1] - u_[j]) / h_;
    e += 0.5 * h_ * rf * du * du;
  }
  return e;
}

double RadialWaveField::sup_abs_u() const {
  double m = 0.0;
  for (double v : u_) m = std::max(m, std::abs(v));
  return m;
}

bool RadialWaveField::finite() const {
  for (std::size_t j = 0; j <= n_; ++j)
    if (!std::isfinite(u_[j]) || !std::isfinite(ut_[j])) return false;
  return true;
}

std::vector<EnergyReport> run_blowup_experiment(const BlowupProfile& profile,
                                                const BlowupRunConfig& cfg) {
  if (!(cfg.t_end > 0.0) || !(cfg.t_start > cfg.t_end))
    throw numerical_fault("evolution: need 0 < t_end < t_start");
  if (!(cfg.cfl > 0.0) || cfg.cfl > 1.0)
    throw numerical_fault("evolution: cfl must lie in (0, 1]");
  if (cfg.checkpoints < 2)
    throw numerical_fault("evolution: need at least two checkpoints");
  const double r_max = cfg.r_max > 0.0 ? cfg.r_max : 2.5 * cfg.t_start;
  const double h = r_max / static_cast<double>(cfg.cells);
  const double nu = profile.nu();
  const double core = std::pow(cfg.t_end, 1.0 + nu);
  if (core / h < 32.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "evolution: only %.1f cells across the core scale "
                  "t_end^(1+nu) = %.3g; refine the grid",
                  core / h, core);
    throw numerical_fault(buf);
  }

  const HarmonicMap& hm = profile.harmonic_map();
  RadialWaveField field(hm.surface(), h, cfg.cells);
  {
    std::vector<double> u(cfg.cells + 1, 0.0), ut(cfg.cells + 1, 0.0);
    const double lam0 = profile.lambda(cfg.t_start);
    for (std::size_t j = 1; j <= cfg.cells; ++j) {
      const double rj = h * static_cast<double>(j);
      if (cfg.control) {
        if (rj < 2.0 * cfg.t_start) {
          const double c = std::cos(kPi * rj / (4.0 * cfg.t_start));
          u[j] = cfg.amplitude * hm.Q(lam0 * rj) * c * c;
        }
      } else {
        u[j] = profile.u1(cfg.t_start, rj);
        ut[j] = profile.u1_t(cfg.t_start, rj);
      }
    }
    ut[cfg.cells] = 0.0;
    field.set_state(u, ut);
  }
  if (cfg.sponge)
    field.set_sponge(0.8 * r_max, 4.0 / (cfg.t_start - cfg.t_end));

  const double dt_base = -cfg.cfl * h;
  const int K = cfg.checkpoints;
  std::vector<EnergyReport> out;
  out.reserve(static_cast<std::size_t>(K));
  double t = cfg.t_start;
  double min_dt = 0.0;
  out.push_back({t, field.energy(), field.local_energy(t), field.sup_abs_u(),
                 min_dt});
  const double ratio = cfg.t_end / cfg.t_start;
  for (int k = 1; k < K; ++k) {
    const double target =
        cfg.t_start * std::pow(ratio, static_cast<double>(k) / (K - 1));
    while (t > target + 1e-15 * cfg.t_start) {
      const double dt = std::max(dt_base, target - t);
      field.step(dt);
      t += dt;
      const double used = std::abs(dt);
      min_dt = min_dt == 0.0 ? used : std::min(min_dt, used);
      if (!field.finite())
        throw numerical_fault(
            "evolution: field left the finite range: blow-up suspected");
    }
    t = target;
    out.push_back({t, field.energy(), field.local_energy(t),
                   field.sup_abs_u(), min_dt});
  }
  return out;
}

}  // namespace blowup
