#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "blowup/evolution.hpp"
#include "blowup/harmonic_map.hpp"
#include "blowup/numerics.hpp"
#include "blowup/spectral.hpp"
#include "blowup/surface.hpp"
#include "blowup/transference.hpp"

namespace {

using namespace blowup;

const HarmonicMap& sphere_map() {
  static HarmonicMap hm = solve_harmonic_map(SurfaceProfile::sphere());
  return hm;
}

const SpectralWorkspace& sphere_ws() {
  static SpectralWorkspace ws(sphere_map());
  return ws;
}

void BM_HarmonicMapSolve(benchmark::State& state) {
  const SurfaceProfile sphere = SurfaceProfile::sphere();
  for (auto _ : state) {
    HarmonicMap hm = solve_harmonic_map(sphere);
    benchmark::DoNotOptimize(hm.Q0());
  }
}
BENCHMARK(BM_HarmonicMapSolve)->Unit(benchmark::kMillisecond);

void BM_SpectralMeasurePoint(benchmark::State& state) {
  const SpectralWorkspace& ws = sphere_ws();
  const double xi = std::pow(10.0, static_cast<double>(state.range(0)));
  for (auto _ : state) {
    MeasureSample s = ws.measure_point(xi);
    benchmark::DoNotOptimize(s.rho);
  }
}
BENCHMARK(BM_SpectralMeasurePoint)->Arg(-2)->Arg(0)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_EvolutionStep(benchmark::State& state) {
  const SurfaceProfile sphere = SurfaceProfile::sphere();
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const double h = 2.0 / static_cast<double>(n);
  RadialWaveField field(sphere, h, n);
  std::vector<double> u(n + 1, 0.0), ut(n + 1, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    const double x = (field.r(j) - 0.7) / 0.2;
    u[j] = 0.4 * field.r(j) * std::exp(-x * x);
  }
  field.set_state(u, ut);
  const double dt = 0.5 * h;
  for (auto _ : state) {
    field.step(dt);
    benchmark::DoNotOptimize(field.u().data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n));
}
BENCHMARK(BM_EvolutionStep)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);

void BM_TransferenceKernelFill(benchmark::State& state) {
  const SpectralWorkspace& ws = sphere_ws();
  const std::vector<double> grid = logspace(0.1, 4.0, 4);
  TransferenceOptions opt;
  opt.r_cut = 250.0;
  for (auto _ : state) {
    KernelTable table(ws, grid, opt);
    benchmark::DoNotOptimize(table.symmetry_defect());
  }
}
BENCHMARK(BM_TransferenceKernelFill)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
