#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blowup/errors.hpp"
#include "blowup/evolution.hpp"
#include "blowup/harmonic_map.hpp"
#include "blowup/numerics.hpp"
#include "blowup/profile.hpp"
#include "blowup/spectral.hpp"
#include "blowup/surface.hpp"
#include "blowup/transference.hpp"

namespace blowup {
namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GridSpec {
  double a = 0.0, b = 0.0;
  std::size_t n = 0;
  bool linear = false;
  std::string text;
};

GridSpec parse_grid(const std::string& text, const std::string& flag,
                    bool linear) {
  GridSpec g;
  g.text = text;
  g.linear = linear;
  unsigned long long n = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%llu%c", &g.a, &g.b, &n, &extra) !=
          3 ||
      n == 0)
    throw CLI::ValidationError(flag, "expected a:b:n with integer n >= 1");
  g.n = static_cast<std::size_t>(n);
  if (g.n > 1 && !(g.b > g.a)) throw CLI::ValidationError(flag, "needs b > a");
  if (!linear && !(g.a > 0.0))
    throw CLI::ValidationError(flag, "log grid needs a > 0 (or pass --linear)");
  return g;
}

std::vector<double> make_grid(const GridSpec& g) {
  if (g.n == 1) return {g.a};
  return g.linear ? linspace(g.a, g.b, g.n) : logspace(g.a, g.b, g.n);
}

// Space-separated key=value pairs; insertion order is the echo order, so a
// given command always produces the same manifest for the same inputs.
class Manifest {
 public:
  explicit Manifest(const std::string& cmd) {
    add("cmd", cmd);
    add("version", kVersion);
  }
  Manifest& add(const std::string& key, const std::string& value) {
    if (!text_.empty()) text_ += ' ';
    text_ += key;
    text_ += '=';
    text_ += value.empty() ? std::string("-") : value;
    return *this;
  }
  Manifest& add(const std::string& key, double v) { return add(key, fmt(v)); }
  Manifest& add(const std::string& key, long long v) {
    return add(key, std::to_string(v));
  }
  Manifest& add_grid(const std::string& key, const GridSpec& g) {
    add(key, g.text);
    return add(key + "_kind", g.linear ? "linear" : "log");
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

class Csv {
 public:
  Csv(const std::string& path, const Manifest& manifest,
      const std::string& header) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_)
        throw numerical_fault("cli: cannot open output file " + path);
    }
    stream() << "# manifest: " << manifest.text() << "\n" << header << "\n";
  }
  void row(std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) stream() << ',';
      stream() << c;
      first = false;
    }
    stream() << '\n';
  }
  void row(std::initializer_list<double> cells) {
    bool first = true;
    for (double c : cells) {
      if (!first) stream() << ',';
      stream() << fmt(c);
      first = false;
    }
    stream() << '\n';
  }

 private:
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  std::ofstream file_;
};

struct XY {
  std::vector<double> x, y;
};

XY read_xy_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw numerical_fault("cli: cannot open input file " + path);
  XY d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const char* s = line.c_str();
    char* end = nullptr;
    const double x = std::strtod(s, &end);
    if (end == s) continue;  // header row
    while (*end == ',' || *end == ' ' || *end == '\t') ++end;
    char* end2 = nullptr;
    const double y = std::strtod(end, &end2);
    if (end2 == end)
      throw numerical_fault("transform: malformed row in " + path);
    d.x.push_back(x);
    d.y.push_back(y);
  }
  if (d.x.size() < 2)
    throw numerical_fault("transform: input needs at least two samples");
  for (std::size_t i = 1; i < d.x.size(); ++i)
    if (!(d.x[i] > d.x[i - 1]))
      throw numerical_fault("transform: r column must be strictly ascending");
  if (!(d.x.front() >= 0.0))
    throw numerical_fault("transform: r column must be nonnegative");
  return d;
}

double interp_xy(const XY& d, double x) {
  if (x <= d.x.front() || x >= d.x.back()) {
    if (x == d.x.front()) return d.y.front();
    if (x == d.x.back()) return d.y.back();
    return 0.0;  // compactly supported continuation
  }
  const auto it = std::upper_bound(d.x.begin(), d.x.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - d.x.begin());
  const double t = (x - d.x[i - 1]) / (d.x[i] - d.x[i - 1]);
  return d.y[i - 1] + t * (d.y[i] - d.y[i - 1]);
}

HarmonicMap solved_map(const std::string& profile_arg) {
  return solve_harmonic_map(resolve_surface_profile(profile_arg));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"numerical laboratory for corotational wave-map blow-up"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker cap; 0 falls back to BLOWUP_LAB_THREADS, then 1");

  int rc = 0;
  std::string profile_arg = "sphere";
  std::string out_path, in_path, roundtrip_path;
  std::string r_grid_text = "0.001:1000:241";
  std::string t_grid_text, xi_grid_text, grid_text;
  bool linear = false, free_mode = false;
  double nu = 1.0, xi_value = 1.0;
  int samples = 2000;

  // surface validate
  auto* surface_cmd = app.add_subcommand("surface", "target surface checks");
  surface_cmd->require_subcommand(1);
  surface_cmd->fallthrough();
  auto* validate_cmd = surface_cmd->add_subcommand(
      "validate", "check the profile assumptions, emit a CSV report");
  validate_cmd->fallthrough();
  validate_cmd->add_option("--profile", profile_arg, "builtin name or file")
      ->required();
  validate_cmd->add_option("--samples", samples, "sample count on (0, rho_M)");
  validate_cmd->add_option("--out", out_path, "report path (default stdout)");
  validate_cmd->callback([&] {
    const SurfaceProfile p = resolve_surface_profile(profile_arg);
    const ValidationReport rep = validate_surface(p, samples);
    Manifest m("surface-validate");
    m.add("profile", profile_arg)
        .add("samples", static_cast<long long>(samples))
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "assumption,status,worst_rho,worst_value");
    for (const auto& row : rep.rows)
      csv.row({row.assumption, row.pass ? std::string("pass")
                                        : std::string("fail"),
               fmt(row.worst_rho), fmt(row.worst_value)});
    rc = rep.all_pass() ? 0 : 1;
  });

  // harmonic-map
  auto* hm_cmd = app.add_subcommand(
      "harmonic-map", "solve the equivariant harmonic map ODE, emit Q(r)");
  hm_cmd->fallthrough();
  hm_cmd->add_option("--profile", profile_arg)->required();
  hm_cmd->add_option("--out", out_path)->required();
  hm_cmd->add_option("--r-grid", r_grid_text, "a:b:n sample radii");
  hm_cmd->add_flag("--linear", linear, "linear grid instead of log");
  hm_cmd->callback([&] {
    const GridSpec g = parse_grid(r_grid_text, "--r-grid", linear);
    const HarmonicMap hm = solved_map(profile_arg);
    Manifest m("harmonic-map");
    m.add("profile", profile_arg)
        .add_grid("r_grid", g)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "r,Q,Qprime,Qsecond");
    for (double r : make_grid(g))
      csv.row({r, hm.Q(r), hm.Qprime(r), hm.Qsecond(r)});
  });

  // profile errors / local-energy
  auto* profile_cmd =
      app.add_subcommand("profile", "blow-up family and its residuals");
  profile_cmd->require_subcommand(1);
  profile_cmd->fallthrough();
  auto* errors_cmd = profile_cmd->add_subcommand(
      "errors", "sup of |e0|, |e1| over the half cone per time sample");
  errors_cmd->fallthrough();
  errors_cmd->add_option("--profile", profile_arg)->required();
  errors_cmd->add_option("--nu", nu, "blow-up rate exponent")->required();
  errors_cmd->add_option("--t-grid", t_grid_text, "a:b:n times")->required();
  errors_cmd->add_option("--out", out_path)->required();
  errors_cmd->add_flag("--linear", linear);
  errors_cmd->callback([&] {
    const GridSpec g = parse_grid(t_grid_text, "--t-grid", linear);
    const HarmonicMap hm = solved_map(profile_arg);
    const BlowupProfile prof(hm, nu);
    Manifest m("profile-errors");
    m.add("profile", profile_arg)
        .add("nu", nu)
        .add_grid("t_grid", g)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "t,sup_e0,sup_e1,ratio");
    for (double t : make_grid(g)) {
      const double s0 = prof.sup_t2e0(t) / (t * t);
      const double s1 = prof.sup_t2e1(t) / (t * t);
      csv.row({t, s0, s1, s1 / s0});
    }
  });
  auto* energy_cmd = profile_cmd->add_subcommand(
      "local-energy", "cone energy of u0 against the harmonic map energy");
  energy_cmd->fallthrough();
  energy_cmd->add_option("--profile", profile_arg)->required();
  energy_cmd->add_option("--nu", nu)->required();
  energy_cmd->add_option("--t-grid", t_grid_text, "a:b:n times")->required();
  energy_cmd->add_option("--out", out_path)->required();
  energy_cmd->add_flag("--linear", linear);
  energy_cmd->callback([&] {
    const GridSpec g = parse_grid(t_grid_text, "--t-grid", linear);
    const HarmonicMap hm = solved_map(profile_arg);
    const BlowupProfile prof(hm, nu);
    const double eq = hm.energy(std::numeric_limits<double>::infinity());
    Manifest m("profile-local-energy");
    m.add("profile", profile_arg)
        .add("nu", nu)
        .add_grid("t_grid", g)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "t,Eloc_u0,E_Q");
    for (double t : make_grid(g)) csv.row({t, prof.local_energy_u0(t), eq});
  });

  // spectral measure / basis / transform
  auto* spectral_cmd =
      app.add_subcommand("spectral", "generalized Fourier machinery");
  spectral_cmd->require_subcommand(1);
  spectral_cmd->fallthrough();
  auto* measure_cmd = spectral_cmd->add_subcommand(
      "measure", "scattering coefficient and density on a xi grid");
  measure_cmd->fallthrough();
  measure_cmd->add_option("--profile", profile_arg)->required();
  measure_cmd->add_option("--xi-grid", xi_grid_text, "a:b:n")->required();
  measure_cmd->add_option("--out", out_path)->required();
  measure_cmd->add_flag("--linear", linear);
  measure_cmd->add_flag("--free", free_mode, "replace V by 0 (oracle mode)");
  measure_cmd->callback([&] {
    const GridSpec g = parse_grid(xi_grid_text, "--xi-grid", linear);
    const HarmonicMap hm = solved_map(profile_arg);
    SpectralOptions sopt;
    sopt.free_mode = free_mode;
    sopt.threads = threads;
    const SpectralWorkspace ws(hm, sopt);
    const std::vector<double> grid = make_grid(g);
    const auto rows = ws.measure_grid(grid, threads);
    Manifest m("spectral-measure");
    m.add("profile", profile_arg)
        .add("free", static_cast<long long>(free_mode ? 1 : 0))
        .add_grid("xi_grid", g)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "xi,re_a,im_a,rho");
    for (const auto& s : rows)
      csv.row({s.xi, s.a.real(), s.a.imag(), s.rho});
  });
  auto* basis_cmd = spectral_cmd->add_subcommand(
      "basis", "phi and the outgoing psi+ at one frequency");
  basis_cmd->fallthrough();
  basis_cmd->add_option("--profile", profile_arg);
  basis_cmd->add_option("--xi", xi_value, "frequency")->required();
  basis_cmd->add_option("--out", out_path)->required();
  basis_cmd->add_option("--r-grid", r_grid_text, "a:b:n sample radii");
  basis_cmd->add_flag("--linear", linear);
  basis_cmd->add_flag("--free", free_mode);
  basis_cmd->callback([&] {
    if (basis_cmd->count("--r-grid") == 0) r_grid_text = "0.01:100:181";
    const GridSpec g = parse_grid(r_grid_text, "--r-grid", linear);
    if (!(xi_value > 0.0))
      throw CLI::ValidationError("--xi", "must be positive");
    const HarmonicMap hm = solved_map(profile_arg);
    SpectralOptions sopt;
    sopt.free_mode = free_mode;
    sopt.threads = threads;
    const SpectralWorkspace ws(hm, sopt);
    const std::vector<double> rs = make_grid(g);
    const PhiRow pr = ws.phi_row(rs, xi_value);
    const auto psi = ws.psi_row(rs, xi_value);
    Manifest m("spectral-basis");
    m.add("profile", profile_arg)
        .add("free", static_cast<long long>(free_mode ? 1 : 0))
        .add("xi", xi_value)
        .add_grid("r_grid", g)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "r,phi,phi_prime,psi_plus_re,psi_plus_im");
    for (std::size_t i = 0; i < rs.size(); ++i)
      csv.row({rs[i], pr.phi[i], pr.dphi[i], psi[i].real(), psi[i].imag()});
  });
  auto* transform_cmd = spectral_cmd->add_subcommand(
      "transform", "distorted Hankel transform of a sampled radial function");
  transform_cmd->fallthrough();
  transform_cmd->add_option("--profile", profile_arg);
  transform_cmd->add_option("--in", in_path, "CSV with columns r,value")
      ->required();
  transform_cmd->add_option("--out", out_path)->required();
  transform_cmd->add_option("--xi-grid", xi_grid_text, "a:b:n");
  transform_cmd->add_flag("--linear", linear);
  transform_cmd->add_flag("--free", free_mode);
  transform_cmd->add_option("--roundtrip", roundtrip_path,
                            "also invert and write r,value here");
  transform_cmd->callback([&] {
    if (xi_grid_text.empty()) xi_grid_text = "0.001:1000:240";
    const GridSpec g = parse_grid(xi_grid_text, "--xi-grid", linear);
    const XY data = read_xy_csv(in_path);
    const HarmonicMap hm = solved_map(profile_arg);
    SpectralOptions sopt;
    sopt.free_mode = free_mode;
    sopt.threads = threads;
    const SpectralWorkspace ws(hm, sopt);
    const std::vector<double> grid = make_grid(g);
    const TransformPlan plan(ws, data.x.front(), data.x.back(), grid,
                             threads);
    std::vector<double> on_nodes(plan.r_nodes().size());
    for (std::size_t i = 0; i < on_nodes.size(); ++i)
      on_nodes[i] = interp_xy(data, plan.r_nodes()[i]);
    const std::vector<double> fhat = plan.forward(on_nodes);
    const double i2 = plan.integral_sq(on_nodes);
    const double p2 = plan.plancherel_sq(fhat);
    Manifest m("spectral-transform");
    m.add("profile", profile_arg)
        .add("free", static_cast<long long>(free_mode ? 1 : 0))
        .add("in", in_path)
        .add_grid("xi_grid", g)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "xi,fhat,rho");
    for (std::size_t i = 0; i < grid.size(); ++i)
      csv.row({grid[i], fhat[i], plan.rho()[i]});
    std::printf("plancherel_defect=%s\n",
                fmt(std::abs(p2 - i2) / std::max(i2, 1e-300)).c_str());
    if (!roundtrip_path.empty()) {
      const std::vector<double> back = plan.inverse_on_nodes(fhat);
      Csv rt(roundtrip_path, m, "r,value");
      for (std::size_t i = 0; i < back.size(); ++i)
        rt.row({plan.r_nodes()[i], back[i]});
    }
  });

  // transference kernel
  auto* transference_cmd = app.add_subcommand(
      "transference", "pairing of the measure across frequencies");
  transference_cmd->require_subcommand(1);
  transference_cmd->fallthrough();
  auto* kernel_cmd = transference_cmd->add_subcommand(
      "kernel", "F and the off-diagonal kernel on a shared grid");
  kernel_cmd->fallthrough();
  kernel_cmd->add_option("--profile", profile_arg)->required();
  kernel_cmd->add_option("--grid", grid_text, "a:b:n")->required();
  kernel_cmd->add_option("--out", out_path)->required();
  kernel_cmd->add_flag("--linear", linear);
  kernel_cmd->callback([&] {
    const GridSpec g = parse_grid(grid_text, "--grid", linear);
    const HarmonicMap hm = solved_map(profile_arg);
    SpectralOptions sopt;
    sopt.threads = threads;
    const SpectralWorkspace ws(hm, sopt);
    TransferenceOptions topt;
    topt.threads = threads;
    const KernelTable tbl(ws, make_grid(g), topt);
    Manifest m("transference-kernel");
    m.add("profile", profile_arg)
        .add_grid("grid", g)
        .add("r_cut", topt.r_cut)
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "xi,eta,F,K0_or_nan,diag_if_diagonal");
    const std::size_t n = tbl.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double k0 = tbl.in_band(i, j) ? nan : tbl.K0(i, j);
        const double diag = (i == j && i > 0 && i + 1 < n)
                                ? tbl.diag_coefficient(i)
                                : nan;
        csv.row({tbl.xi(i), tbl.xi(j), tbl.F(i, j), k0, diag});
      }
  });

  // evolve
  auto* evolve_cmd = app.add_subcommand(
      "evolve", "radial wave evolution toward the blow-up time");
  evolve_cmd->fallthrough();
  BlowupRunConfig cfg;
  evolve_cmd->add_option("--profile", profile_arg)->required();
  evolve_cmd->add_option("--nu", nu)->required();
  evolve_cmd->add_option("--t-start", cfg.t_start);
  evolve_cmd->add_option("--t-end", cfg.t_end);
  evolve_cmd->add_option("--n", cfg.cells, "grid cells over [0, r_max]");
  evolve_cmd->add_option("--cfl", cfg.cfl);
  evolve_cmd->add_option("--r-max", cfg.r_max, "0 picks 2.5 t_start");
  evolve_cmd->add_option("--amplitude", cfg.amplitude);
  evolve_cmd->add_option("--checkpoints", cfg.checkpoints);
  evolve_cmd->add_flag("--control", cfg.control,
                       "truncated bump at rest instead of the profile");
  evolve_cmd->add_flag("--sponge", cfg.sponge, "damp the outer ring");
  evolve_cmd->add_option("--out", out_path)->required();
  evolve_cmd->callback([&] {
    const HarmonicMap hm = solved_map(profile_arg);
    const BlowupProfile prof(hm, nu);
    const auto reports = run_blowup_experiment(prof, cfg);
    Manifest m("evolve");
    m.add("profile", profile_arg)
        .add("nu", nu)
        .add("t_start", cfg.t_start)
        .add("t_end", cfg.t_end)
        .add("n", static_cast<long long>(cfg.cells))
        .add("cfl", cfg.cfl)
        .add("r_max", cfg.r_max > 0.0 ? cfg.r_max : 2.5 * cfg.t_start)
        .add("amplitude", cfg.amplitude)
        .add("checkpoints", static_cast<long long>(cfg.checkpoints))
        .add("control", static_cast<long long>(cfg.control ? 1 : 0))
        .add("sponge", static_cast<long long>(cfg.sponge ? 1 : 0))
        .add("threads",
             static_cast<long long>(resolve_thread_count(threads)));
    Csv csv(out_path, m, "t,E_total,Eloc_cone,sup_u,min_dt_used");
    for (const auto& rep : reports)
      csv.row({rep.t, rep.e_total, rep.e_cone, rep.sup_u, rep.min_dt});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  } catch (const invalid_profile_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const numerical_fault& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("blowup-lab");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace blowup
