#include "conewave/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "conewave/carleman.hpp"
#include "conewave/geometry.hpp"
#include "conewave/hum.hpp"
#include "conewave/mesh.hpp"
#include "conewave/observability.hpp"
#include "conewave/wave.hpp"

namespace conewave::cli {

namespace {

namespace fs = std::filesystem;
using mesh::Grid;
using mesh::SpatialDomain;

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError(key + ": expected a number, got '" + raw + "'");
  return out;
}

std::string timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// Records every key a subcommand reads (with its resolved value) and rejects
// keys nobody asked for, so typos cannot silently fall back to defaults.
struct KeyReader {
  const Config& cfg;
  std::map<std::string, std::string> resolved;

  explicit KeyReader(const Config& c) : cfg(c) {}

  std::string str(const std::string& key, const std::string& fallback) {
    std::string v = cfg.get(key, fallback);
    resolved[key] = v;
    return v;
  }
  double num(const std::string& key, double fallback) {
    double v = cfg.get_double(key, fallback);
    resolved[key] = num_str(v);
    return v;
  }
  int integer(const std::string& key, int fallback) {
    int v = cfg.get_int(key, fallback);
    resolved[key] = std::to_string(v);
    return v;
  }
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
    std::vector<double> v = cfg.get_list(key, fallback);
    std::string joined;
    for (std::size_t i = 0; i < v.size(); ++i)
      joined += (i ? "," : "") + num_str(v[i]);
    resolved[key] = joined;
    return v;
  }
  void check_unknown() const {
    for (const auto& [k, v] : cfg.values)
      if (!resolved.count(k)) throw ConfigError("unknown config key: " + k);
  }
  void write(const fs::path& dir, const std::string& sub) const {
    std::ofstream out(dir / (sub + ".resolved.cfg"));
    if (!out) throw ConfigError("cannot write resolved config under " + dir.string());
    for (const auto& [k, v] : resolved) out << k << " = " << v << "\n";
  }
};

struct CsvFile {
  std::ofstream out;

  CsvFile(const fs::path& path, const std::string& tool,
          const std::vector<std::string>& notes, const std::string& columns) {
    out.open(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << "# conewave " << tool << "\n";
    out << "# generated " << timestamp() << "\n";
    for (const std::string& n : notes) out << "# " << n << "\n";
    out << columns << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  }
};

fs::path prepare_outdir(KeyReader& keys) {
  fs::path dir = keys.str("output_dir", "out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output_dir " + dir.string());
  return dir;
}

// ---- shared experiment pieces ---------------------------------------------

wave::Coefficients preset_coefficients(const std::string& name) {
  if (name == "zero") return wave::Coefficients::zero(1);
  wave::Coefficients c;
  if (name == "bounded") {
    c.X = [](double t, const std::vector<double>&) {
      return std::vector<double>{0.2 * std::sin(t), 0.1 * std::cos(t)};
    };
    c.V = [](double t, const std::vector<double>&) { return 0.5 * std::cos(t); };
    return c;
  }
  if (name == "drift") {
    c.X = [](double t, const std::vector<double>& x) {
      return std::vector<double>{0.2 * std::sin(t), 0.1 * x[0]};
    };
    c.V = [](double t, const std::vector<double>&) { return 0.5 * std::cos(t); };
    return c;
  }
  throw ConfigError("unknown coefficient preset '" + name + "' (zero, bounded, drift)");
}

// Seeded sample point in the cone exterior with chart-safe margins (the same
// sampling the identity sweeps are calibrated against).
geom::SpacetimePoint sample_point(Rng& rng, const geom::Dimensions& d, double r_max = 5.0,
                                  double tau_min = 0.011) {
  double r = rng.uniform(0.5, 0.98 * r_max);
  double tau = rng.uniform(tau_min, 0.93 * r);
  auto unit = [&](int dim) -> std::vector<double> {
    if (dim == 1) return {rng.uniform() < 0.5 ? -1.0 : 1.0};
    if (dim == 2) {
      double th = rng.uniform(-3.1, 3.1);
      return {std::cos(th), std::sin(th)};
    }
    double th = rng.uniform(0.35, kPi - 0.35);
    double ph = rng.uniform(-3.1, 3.1);
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
  };
  return geom::point_from_polar(tau, r, unit(d.m), unit(d.n));
}

double conformal_probe(const geom::SpacetimePoint& p) {
  double phase = 0.3, s2 = 0.0;
  const double ct[3] = {0.8, -0.5, 0.4};
  const double cx[3] = {0.6, 0.9, -0.7};
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    phase += ct[i] * p.t[i];
    s2 += 0.05 * p.t[i] * p.t[i];
  }
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    phase += cx[i] * p.x[i];
    s2 += 0.05 * p.x[i] * p.x[i];
  }
  return std::sin(phase) * std::exp(-s2);
}

SpatialDomain interval_domain(double lo, double hi, double center) {
  SpatialDomain d;
  d.bounds = {{lo, hi}};
  d.x0 = {center};
  return d;
}

// ---- subcommands -----------------------------------------------------------

bool cmd_verify_geometry(const Config& cfg, std::ostream& out) {
  KeyReader keys(cfg);
  fs::path dir = prepare_outdir(keys);
  std::uint64_t seed = static_cast<std::uint64_t>(keys.integer("seed", 1));
  int points = keys.integer("geometry.points", 100);
  int conf_points = keys.integer("geometry.conformal_points", 8);
  double fd_step = keys.num("geometry.fd_step", 1e-3);
  double tolerance = keys.num("geometry.tolerance", 1e-4);
  keys.check_unknown();
  keys.write(dir, "verify-geometry");
  if (points < 1 || conf_points < 1 || fd_step <= 0 || tolerance <= 0)
    throw ConfigError("verify-geometry: counts must be positive");

  CsvFile csv(dir / "geometry_residuals.csv", "verify-geometry",
              {"decay rows compare fd_step against fd_step / 2 (expected factor 4)"},
              "point,identity-id,analytic,numeric,residual");

  const geom::Dimensions cases[] = {{2, 1}, {2, 2}, {2, 3}, {3, 2}};
  const double eps_cases[] = {0.0, 0.02, 0.05};
  // Rows below the floor are h^{-2}-amplified roundoff (halved-step noise
  // reaches ~4e-9), so their decay ratios carry no signal.
  const double decay_floor = 1e-7;
  bool pass = true;
  double worst = 0.0;
  long rows = 0;
  Rng root(seed);

  for (const auto& d : cases)
    for (double eps : eps_cases) {
      Rng local = root.split("geom-" + std::to_string(d.m) + "-" + std::to_string(d.n) +
                             "-" + num_str(eps));
      for (int k = 0; k < points; ++k) {
        geom::SpacetimePoint p = sample_point(local, d);
        geom::IdentityResiduals coarse = geom::warped_identity_residuals(p, eps, fd_step, d);
        geom::IdentityResiduals fine =
            geom::warped_identity_residuals(p, eps, 0.5 * fd_step, d);
        if (!coarse.bounds_ok || !coarse.root_f_below_rho) pass = false;
        std::string tag = "m" + std::to_string(d.m) + "n" + std::to_string(d.n) + "_e" +
                          num_str(eps) + "_" + std::to_string(k);
        for (std::size_t i = 0; i < coarse.entries.size(); ++i) {
          const geom::IdentityEntry& e = coarse.entries[i];
          csv.row({tag, e.id, num_str(e.analytic), num_str(e.numeric), num_str(e.residual)});
          ++rows;
          worst = std::max(worst, e.residual);
          if (e.residual > tolerance) pass = false;
          if (e.residual > decay_floor) {
            double ratio = e.residual / fine.entries[i].residual;
            csv.row({tag, e.id + ":decay", "4", num_str(ratio), num_str(std::abs(ratio - 4.0))});
            ++rows;
            if (ratio < 3.5 || ratio > 4.5) pass = false;
          }
        }
      }
    }

  double worst_conformal = 0.0;
  for (const auto& d : cases) {
    Rng local = root.split("conf-" + std::to_string(d.m) + "-" + std::to_string(d.n));
    for (int k = 0; k < conf_points; ++k) {
      geom::SpacetimePoint p = sample_point(local, d, 5.0, 0.2);
      geom::ConformalResiduals cr =
          geom::conformal_residuals(p, 0.02, 5.0, conformal_probe, 4e-3, d);
      geom::ConformalResiduals cr2 =
          geom::conformal_residuals(p, 0.02, 5.0, conformal_probe, 2e-3, d);
      std::string tag = "conf_m" + std::to_string(d.m) + "n" + std::to_string(d.n) + "_" +
                        std::to_string(k);
      csv.row({tag, "conformal:transform", "0", num_str(cr.transform_rel),
               num_str(cr.transform_rel)});
      csv.row({tag, "conformal:pullback", "0", num_str(cr.metric_pullback),
               num_str(cr.metric_pullback)});
      rows += 2;
      if (cr.transform_rel > 1e-12 || cr.metric_pullback > 1e-10) pass = false;
      worst_conformal = std::max({worst_conformal, cr.transform_rel, cr.metric_pullback});
      if (cr.wave_law > 1e-9) {
        double ratio = cr.wave_law / cr2.wave_law;
        csv.row({tag, "conformal:wave_law:decay", "4", num_str(ratio),
                 num_str(std::abs(ratio - 4.0))});
        ++rows;
        if (ratio < 3.0 || ratio > 5.0) pass = false;
      }
    }
  }

  out << "verify-geometry: rows=" << rows << " max_identity_residual=" << num_str(worst)
      << " max_conformal_residual=" << num_str(worst_conformal)
      << " status=" << (pass ? "pass" : "fail") << "\n";
  return pass;
}

bool cmd_verify_carleman(const Config& cfg, std::ostream& out) {
  KeyReader keys(cfg);
  fs::path dir = prepare_outdir(keys);
  std::uint64_t seed = static_cast<std::uint64_t>(keys.integer("seed", 1));
  double delta = keys.num("carleman.delta", 0.1);
  double radius = keys.num("carleman.R", 2.0);
  double a_override = keys.num("carleman.a_override", 9.0);
  double b_override = keys.num("carleman.b_override", 0.0);
  int family = keys.integer("carleman.family", 20);
  int nx = keys.integer("carleman.nx", 41);
  double k2 = keys.num("carleman.k2", 0.025);
  int levels = keys.integer("carleman.levels", 2);
  double sigma = keys.num("carleman.sigma", 0.3);
  double horizon = keys.num("carleman.T", 2.1);
  int mono_samples = keys.integer("carleman.monotonicity_samples", 10000);
  int grad_samples = keys.integer("carleman.gradient_samples", 1000);
  keys.check_unknown();
  keys.write(dir, "verify-carleman");
  if (levels < 1 || family < 5) throw ConfigError("verify-carleman: need levels >= 1, family >= 5");

  geom::Dimensions dims{2, 1};
  geom::CarlemanParams params;
  try {
    params = geom::CarlemanParams::from_delta(dims, radius, delta,
                                              a_override > 0 ? a_override : -1.0);
    if (b_override > 0) {
      params.b = b_override;
      params.validate();
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("parameter regime rejected: ") + e.what());
  }

  CsvFile csv(dir / "carleman_report.csv", "verify-carleman",
              {"level -1 holds cross-level and pointwise-sweep aggregates"},
              "term-id,value,level");
  bool pass = true;
  std::vector<double> min_b(levels), min_i(levels);

  for (int level = 0; level < levels; ++level) {
    int nx_l = ((nx - 1) << level) + 1;
    double k2_l = k2 / static_cast<double>(1 << level);
    carleman::EstimateSetup setup = carleman::make_setup(
        interval_domain(1.0, 2.0, 0.0), horizon, {nx_l}, params, sigma, k2_l);
    std::vector<carleman::FieldGen> members =
        carleman::standard_family(setup, family, seed);
    carleman::FamilyResult res = carleman::family_sweep(setup, members);
    for (std::size_t m = 0; m < res.reports.size(); ++m) {
      const carleman::CarlemanReport& r = res.reports[m];
      std::string id = "member" + std::to_string(m);
      csv.row({id + ":ratio_boundary", num_str(r.empirical_ratio(carleman::Form::boundary)),
               std::to_string(level)});
      csv.row({id + ":ratio_interior", num_str(r.empirical_ratio(carleman::Form::interior)),
               std::to_string(level)});
      csv.row({id + ":lhs_total", num_str(r.lhs_total()), std::to_string(level)});
    }
    min_b[level] = res.min_ratio_boundary;
    min_i[level] = res.min_ratio_interior;
    csv.row({"min_ratio_boundary", num_str(res.min_ratio_boundary), std::to_string(level)});
    csv.row({"min_ratio_interior", num_str(res.min_ratio_interior), std::to_string(level)});
    if (!(res.min_ratio_boundary > 0.0) || !(res.min_ratio_interior > 0.0)) pass = false;
  }
  for (int level = 1; level < levels; ++level) {
    double fb = std::max(min_b[level] / min_b[level - 1], min_b[level - 1] / min_b[level]);
    double fi = std::max(min_i[level] / min_i[level - 1], min_i[level - 1] / min_i[level]);
    csv.row({"cross_level_factor_boundary", num_str(fb), "-1"});
    csv.row({"cross_level_factor_interior", num_str(fi), "-1"});
    if (fb > 2.0 || fi > 2.0) pass = false;
  }

  // weight monotonicity in |t1| over seeded triples inside the cone exterior
  Rng mono_rng(seed + 101);
  int violations = 0;
  for (int k = 0; k < mono_samples; ++k) {
    double r = mono_rng.uniform(1.0, 2.0);
    double big = mono_rng.uniform(0.3, 0.8 * r);
    double small = mono_rng.uniform(0.0, 0.95 * big);
    double t2max = std::sqrt(std::max(0.0, 0.9 * r * r - big * big));
    double t2 = mono_rng.uniform(0.0, t2max);
    if (geom::weight_time_monotonicity(small, big, t2, {r}, params) !=
        geom::Monotonicity::strict)
      ++violations;
  }
  csv.row({"monotonicity_violations", std::to_string(violations), "-1"});
  if (violations != 0) pass = false;

  // weight gradient ratio on the wide sample region
  Rng grad_rng(seed + 202);
  geom::CarlemanParams wide = geom::CarlemanParams::from_delta(dims, 5.0, delta);
  geom::SpacetimePoint origin{{0.0, 0.0}, {0.0}};
  double worst_grad = 0.0;
  int taken = 0;
  while (taken < grad_samples) {
    geom::SpacetimePoint p = sample_point(grad_rng, dims, 5.0, 0.05);
    if (geom::null_frame(p).f < 0.05) continue;
    worst_grad = std::max(worst_grad, geom::weight_gradient_ratio(p, origin, wide, 1e-3));
    ++taken;
  }
  csv.row({"weight_gradient_max", num_str(worst_grad), "-1"});
  if (worst_grad > 50.0) pass = false;

  out << "verify-carleman: min_ratio_boundary=" << num_str(min_b.back())
      << " min_ratio_interior=" << num_str(min_i.back())
      << " monotonicity_violations=" << violations
      << " weight_gradient_max=" << num_str(worst_grad)
      << " status=" << (pass ? "pass" : "fail") << "\n";
  return pass;
}

bool cmd_estimate_observability(const Config& cfg, std::ostream& out) {
  KeyReader keys(cfg);
  fs::path dir = prepare_outdir(keys);
  std::uint64_t seed = static_cast<std::uint64_t>(keys.integer("seed", 1));
  std::string mode_name = keys.str("observability.mode", "exterior");
  double lo = keys.num("domain.lo", mode_name == "interior" ? -1.0 : 1.0);
  double hi = keys.num("domain.hi", mode_name == "interior" ? 1.0 : 2.0);
  std::vector<double> centers_raw =
      keys.list("observability.centers",
                mode_name == "interior" ? std::vector<double>{-0.1, 0.1}
                                        : std::vector<double>{0.0});
  double sigma = keys.num("observability.sigma", 0.3);
  double horizon = keys.num("observability.T", 2.5);
  int nx = keys.integer("observability.nx", 101);
  int levels = keys.integer("observability.levels", 2);
  int ensemble = keys.integer("observability.ensemble", 50);
  int modes = keys.integer("observability.modes", 10);
  std::string preset = keys.str("observability.preset", "zero");
  double max_delta = keys.num("observability.max_delta", 0.25);
  int probe = keys.integer("observability.probe", 0);
  double min_growth = keys.num("observability.min_growth", 5.0);
  keys.check_unknown();
  keys.write(dir, "estimate-observability");

  observability::Mode mode;
  if (mode_name == "exterior")
    mode = observability::Mode::exterior;
  else if (mode_name == "interior")
    mode = observability::Mode::interior;
  else
    throw ConfigError("observability.mode must be exterior or interior");

  std::vector<std::vector<double>> centers;
  for (double c : centers_raw) centers.push_back({c});
  SpatialDomain domain = interval_domain(lo, hi, centers[0][0]);
  Grid grid = mesh::build_grid(domain, horizon, {nx});
  wave::Coefficients coeffs = preset_coefficients(preset);

  CsvFile csv(dir / "observability.csv", "estimate-observability",
              {"sample-id pencil/estimate/delta rows aggregate each level"},
              "sample-id,ratio,level");
  bool pass = true;

  if (probe) {
    observability::ObservationSetup setup =
        observability::make_setup(domain, mode, centers, sigma, horizon, grid, true);
    observability::ProbeReport rep = observability::negative_probe(setup, coeffs, levels);
    for (std::size_t l = 0; l < rep.estimates.size(); ++l)
      csv.row({"probe", num_str(rep.estimates[l]), std::to_string(static_cast<int>(l))});
    csv.row({"probe_growth", num_str(rep.growth), "-1"});
    if (!(rep.growth >= min_growth)) pass = false;
    out << "estimate-observability: probe growth=" << num_str(rep.growth)
        << " infinite=" << (rep.infinite ? 1 : 0) << " status=" << (pass ? "pass" : "fail")
        << "\n";
    return pass;
  }

  observability::ObservationSetup setup =
      observability::make_setup(domain, mode, centers, sigma, horizon, grid);
  observability::ObservabilityReport rep =
      observability::estimate_constant(setup, coeffs, ensemble, levels, seed, modes);
  for (int level = 0; level < levels; ++level) {
    for (std::size_t s = 0; s < rep.sample_ratios[level].size(); ++s)
      csv.row({std::to_string(s), num_str(rep.sample_ratios[level][s]),
               std::to_string(level)});
    csv.row({"pencil", num_str(rep.subspace_estimate[level]), std::to_string(level)});
    csv.row({"estimate", num_str(rep.estimate[level]), std::to_string(level)});
    if (level >= 1)
      csv.row({"delta", num_str(rep.refinement_delta[level - 1]), std::to_string(level)});
  }
  if (!rep.pencil_ok) pass = false;
  if (!std::isfinite(rep.estimate.back())) pass = false;
  if (levels >= 2 && !(rep.refinement_delta.back() <= max_delta)) pass = false;

  out << "estimate-observability: estimate=" << num_str(rep.estimate.back())
      << " delta=" << num_str(levels >= 2 ? rep.refinement_delta.back() : 0.0)
      << " status=" << (pass ? "pass" : "fail") << "\n";
  return pass;
}

bool cmd_synthesize_control(const Config& cfg, std::ostream& out) {
  KeyReader keys(cfg);
  fs::path dir = prepare_outdir(keys);
  double lo = keys.num("domain.lo", 1.0);
  double hi = keys.num("domain.hi", 2.0);
  double center = keys.num("control.center", 0.0);
  double sigma = keys.num("control.sigma", 0.3);
  double horizon = keys.num("control.T", 2.5);
  int nx = keys.integer("control.nx", 201);
  std::string preset = keys.str("control.preset", "drift");
  std::string initial_name = keys.str("control.initial", "fundamental");
  double tol = keys.num("control.tol", 1e-2);
  int max_iter = keys.integer("control.max_iter", 200);
  keys.check_unknown();
  keys.write(dir, "synthesize-control");

  SpatialDomain domain = interval_domain(lo, hi, center);
  Grid grid = mesh::build_grid(domain, horizon, {nx});
  observability::ObservationSetup setup = observability::make_setup(
      domain, observability::Mode::exterior, {{center}}, sigma, horizon, grid);
  wave::Coefficients coeffs = hum::with_dual_potential(preset_coefficients(preset));

  long N = grid.spatial_count();
  hum::PivotPair initial, target;
  initial.c0.assign(N, 0.0);
  initial.c1.assign(N, 0.0);
  target = initial;
  if (initial_name == "fundamental") {
    double span = hi - lo;
    for (long i = 0; i < N; ++i) {
      double s = (lo + i * grid.h[0] - lo) / span;
      initial.c0[i] = std::sin(kPi * s);
      initial.c1[i] = -0.5 * std::sin(2.0 * kPi * s);
    }
  } else if (initial_name != "zero") {
    throw ConfigError("control.initial must be fundamental or zero");
  }

  hum::ControlProblem problem = hum::make_problem(coeffs, initial, target, setup);
  hum::HUMSolution sol = hum::solve_hum(problem, tol, max_iter);
  hum::VerificationReport rep = hum::verify_control(sol, problem);

  CsvFile csv(dir / "hum.csv", "synthesize-control",
              {"iteration rows first, then the terminal summary block"},
              "iteration,residual");
  for (std::size_t i = 0; i < sol.residual_history.size(); ++i)
    csv.row({std::to_string(i + 1), num_str(sol.residual_history[i])});
  csv.row({"terminal_error", num_str(sol.terminal_error)});
  csv.row({"verified_terminal_error", num_str(rep.terminal_error)});
  csv.row({"trace_difference", num_str(rep.trace_difference)});
  csv.row({"control_norm", num_str(rep.control_norm)});
  csv.row({"predicted_control_norm", num_str(sol.predicted_control_norm)});
  csv.row({"cg_iterations", std::to_string(sol.cg_iterations)});
  csv.row({"converged", sol.converged ? "1" : "0"});
  csv.row({"stagnated", sol.stagnated ? "1" : "0"});

  bool pass = sol.converged && rep.support_ok && rep.trace_difference <= 1e-12;
  out << "synthesize-control: iterations=" << sol.cg_iterations
      << " terminal_error=" << num_str(sol.terminal_error)
      << " control_norm=" << num_str(rep.control_norm)
      << " status=" << (pass ? "pass" : "fail") << "\n";
  return pass;
}

bool cmd_energy_report(const Config& cfg, std::ostream& out) {
  KeyReader keys(cfg);
  fs::path dir = prepare_outdir(keys);
  std::uint64_t seed = static_cast<std::uint64_t>(keys.integer("seed", 1));
  int members = keys.integer("energy.members", 20);
  int nx = keys.integer("energy.nx", 101);
  double horizon = keys.num("energy.T", 2.5);
  keys.check_unknown();
  keys.write(dir, "energy-report");

  EnergyFit fit = fit_energy_constants(members, nx, horizon, seed);
  bool pass = std::isfinite(fit.growth_rate) && std::isfinite(fit.window_ratio) &&
              fit.growth_rate > 0.0 && fit.window_ratio > 0.0;

  CsvFile csv(dir / "energy.csv", "energy-report",
              {"growth_rate = " + num_str(fit.growth_rate),
               "window_ratio = " + num_str(fit.window_ratio),
               "members = " + std::to_string(fit.members)},
              "t,E,bound");
  for (std::size_t i = 0; i < fit.rep_time.size(); ++i) {
    csv.row({num_str(fit.rep_time[i]), num_str(fit.rep_energy[i]),
             num_str(fit.rep_bound[i])});
    if (fit.rep_bound[i] < fit.rep_energy[i] * (1.0 - 1e-12)) pass = false;
  }

  out << "energy-report: growth_rate=" << num_str(fit.growth_rate)
      << " window_ratio=" << num_str(fit.window_ratio)
      << " status=" << (pass ? "pass" : "fail") << "\n";
  return pass;
}

void usage(std::ostream& os) {
  os << "usage: conewave <subcommand> <config-file>\n"
        "subcommands:\n"
        "  verify-geometry         identity / conformal residual sweeps\n"
        "  verify-carleman         weighted-estimate reports and empirical constants\n"
        "  estimate-observability  ensemble + subspace estimates, negative probe\n"
        "  synthesize-control      control synthesis and verification\n"
        "  energy-report           energy growth/window constant fits\n"
        "config: flat 'key = value' lines, '#' comments; every key has a default\n";
}

}  // namespace

bool Config::has(const std::string& key) const { return values.count(key) != 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : parse_double(key, it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  double v = parse_double(key, it->second);
  int iv = static_cast<int>(v);
  if (static_cast<double>(iv) != v) throw ConfigError(key + ": expected an integer");
  return iv;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

Config parse_config(std::istream& in) {
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    cfg.values[key] = value;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

std::string read_csv_body(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv file: " + path);
  std::string body, line;
  while (std::getline(in, line)) {
    if (line.rfind("# generated", 0) == 0) continue;
    body += line;
    body += '\n';
  }
  return body;
}

EnergyFit fit_energy_constants(int members, int nx, double T, std::uint64_t seed) {
  if (members < 1) throw DomainError("need at least one ensemble member");
  if (nx < 11 || T <= 0.5) throw DomainError("grid too small for the window fits");
  SpatialDomain dom = interval_domain(1.0, 2.0, 0.0);
  Grid g = mesh::build_grid(dom, T, {nx});
  long N = g.spatial_count();
  int nt = g.nt;

  EnergyFit fit;
  fit.members = members;
  std::vector<double> rep_energy;
  double rep_msum = 0.0;

  // nested window offsets (outer is always the full interval)
  const double margins[][2] = {{0.3, 0.3}, {0.6, 0.6}, {1.0, 1.0}, {0.4, 0.8}};
  Rng root(seed);
  for (int m = 0; m < members; ++m) {
    Rng rng = root.split("energy-" + std::to_string(m));
    double a0 = rng.uniform(0.15, 0.45), w0 = rng.uniform(0.5, 2.0), p0 = rng.uniform(0.0, 6.28);
    double a1 = rng.uniform(0.15, 0.45), w1 = rng.uniform(0.5, 2.0), p1 = rng.uniform(0.0, 6.28);
    double b0 = rng.uniform(0.15, 0.45), w2 = rng.uniform(0.5, 2.0), p2 = rng.uniform(0.0, 6.28);
    wave::Coefficients c;
    c.X = [=](double t, const std::vector<double>&) {
      return std::vector<double>{a0 * std::sin(w0 * t + p0), a1 * std::cos(w1 * t + p1)};
    };
    c.V = [=](double t, const std::vector<double>&) { return b0 * std::cos(w2 * t + p2); };
    wave::CoefficientTable table = wave::sample_coefficients(c, g);
    double msum = table.bounds.M0 + table.bounds.M1;
    if (!(msum > 0.0)) throw SolverError("degenerate coefficient draw");

    std::vector<double> phi0(N, 0.0), phi1(N, 0.0);
    for (int q = 1; q <= 3; ++q) {
      double ca = rng.uniform(-1.0, 1.0), cb = rng.uniform(-1.0, 1.0);
      for (long i = 0; i < N; ++i) {
        double s = std::sin(q * kPi * i * g.h[0]);
        phi0[i] += ca * s;
        phi1[i] += cb * s;
      }
    }
    wave::Trajectory traj = wave::solve_adjoint(table, phi0, phi1);

    std::vector<double> energy(nt);
    for (int j = 0; j < nt; ++j) energy[j] = wave::energy(traj, j);

    // growth fit: all levels against the data level, both directions, plus a
    // coarse all-pairs sweep
    for (int j = 1; j < nt; ++j) {
      double gap = msum * (g.t(j) - g.t(0));
      double slope = std::abs(std::log(energy[j] / energy[0])) / gap;
      fit.growth_rate = std::max(fit.growth_rate, slope);
    }
    int stride = std::max(1, nt / 8);
    for (int j = 0; j < nt; j += stride)
      for (int l = j + stride; l < nt; l += stride) {
        double gap = msum * (g.t(l) - g.t(j));
        double slope = std::abs(std::log(energy[l] / energy[j])) / gap;
        fit.growth_rate = std::max(fit.growth_rate, slope);
      }

    // window fit: H^-1 mass of phi' on the inner window vs L2 mass of phi on
    // the full interval
    std::vector<double> hm1(nt), l2(nt);
    for (int j = 0; j < nt; ++j) {
      double h = mesh::h_minus1_norm(g, traj.time_derivative(j));
      hm1[j] = h * h;
      l2[j] = wave::l2_norm_sq(g, traj.levels[j]);
    }
    auto window_sum = [&](const std::vector<double>& v, int j_lo, int j_hi) {
      double s = 0.0;
      for (int j = j_lo; j <= j_hi; ++j) {
        double w = (j == j_lo || j == j_hi) ? 0.5 : 1.0;
        s += w * v[j] * g.k;
      }
      return s;
    };
    double outer = window_sum(l2, 0, nt - 1);
    for (const auto& mg : margins) {
      int j_lo = static_cast<int>(std::lround(mg[0] / g.k));
      int j_hi = nt - 1 - static_cast<int>(std::lround(mg[1] / g.k));
      if (j_lo < 1 || j_hi <= j_lo) continue;
      double inner = window_sum(hm1, j_lo, j_hi);
      fit.window_ratio = std::max(fit.window_ratio, inner / (msum * outer));
    }

    if (m == 0) {
      rep_energy = energy;
      rep_msum = msum;
    }
  }

  fit.rep_time.resize(nt);
  fit.rep_bound.resize(nt);
  fit.rep_energy = rep_energy;
  for (int j = 0; j < nt; ++j) {
    fit.rep_time[j] = g.t(j);
    fit.rep_bound[j] =
        std::exp(fit.growth_rate * rep_msum * (g.t(j) - g.t(0))) * rep_energy[0];
  }
  return fit;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    usage(err);
    return 2;
  }
  const std::string sub = args[0];
  if (sub == "help" || sub == "--help" || sub == "-h") {
    usage(out);
    return 0;
  }
  const std::set<std::string> known = {"verify-geometry", "verify-carleman",
                                       "estimate-observability", "synthesize-control",
                                       "energy-report"};
  if (!known.count(sub)) {
    err << "unknown subcommand: " << sub << "\n";
    usage(err);
    return 2;
  }
  if (args.size() != 2) {
    err << sub << ": expected exactly one config-file argument\n";
    return 2;
  }
  try {
    Config cfg = load_config(args[1]);
    bool pass = false;
    if (sub == "verify-geometry") pass = cmd_verify_geometry(cfg, out);
    if (sub == "verify-carleman") pass = cmd_verify_carleman(cfg, out);
    if (sub == "estimate-observability") pass = cmd_estimate_observability(cfg, out);
    if (sub == "synthesize-control") pass = cmd_synthesize_control(cfg, out);
    if (sub == "energy-report") pass = cmd_energy_report(cfg, out);
    return pass ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace conewave::cli
