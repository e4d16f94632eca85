#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "conewave/cli.hpp"
#include "doctest.h"

using namespace conewave;
using namespace conewave::cli;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir() {
  fs::path dir = fs::path("cli_scratch");
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
  fs::path p = scratch_dir() / name;
  std::ofstream f(p);
  f << body;
  return p.string();
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// value of the last `label,value[,...]` row in a CSV body (aggregates repeat
// per refinement level; the last one belongs to the finest level)
double csv_value(const std::string& body, const std::string& label) {
  std::istringstream in(body);
  std::string line, found;
  while (std::getline(in, line))
    if (line.rfind(label + ",", 0) == 0) found = line.substr(label.size() + 1);
  if (found.empty()) {
    FAIL("row not found: ", label);
    return 0.0;
  }
  return std::stod(found);
}

}  // namespace

TEST_CASE("config parsing: trim, comments, duplicates, errors") {
  std::istringstream good(
      "  alpha = 3.5   # trailing comment\n"
      "\n"
      "# full comment line\n"
      "name= hello world \n"
      "alpha = 4.5\n"
      "list = 1, 2,3.5\n"
      "count = 7\n");
  Config cfg = parse_config(good);
  CHECK(cfg.get_double("alpha", 0.0) == 4.5);  // later duplicate wins
  CHECK(cfg.get("name", "") == "hello world");
  CHECK(cfg.get_int("count", 0) == 7);
  std::vector<double> lst = cfg.get_list("list", {});
  REQUIRE(lst.size() == 3);
  CHECK(lst[2] == 3.5);
  CHECK(cfg.get_double("absent", -2.0) == -2.0);
  CHECK_FALSE(cfg.has("absent"));

  std::istringstream no_eq("just words\n");
  CHECK_THROWS_AS(parse_config(no_eq), ConfigError);
  std::istringstream empty_key("= 3\n");
  CHECK_THROWS_AS(parse_config(empty_key), ConfigError);

  std::istringstream bad_num("x = not-a-number\n");
  Config bad = parse_config(bad_num);
  CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);
  std::istringstream frac("x = 2.5\n");
  Config fr = parse_config(frac);
  CHECK_THROWS_AS(fr.get_int("x", 0), ConfigError);
}

TEST_CASE("usage contract: arguments and exit codes") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"help"}).code == 0);
  CHECK(contains(run_cli({"help"}).out, "usage"));
  CHECK(run_cli({"frobnicate", "x.cfg"}).code == 2);
  CHECK(run_cli({"verify-geometry"}).code == 2);
  CHECK(run_cli({"verify-geometry", "a", "b"}).code == 2);

  RunResult missing = run_cli({"verify-geometry", "cli_scratch/definitely_absent.cfg"});
  CHECK(missing.code == 2);
  CHECK(contains(missing.err, "cannot open config file"));
}

TEST_CASE("unknown keys and inadmissible parameters exit with code 2") {
  std::string typo = write_config("typo.cfg",
                                  "output_dir = cli_scratch/typo\n"
                                  "energy.memebrs = 5\n");
  RunResult r = run_cli({"energy-report", typo});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "unknown config key"));

  std::string bad_b = write_config("bad_b.cfg",
                                   "output_dir = cli_scratch/bad_b\n"
                                   "carleman.b_override = 0.9\n");
  RunResult rb = run_cli({"verify-carleman", bad_b});
  CHECK(rb.code == 2);
  CHECK(contains(rb.err, "parameter regime"));
}

TEST_CASE("verify-geometry: artifacts, resolved config, pass status") {
  std::string cfg = write_config("geo.cfg",
                                 "output_dir = cli_scratch/geo\n"
                                 "geometry.points = 3\n"
                                 "geometry.conformal_points = 2\n");
  RunResult r = run_cli({"verify-geometry", cfg});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "verify-geometry:"));
  CHECK(contains(r.out, "status=pass"));

  std::string body = read_csv_body("cli_scratch/geo/geometry_residuals.csv");
  CHECK(contains(body, "# conewave verify-geometry"));
  CHECK(contains(body, "point,identity-id,analytic,numeric,residual"));
  CHECK(contains(body, "conformal:pullback"));
  CHECK_FALSE(contains(body, "# generated"));

  std::ifstream resolved("cli_scratch/geo/verify-geometry.resolved.cfg");
  REQUIRE(resolved.good());
  std::stringstream ss;
  ss << resolved.rdbuf();
  CHECK(contains(ss.str(), "geometry.points = 3"));
  CHECK(contains(ss.str(), "geometry.tolerance = 0.0001"));
  CHECK(contains(ss.str(), "seed = 1"));
}

TEST_CASE("verify-carleman: report rows and positive ratios") {
  std::string cfg = write_config("carl.cfg",
                                 "output_dir = cli_scratch/carl\n"
                                 "carleman.family = 5\n"
                                 "carleman.nx = 21\n"
                                 "carleman.k2 = 0.05\n"
                                 "carleman.levels = 1\n"
                                 "carleman.monotonicity_samples = 300\n"
                                 "carleman.gradient_samples = 50\n");
  RunResult r = run_cli({"verify-carleman", cfg});
  CHECK(r.code == 0);
  std::string body = read_csv_body("cli_scratch/carl/carleman_report.csv");
  CHECK(contains(body, "term-id,value,level"));
  CHECK(csv_value(body, "min_ratio_boundary") > 0.0);
  CHECK(csv_value(body, "min_ratio_interior") > 0.0);
  CHECK(csv_value(body, "monotonicity_violations") == 0.0);
  CHECK(csv_value(body, "weight_gradient_max") <= 50.0);
}

TEST_CASE("estimate-observability: estimate row matches the regression value") {
  std::string cfg = write_config("obs.cfg",
                                 "output_dir = cli_scratch/obs\n"
                                 "observability.nx = 51\n"
                                 "observability.ensemble = 6\n"
                                 "observability.modes = 6\n"
                                 "observability.levels = 2\n");
  RunResult r = run_cli({"estimate-observability", cfg});
  CHECK(r.code == 0);
  std::string body = read_csv_body("cli_scratch/obs/observability.csv");
  CHECK(contains(body, "sample-id,ratio,level"));
  CHECK(csv_value(body, "estimate") == doctest::Approx(4.46635931445).epsilon(1e-6));
  CHECK(csv_value(body, "delta") == doctest::Approx(0.0015952).epsilon(1e-3));
  CHECK(csv_value(body, "delta") <= 0.25);
}

TEST_CASE("estimate-observability: negative probe grows") {
  std::string cfg = write_config("probe.cfg",
                                 "output_dir = cli_scratch/probe\n"
                                 "observability.T = 0.3\n"
                                 "observability.probe = 1\n"
                                 "observability.levels = 2\n"
                                 "observability.nx = 41\n");
  RunResult r = run_cli({"estimate-observability", cfg});
  CHECK(r.code == 0);
  std::string body = read_csv_body("cli_scratch/probe/observability.csv");
  CHECK(csv_value(body, "probe_growth") >= 5.0);
}

TEST_CASE("synthesize-control: converged run with exact re-solve") {
  std::string cfg = write_config("ctl.cfg",
                                 "output_dir = cli_scratch/ctl\n"
                                 "control.nx = 101\n");
  RunResult r = run_cli({"synthesize-control", cfg});
  CHECK(r.code == 0);
  std::string body = read_csv_body("cli_scratch/ctl/hum.csv");
  CHECK(contains(body, "iteration,residual"));
  CHECK(csv_value(body, "converged") == 1.0);
  CHECK(csv_value(body, "stagnated") == 0.0);
  CHECK(csv_value(body, "trace_difference") == 0.0);
  CHECK(csv_value(body, "terminal_error") <= 1e-2);
  CHECK(csv_value(body, "control_norm") == doctest::Approx(5.63020770535).epsilon(1e-6));
}

TEST_CASE("energy-report: fits recorded and bound dominates the energy") {
  std::string cfg = write_config("energy.cfg",
                                 "output_dir = cli_scratch/energy\n"
                                 "energy.members = 5\n"
                                 "energy.nx = 61\n");
  RunResult r = run_cli({"energy-report", cfg});
  CHECK(r.code == 0);
  std::string body = read_csv_body("cli_scratch/energy/energy.csv");
  CHECK(contains(body, "t,E,bound"));
  CHECK(contains(body, "# growth_rate = 0.702460857866"));
  CHECK(contains(body, "# window_ratio = 1.53891138796"));

  std::istringstream in(body);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::stringstream cells(line);
    std::string t, e, b;
    std::getline(cells, t, ',');
    std::getline(cells, e, ',');
    std::getline(cells, b, ',');
    CHECK(std::stod(b) >= std::stod(e) * (1.0 - 1e-12));
    ++rows;
  }
  CHECK(rows > 100);

  CHECK_THROWS_AS(fit_energy_constants(0, 61, 2.5, 1), DomainError);
}

TEST_CASE("determinism: rerun bodies are byte-identical") {
  std::string c1 = write_config("det1.cfg",
                                "output_dir = cli_scratch/det1\n"
                                "observability.nx = 41\n"
                                "observability.ensemble = 4\n"
                                "observability.modes = 5\n"
                                "observability.levels = 1\n");
  std::string c2 = write_config("det2.cfg",
                                "output_dir = cli_scratch/det2\n"
                                "observability.nx = 41\n"
                                "observability.ensemble = 4\n"
                                "observability.modes = 5\n"
                                "observability.levels = 1\n");
  REQUIRE(run_cli({"estimate-observability", c1}).code == 0);
  REQUIRE(run_cli({"estimate-observability", c2}).code == 0);
  CHECK(read_csv_body("cli_scratch/det1/observability.csv") ==
        read_csv_body("cli_scratch/det2/observability.csv"));

  CHECK_THROWS_AS(read_csv_body("cli_scratch/absent.csv"), ConfigError);
}
