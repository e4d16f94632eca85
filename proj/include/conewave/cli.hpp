#pragma once

// Experiment driver.  Subcommands map one-to-one onto the verification and
// control experiments:
//
//   verify-geometry        identity / conformal residual sweeps
//   verify-carleman        weighted-estimate reports and empirical constants
//   estimate-observability ensemble + subspace estimates, negative probe
//   synthesize-control     control synthesis and verification
//   energy-report          energy growth/window constant fits
//
// Each run reads a flat key = value config (every key has a default), writes
// CSV artifacts plus the fully resolved config under output_dir, prints one
// summary line per phase, and returns 0 when all assertions pass, 1 when an
// assertion fails (details in the CSV), 2 on usage or config errors.
// Reruns with the same config are byte-identical except for the single
// "# generated" timestamp line in each CSV header.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "conewave/util.hpp"

namespace conewave::cli {

// Flat key = value file: '#' starts a comment, blank lines are ignored,
// later duplicates win.  Subcommands reject keys they do not know.
struct Config {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;
};

Config parse_config(std::istream& in);        // throws ConfigError
Config load_config(const std::string& path);  // throws ConfigError when missing

// CSV contents with the "# generated" timestamp line removed -- the unit of
// the determinism guarantee.  Throws ConfigError when the file is missing.
std::string read_csv_body(const std::string& path);

// Growth and window constants fitted over an ensemble of seeded bounded
// coefficient pairs on the interval (1, 2):
//   growth_rate: smallest c with E(s) <= exp(c (M0+M1) |t-s|) E(t) at every
//                sampled pair of levels of every member;
//   window_ratio: smallest c with
//                int_{s2}^{t2} |phi'|^2_{H^-1} <= c (M0+M1) int_{s1}^{t1} |phi|^2_{L2}
//                over nested sampled windows s1 < s2 < t2 < t1.
// The representative columns replay member 0 for the CSV artifact.
struct EnergyFit {
  double growth_rate = 0.0;
  double window_ratio = 0.0;
  int members = 0;
  std::vector<double> rep_time, rep_energy, rep_bound;
};
EnergyFit fit_energy_constants(int members, int nx, double T, std::uint64_t seed);

// Runs one subcommand; args excludes the program name (subcommand first,
// then the config path).  Returns the exit code described above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conewave::cli
