#pragma once
// Small shared utilities: deterministic RNG, error types, numeric helpers.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace conewave {

// Thrown when an argument violates a documented precondition (bad point,
// bad parameter regime, malformed region, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a solver detects instability or fails to converge hard enough
// that the result would be meaningless.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on malformed configuration input (CLI maps this to exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic seeded RNG.  split() derives an independent stream from a
// label so parallel/reordered call sites stay reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // in [0,1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(static_cast<std::uint64_t>(hi - lo + 1) * uniform());
  }
  double gaussian() {
    // Box-Muller; two uniforms per call keeps the stream simple to reason about.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  Rng split(const std::string& label) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the label
    for (unsigned char c : label) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return Rng(h ^ base_seed_mix());
  }
  std::uint64_t raw() { return gen_(); }

 private:
  std::uint64_t base_seed_mix() const {
    // mix the engine's current state hash-free: copy and draw once
    std::mt19937_64 copy = gen_;
    return copy();
  }
  std::mt19937_64 gen_;
};

// Centered first/second differences of a 1-argument callable.
template <class F>
double diff1(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}
template <class F>
double diff2(F&& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double sq(double x) { return x * x; }

// Shortest-format-but-roundtrip double printing for CSV bodies; fixed format
// so reruns are byte-identical.
std::string fmt_double(double v);

}  // namespace conewave
