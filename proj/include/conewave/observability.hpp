#pragma once

// Empirical observability machinery for the adjoint wave system: given data
// (phi0, phi1) at t = -T, how much of the initial pivot-space energy
// |phi0|^2_{L2} + |phi1|^2_{H^-1} is recoverable from the solution's L2 mass
// on a cone-restricted observation region W?
//
// Two configurations:
//   * exterior: one center x0 outside the closure of Omega; W is the sigma
//     collar of the outward boundary part, times (-T, T), inside {r > |t|};
//   * interior: two centers P1, P2 inside Omega at t = 0; W is the dilated
//     union of the per-center regions.
//
// The constants are again existential, so estimates are empirical: maxima of
// sampled Rayleigh quotients plus the exact maximizer over the sampled mode
// subspace (a dense pencil solve), tracked across refinements.  A negative
// probe with T below the reach of the cone should show the quotient growing
// without bound under refinement.

#include <cstdint>
#include <vector>

#include "conewave/mesh.hpp"
#include "conewave/util.hpp"
#include "conewave/wave.hpp"

namespace conewave::observability {

enum class Mode { exterior, interior };

struct ObservationSetup {
  Mode mode = Mode::exterior;
  mesh::Grid grid;  // one time axis
  std::vector<std::vector<double>> centers;
  double sigma = 0.0;
  double T = 0.0;
  double r_plus = 0.0;   // exterior: sup_Omega r; interior: max_i sup_Omega r_i
  double r_minus = 0.0;  // exterior: inf_Omega r; interior: |P2 - P1| / 2
  mesh::RegionMask observed;       // space-time W over (t, x)
  std::vector<double> dilation;    // interior margin per mask axis (physical length)
  bool t_gate_bypassed = false;    // true for deliberately short-T probes
};

// Builds W and the derived radii.  Exterior mode requires one center outside
// the closure of Omega; interior mode requires two distinct centers.  T must
// exceed r_plus unless allow_short_T is set (negative probes).
//
// Interior mode enlarges the union region by a strict margin.  `dilation`
// gives the margin per mask axis (time first) as a physical length; empty
// means two cells of the given grid.  The margin is stored as a length so
// refined setups observe the same region.  Exterior mode takes no margin.
ObservationSetup make_setup(const mesh::SpatialDomain& domain, Mode mode,
                            const std::vector<std::vector<double>>& centers, double sigma,
                            double T, const mesh::Grid& grid, bool allow_short_T = false,
                            const std::vector<double>& dilation = {});

// (|phi0|^2_{L2} + |phi1|^2_{H^-1}) / int_W phi^2 for the adjoint solution
// with data (phi0, phi1) at t = -T.  Returns +infinity when the observed
// mass vanishes.  Degree-0 homogeneous in the data.
double observability_ratio(const ObservationSetup& setup, const wave::Coefficients& coeffs,
                           const std::vector<double>& phi0, const std::vector<double>& phi1);

struct ObservabilityReport {
  std::vector<std::vector<double>> sample_ratios;  // [level][sample]
  std::vector<double> max_sample_ratio;            // per level
  std::vector<double> subspace_estimate;           // pencil maximizer per level
  std::vector<double> estimate;                    // max of the two, per level
  std::vector<double> refinement_delta;            // |e_l - e_{l-1}| / e_{l-1}
  bool pencil_ok = true;                           // dense solve succeeded everywhere
};

// Seeded random data built from the first `modes` Dirichlet modes, plus the
// exact maximizer of the Rayleigh quotient over that mode subspace: the
// smallest eigenvalue mu of the pencil (observation Gram, pivot Gram) gives
// the estimate 1/mu, which dominates every sampled ratio by construction.
// Level l reruns everything on a grid with nx doubled l times.
ObservabilityReport estimate_constant(const ObservationSetup& setup,
                                      const wave::Coefficients& coeffs, int ensemble_size,
                                      int refinement_levels, std::uint64_t seed = 1,
                                      int modes = 10);

struct ProbeReport {
  std::vector<double> estimates;  // subspace estimate per level
  std::vector<int> modes_used;    // subspace size grows with the level
  double growth = 0.0;            // estimates.back() / estimates.front()
  bool infinite = false;          // a level saw zero observed mass
};

// Trend probe for a configuration that should NOT be observable (T <= r_plus
// or an empty region): the subspace estimate is expected to grow under
// refinement as sharper wave packets that avoid W become representable, so
// the subspace is enlarged alongside the grid (10 + 4 * level modes).
// Throws DomainError when the setup is not a probe configuration.
ProbeReport negative_probe(const ObservationSetup& setup, const wave::Coefficients& coeffs,
                           int refinement_levels);

}  // namespace conewave::observability
