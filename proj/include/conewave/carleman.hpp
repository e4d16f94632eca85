#pragma once

// Numerical assembly of both sides of the weighted (Carleman-type) energy
// estimates for the ultrahyperbolic operator d^2_{t1} + d^2_{t2} - Lap acting
// on two-time fields z(t1, t2, x) that vanish on the spatial boundary.
//
// Two forms are assembled over the cone-exterior region {f > 0}:
//   * boundary form: the right-hand side carries a signed flux integral over
//     the spatial boundary, weight zeta * [(1 - eps r) Nf + eps f Nr] |Nz|^2;
//   * interior form: the flux is replaced by observation integrals over a
//     collar omega around the outward-facing boundary part, with weights
//     a^2 R^3 zeta f^{-2} |grad_t z|^2 and a^4 R^4 zeta f^{-3} z^2.
//
// The estimates' constants are existential, so the verification target is
// empirical: the ratio RHS / LHS stays bounded away from zero over a family
// of test fields and under refinement.

#include <cstdint>
#include <functional>
#include <vector>

#include "conewave/geometry.hpp"
#include "conewave/mesh.hpp"
#include "conewave/util.hpp"
#include "conewave/wave.hpp"

namespace conewave::carleman {

// Quadrature context shared by every report assembly.
struct EstimateSetup {
  mesh::Grid grid;  // two leading time axes (t1, t2), then space
  geom::CarlemanParams params;
  mesh::RegionMask cone;   // {f > 0} over (t1, t2, x), cut-cell fractions
  mesh::RegionMask omega;  // ((-T,T)^2 x collar) intersect {f > 0}
  double sigma = 0.0;      // collar width used to build omega
  double r_plus = 0.0;     // sup over the closure of |x - x0|
  double tau_min = 0.0;    // |t| band excluded from chart-based densities

  const std::vector<double>& x0() const { return grid.domain.x0; }
};

// Builds the two-time grid (largest step <= k2_request with an odd node
// count), the cone mask, and the observation collar of width sigma around
// the outward-facing boundary part {nu . (x - x0) > 0}.  Requires
// params.R >= sup |x - x0| and T >= sup |x - x0| + 2 k2 (so every node that
// can meet the cone keeps full time stencils).  tau_min defaults to the
// two-time step.
EstimateSetup make_setup(const mesh::SpatialDomain& domain, double T,
                         const std::vector<int>& nx, const geom::CarlemanParams& params,
                         double sigma, double k2_request);

// Pointwise first-order integrand parts at a grid node, all from centered
// differences of z:  d_tau = (t/|t|) . grad_t,  d_r = (x/r) . grad_x,
// d_u = d_tau - d_r, d_v = d_tau + d_r.  The two angular parts are exact
// Cauchy-Schwarz complements and therefore nonnegative.
struct FirstOrderParts {
  double du2 = 0.0;        // |u d_u z|^2
  double dv2 = 0.0;        // |v d_v z|^2
  double ang_space = 0.0;  // f (|grad_x z|^2 - (d_r z)^2)
  double ang_time = 0.0;   // f (|grad_t z|^2 - (d_tau z)^2)
  double total() const { return du2 + dv2 + ang_space + ang_time; }
};

// Throws DomainError when the node is outside {f > 0}, inside the |t|
// exclusion band, too close to the cone center, or lacks stencil neighbors.
FirstOrderParts first_order_density(const EstimateSetup& setup, const mesh::Field& z,
                                    const std::vector<int>& idx);

enum class Form { boundary, interior };

struct CarlemanReport {
  // left-hand side
  double lhs_first_order = 0.0;  // eps * int zeta r^{-1} (first-order parts)
  double lhs_zeroth = 0.0;       // b a^2 * int zeta f^{-1/2} z^2
  // right-hand side
  double rhs_bulk = 0.0;          // (1/a) * int zeta f |Box z|^2
  double rhs_boundary = 0.0;      // signed flux integral (boundary form)
  double rhs_obs_gradient = 0.0;  // a^2 R^3 * int_omega zeta f^{-2} |grad_t z|^2
  double rhs_obs_zeroth = 0.0;    // a^4 R^4 * int_omega zeta f^{-3} z^2

  double lhs_total() const { return lhs_first_order + lhs_zeroth; }
  double rhs_total(Form form) const {
    return form == Form::boundary ? rhs_bulk + rhs_boundary
                                  : rhs_bulk + rhs_obs_gradient + rhs_obs_zeroth;
  }
  double empirical_ratio(Form form) const { return rhs_total(form) / lhs_total(); }
};

// Assembly knobs for audits.  f_floor / f_ceiling restrict the quadrature to
// nodes with f in [f_floor, f_ceiling); unit_weight replaces zeta by 1 and
// accumulates |integrand| (used to bound what a weight cut can discard).
struct ReportOptions {
  double f_floor = 0.0;
  double f_ceiling = 0.0;  // <= 0 means "no ceiling"
  bool unit_weight = false;
};

// Full assembly (both right-hand sides); the form only matters when reading
// ratios out of the report.
CarlemanReport assemble_report(const EstimateSetup& setup, const mesh::Field& z,
                               const ReportOptions& opts = {});
CarlemanReport interior_sides(const EstimateSetup& setup, const mesh::Field& z,
                              const ReportOptions& opts = {});
CarlemanReport boundary_sides(const EstimateSetup& setup, const mesh::Field& z,
                              const ReportOptions& opts = {});

// Outward-normal derivatives of r = |x - x0| and f at a boundary point of an
// axis-aligned face (side = 0 for the low face, 1 for the high face):
// Nr = nu . (x - x0) / r, Nf = nu . (x - x0) / 2.
struct NormalData {
  double nr = 0.0;
  double nf = 0.0;
};
NormalData normal_data(const std::vector<double>& x, const std::vector<double>& x0,
                       int axis, int side);

// Minimum of empirical_ratio over the family.  Throws DomainError when the
// family has fewer than five members or a member has nonpositive LHS.
double empirical_constant(const EstimateSetup& setup, const std::vector<mesh::Field>& family,
                          Form form);

// Lazy variant: members are produced one at a time (large grids).
using FieldGen = std::function<mesh::Field()>;
double empirical_constant(const EstimateSetup& setup, const std::vector<FieldGen>& family,
                          Form form);

// One assembly pass per member, both forms read from it.
struct FamilyResult {
  std::vector<CarlemanReport> reports;
  double min_ratio_boundary = 0.0;
  double min_ratio_interior = 0.0;
};
FamilyResult family_sweep(const EstimateSetup& setup, const std::vector<FieldGen>& family);

// Deterministic mixed test family: per index i (mod 5), variants 0-2 are
// separable bumps (boundary-vanishing sine powers in x, random trig in t1 and
// t2), variant 3 modulates a bump by f^2 (smooth, vanishing quadratically at
// the cone), variant 4 integrates a genuine adjoint trajectory into
// z = int_{t1}^{t2} phi (zero coefficients for even i, mild advection and
// potential otherwise).
std::vector<FieldGen> standard_family(const EstimateSetup& setup, int count,
                                      std::uint64_t seed);

// z built from an adjoint trajectory on a time-refined solver grid whose
// step divides the setup's two-time step.
mesh::Field trajectory_member(const EstimateSetup& setup, const wave::Coefficients& coeffs,
                              const std::vector<double>& phi0, const std::vector<double>& phi1);

// Parameter preset following the strong orderings of the observability
// argument, scaled down to desk size: a = max((m+n)^2, margin M^2 R^3,
// margin M R), eps = delta^2 / R, b = delta / R.
geom::CarlemanParams strong_parameter_preset(const geom::Dimensions& dims, double R, double M,
                                             double delta, double margin = 10.0);

}  // namespace conewave::carleman
