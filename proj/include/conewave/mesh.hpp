#pragma once

// Space-time discretization: tensor-product grids on (-T, T) x Omega with an
// optional second time axis, region masks with cut-cell volume fractions,
// trapezoid quadrature over masked regions, and discrete Laplacian / Dirichlet
// H^{-1} machinery.
//
// Conventions:
//   * flat node indexing is row-major with the LAST axis fastest; for masks
//     the time axes (if any) come first, then the spatial axes;
//   * node coordinates are always recomputed as lo + i * step so repeated
//     queries are bitwise reproducible;
//   * quadrature weight of a node = prod over axes of step * (1/2 at the two
//     ends) * cut-cell fraction, so trapezoid end-halving and geometric
//     clipping compose.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "conewave/util.hpp"

namespace conewave::mesh {

struct SpatialDomain {
  // interval when bounds.size() == 1, axis-aligned box when 2
  std::vector<std::pair<double, double>> bounds;
  std::vector<double> x0;  // observation offset; may lie outside the closure

  int n() const { return static_cast<int>(bounds.size()); }
  double lo(int a) const { return bounds[a].first; }
  double hi(int a) const { return bounds[a].second; }
  double length(int a) const { return bounds[a].second - bounds[a].first; }
  double diameter() const;
  void validate() const;  // throws DomainError on a degenerate description
};

struct Grid {
  SpatialDomain domain;
  std::vector<int> nx;     // nodes per spatial axis (>= 3 each)
  std::vector<double> h;   // spacing per spatial axis
  double T = 0.0;          // time runs over [-T, T]
  int nt = 0;              // odd, so t = 0 is a node
  double k = 0.0;          // time step
  int time_axes = 1;       // 1 for trajectories, 2 for two-time fields
  bool k_clamped = false;  // true when a requested step violated the CFL bound

  int n() const { return static_cast<int>(nx.size()); }
  double x(int axis, int i) const { return domain.lo(axis) + i * h[axis]; }
  double t(int j) const { return -T + j * k; }
  double h_min() const;
  long spatial_count() const;
  long spatial_index(const std::vector<int>& ix) const;
  bool on_spatial_boundary(const std::vector<int>& ix) const;
};

// Time-stepping grid.  The time step obeys k <= cfl * h_min (cfl defaults to
// 0.9 / sqrt(n); values above 1 / sqrt(n) are rejected).  A positive
// k_request is honored when admissible and otherwise clamped with
// k_clamped = true.  The node count along time is always odd.
Grid build_grid(const SpatialDomain& domain, double T, const std::vector<int>& nx,
                double cfl = -1.0, double k_request = -1.0);

// Grid for fields over (t1, t2, x).  Nothing is time-stepped on it, so the
// step has no CFL tie: the largest step <= k_request giving an odd node count
// is used on both time axes.
Grid two_time_grid(const SpatialDomain& domain, double T, const std::vector<int>& nx,
                   double k_request);

struct RegionMask {
  std::vector<int> shape;            // node counts, time axes first
  std::vector<double> step;          // per-axis quadrature step
  std::vector<std::uint8_t> inside;  // node-level indicator
  std::vector<double> fraction;      // cut-cell weight in [0, 1]

  std::size_t nodes() const;
  std::size_t flat(const std::vector<int>& idx) const;
  double fraction_sum() const;
  bool empty() const;  // no node carries positive fraction
};

// Node-indexed values on a grid (1 or 2 time axes, or purely spatial).
struct Field {
  std::vector<int> shape;
  std::vector<double> data;

  static Field zeros(std::vector<int> shape);
  std::size_t nodes() const { return data.size(); }
  void check_finite(const char* what) const;  // throws SolverError
};

// All-ones mask over the spatial grid with `time_axes` leading time axes
// (0 gives a purely spatial mask).
RegionMask full_mask(const Grid& grid, int time_axes);

// Spatial mask flagging every node of the discrete boundary.
RegionMask boundary_mask(const Grid& grid);

// Spatial boundary nodes where the outward face normal nu satisfies
// nu . (x - x0) > 0.  A corner node is included when any face owning it
// passes the test (faces are the natural integration panels).
RegionMask gamma_plus(const Grid& grid, const std::vector<double>& x0);

// Nodes of Omega within Euclidean distance sigma of the flagged-node set of
// `gamma` (cut-cell fractions across the inner edge).  An empty result is
// legal; callers should warn, not fail.
RegionMask omega_region(const Grid& grid, const RegionMask& gamma, double sigma);

// Cone-exterior mask {sum (x - x0)^2 > sum t^2} over (t, x) nodes
// (time_dims = 1) or (t1, t2, x) nodes (time_dims = 2, on a two-time grid).
RegionMask cone_regions(const Grid& grid, const std::vector<double>& x0, int time_dims);

// Product of fractions, logical AND of indicators.  Shapes and steps must
// match.
RegionMask intersect(const RegionMask& a, const RegionMask& b);

// Replicate a spatial mask along `time_axes` leading time axes.
RegionMask extend_in_time(const Grid& grid, const RegionMask& spatial, int time_axes);

// Trapezoid quadrature over the masked region.  `value` is consulted only at
// nodes with positive fraction; a non-finite value there aborts with the
// node's multi-index in the message.  Summation runs in flat node order.
double integrate(const RegionMask& mask, const std::function<double(std::size_t)>& value);
double integrate(const RegionMask& mask, const std::vector<double>& values);

// Dirichlet Poisson solve -Laplace w = rhs on the spatial grid (zero boundary
// values; boundary entries of rhs are ignored).  Direct tridiagonal solve in
// 1D, conjugate gradients (relative residual <= 1e-12) in 2D.
std::vector<double> poisson_dirichlet(const Grid& grid, const std::vector<double>& rhs);

// Second-order discrete Laplacian with homogeneous Dirichlet boundary:
// output is zero on boundary nodes and uses stored neighbor values elsewhere.
std::vector<double> apply_laplacian(const Grid& grid, const std::vector<double>& field);

// Dual Dirichlet norm: solve -Laplace w = field, return sqrt(<w, field>_h)
// (= the discrete grad-norm of w by summation by parts).
double h_minus1_norm(const Grid& grid, const std::vector<double>& field);

}  // namespace conewave::mesh
