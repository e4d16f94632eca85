#pragma once

// Explicit finite-difference machinery for the pair of hyperbolic problems on
// (-T, T) x Omega with zero Dirichlet data:
//
//   adjoint:   phi_tt = Lap phi + X^t phi_t + X^x . grad phi + V phi (+ source)
//   forward:   y_tt   = Lap y   - X^t y_t   - X^x . grad y   + q y  (- control)
//
// plus the two-time antiderivative field z(t1, t2, x) = int_{t1}^{t2} phi and
// its equation residual, duality pairings and energy diagnostics.
//
// Scheme: leapfrog, second order in h and k; the first-order time term is
// centered across levels j-1 / j+1 and solved for diagonally; the first step
// is a Taylor expansion using the equation at t = -T.

#include <functional>
#include <vector>

#include "conewave/mesh.hpp"
#include "conewave/util.hpp"

namespace conewave::wave {

using mesh::Grid;

using ScalarFn = std::function<double(double, const std::vector<double>&)>;
using VectorFn = std::function<std::vector<double>(double, const std::vector<double>&)>;

struct Coefficients {
  VectorFn X;  // (t, x) -> (X^t, X^x_1 .. X^x_n)
  ScalarFn V;  // adjoint potential
  ScalarFn q;  // forward potential
  static Coefficients zero(int n);
};

struct CoefficientBounds {
  double M0 = 0.0;      // sup |V|
  double M1 = 0.0;      // max( sup |X| / sqrt(R_plus), sup |grad_{t,x} X| )
  double M = 1.0;       // max(1, M0, M1)
  double R_plus = 0.0;  // sup over Omega of |x - x0|
  double R_minus = 0.0; // inf over Omega of |x - x0|
};

// Coefficients sampled once onto every (time level, spatial node); the
// solvers and the z-equation residual read these tables.
struct CoefficientTable {
  Grid grid;
  std::vector<std::vector<double>> xt;               // [level][node]
  std::vector<std::vector<std::vector<double>>> xx;  // [axis][level][node]
  std::vector<std::vector<double>> v, q;             // [level][node]
  CoefficientBounds bounds;
};

CoefficientTable sample_coefficients(const Coefficients& c, const Grid& grid);

// Forward-in-reversed-time counterpart: X^t(t,x) -> -X^t(-t,x),
// X^x(t,x) -> X^x(-t,x), V and q evaluated at -t.  Solving forward on the
// result and flipping the level order solves the original system backwards.
Coefficients reverse_coefficients(const Coefficients& c);

struct Trajectory {
  Grid grid;
  std::vector<std::vector<double>> levels;  // [time level][spatial node]
  CoefficientBounds bounds;

  const std::vector<double>& at(int j) const { return levels[j]; }
  // O(k^2) time derivative: centered inside, one-sided at the two ends
  std::vector<double> time_derivative(int j) const;
};

struct State {
  mesh::Field phi, phi_t;
  double time = 0.0;
};
State state_at(const Trajectory& traj, int j);

// Adjoint solve from data (phi(-T), phi_t(-T)) = (phi0, phi1); `source`, when
// set, adds S(t, x) to the right-hand side (manufactured-solution hook).
Trajectory solve_adjoint(const CoefficientTable& table, const std::vector<double>& phi0,
                         const std::vector<double>& phi1, const ScalarFn& source = {});

// Forward solve; `control` (when non-empty) holds F already multiplied by the
// localization fraction, one vector per time level, subtracted from the RHS
// of the y_tt form (so the PDE reads ... + q y = F 1_W).
Trajectory solve_controlled(const CoefficientTable& table, const std::vector<double>& y0,
                            const std::vector<double>& y1,
                            const std::vector<std::vector<double>>& control = {});

// Trapezoid L2(Omega)^2 norm of a spatial field.
double l2_norm_sq(const Grid& grid, const std::vector<double>& field);

// E(t_j) = (|phi|_{L2}^2 + |phi_t|_{H^-1}^2) / 2.
double energy(const Trajectory& traj, int j);

// Conserved duality pairing between a forward solution y and an adjoint
// solution phi: P(t) = int_Omega (y_t phi - y phi_t + X^t y phi) dx, constant
// in t up to O(h^2 + k^2) when q = V - div_{t,x} X.  Returns P at each level.
std::vector<double> duality_pairing(const Trajectory& y, const Trajectory& phi,
                                    const CoefficientTable& table);

// z(t1, t2, x) = int_{t1}^{t2} phi(s, x) ds, stored through the cumulative
// antiderivative I[level] so the (t1, t2) cube never materializes.  The
// two-time grid step is stride * k for the largest admissible stride with
// stride * k <= k2_request (strides divide the level count evenly).
struct TwoTimeField {
  Grid grid2;  // time_axes = 2
  int stride = 1;
  std::vector<std::vector<double>> I;  // [base level][node]

  long nspace() const { return static_cast<long>(I.empty() ? 0 : I[0].size()); }
  int base_level(int j) const { return j * stride; }
  double z(int j1, int j2, long node) const {
    return I[base_level(j2)][node] - I[base_level(j1)][node];
  }
  void z_row(int j1, int j2, std::vector<double>& out) const;
};

TwoTimeField build_z(const Trajectory& traj, double k2_request);

// Max-norm over interior (t1, t2, x) nodes of
//   z_{t1 t1} + z_{t2 t2} - Lap z - int_{t1}^{t2} (V phi + X^t phi_t + X^x . grad phi) ds,
// all derivatives centered, the s-integral by the same cumulative trapezoid.
double z_residual(const TwoTimeField& z, const Trajectory& traj,
                  const CoefficientTable& table);

}  // namespace conewave::wave
