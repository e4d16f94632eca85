#pragma once

// Interior control synthesis by the Hilbert Uniqueness Method.  The control
// acting on the cone-restricted region W of an observability setup is sought
// as F = phi restricted to W, where phi solves the adjoint system from a seed
// in the pivot space L^2 x H^-1.  The seed solves the Gramian equation
//
//   Lambda seed = b,    <Lambda s, psi>_pivot = int_W phi_s phi_psi,
//
// by conjugate gradients in the pivot inner product.  Lambda is realized as
// (adjoint solve) -> (W quadrature weights) -> (exact transpose of the
// discrete adjoint solve) -> (pivot Riesz map), so its symmetry and positive
// semidefiniteness hold to roundoff on the discrete system, not merely to
// truncation order.  The transpose recurrence is itself a leapfrog solve of
// the divergence-form controlled equation backward from T with zero data --
// the discrete version of returning the terminal-trace functional to the
// pivot space.
//
// Exact controllability to a target is reduced to correcting the terminal
// mismatch of the free (uncontrolled) evolution, so a target equal to the
// free endpoint yields b = 0 and a zero control in zero iterations.

#include <string>
#include <vector>

#include "conewave/mesh.hpp"
#include "conewave/observability.hpp"
#include "conewave/util.hpp"
#include "conewave/wave.hpp"

namespace conewave::hum {

// One (value, velocity) pair on the spatial grid: adjoint seeds (phi0, phi1),
// state data (y0, y1), and pivot-space elements all share this layout.
struct PivotPair {
  std::vector<double> c0, c1;
};

struct ControlProblem {
  wave::Coefficients coeffs;  // q should be the dual potential of (X, V)
  PivotPair initial;          // state at t = -T
  PivotPair target;           // desired state at t = +T
  observability::ObservationSetup setup;
  mesh::Grid grid;  // the setup's grid
};

// Validates sizes, Dirichlet traces (boundary values below 1e-10 of the
// max-norm), and the setup's time gate, then packages the problem.
ControlProblem make_problem(const wave::Coefficients& coeffs, PivotPair initial,
                            PivotPair target, const observability::ObservationSetup& setup);

// Forward potential q = V - dt X^t - div X^x (centered differences of the
// coefficient closures), making the controlled system the exact dual of the
// adjoint system so the duality pairing is conserved.
wave::Coefficients with_dual_potential(const wave::Coefficients& c);

// One Gramian application in the pivot space.  Linear, symmetric, positive
// semidefinite: <lambda_apply(s), s>_pivot equals the W-quadrature of phi_s^2
// exactly.  Solver failures propagate.
PivotPair lambda_apply(const PivotPair& seed, const ControlProblem& problem);

struct HUMSolution {
  PivotPair adjoint_seed;
  mesh::Field control;  // (t, x) field, exactly zero outside W
  PivotPair achieved;   // terminal state reached from `initial` under the control
  double terminal_error = 0.0;  // relative, in H^1_0 x L^2
  int cg_iterations = 0;
  double gramian_residual = 0.0;           // final relative CG residual (pivot norm)
  std::vector<double> residual_history;    // relative residual per iteration
  double predicted_control_norm = 0.0;     // sqrt(<b, seed>_pivot)
  bool converged = false;                  // terminal_error <= tol
  bool stagnated = false;                  // residual plateau over 20 iterations
  std::string diagnostics;                 // set when stagnated or iteration-capped
};

// Conjugate gradients on the Gramian equation; the inner CG tolerance is
// tol / 10 on the relative pivot residual.  Unless `assume_observable` is
// set, a cheap one-level observability estimate must come back finite.
HUMSolution solve_hum(const ControlProblem& problem, double tol = 1e-2, int max_iter = 200,
                      bool assume_observable = false);

struct VerificationReport {
  double terminal_error = 0.0;   // recomputed from scratch
  double trace_difference = 0.0; // stored vs re-solved terminal state (relative)
  double control_norm = 0.0;     // ||F||_{L2(W)}
  bool support_ok = false;       // true on return; violations throw instead
};

// Re-solves the controlled system from the stored control and reports the
// terminal errors and the control norm.  A nonzero control value outside W
// is a hard failure (SolverError).
VerificationReport verify_control(const HUMSolution& solution, const ControlProblem& problem);

}  // namespace conewave::hum
