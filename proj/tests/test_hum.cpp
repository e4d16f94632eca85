#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "conewave/hum.hpp"
#include "conewave/mesh.hpp"
#include "conewave/observability.hpp"
#include "conewave/wave.hpp"
#include "doctest.h"

using namespace conewave;
using namespace conewave::hum;
using mesh::Grid;
using mesh::SpatialDomain;

namespace {

constexpr double kPi = 3.14159265358979323846;

SpatialDomain shell_domain() {
  SpatialDomain d;
  d.bounds = {{1.0, 2.0}};
  d.x0 = {0.0};
  return d;
}

// Drift 0.2 sin t in time, 0.1 x in space, potential 0.5 cos t; the dual
// potential closes the duality pairing for the controlled system.
wave::Coefficients drift_coeffs() {
  wave::Coefficients c;
  c.X = [](double t, const std::vector<double>& x) {
    return std::vector<double>{0.2 * std::sin(t), 0.1 * x[0]};
  };
  c.V = [](double t, const std::vector<double>&) { return 0.5 * std::cos(t); };
  return with_dual_potential(c);
}

observability::ObservationSetup shell_setup(int nx, double sigma = 0.3, double T = 2.5) {
  SpatialDomain d = shell_domain();
  Grid g = mesh::build_grid(d, T, {nx});
  return observability::make_setup(d, observability::Mode::exterior, {{0.0}}, sigma, T, g);
}

PivotPair smooth_state(const Grid& g) {
  long N = g.spatial_count();
  PivotPair y;
  y.c0.resize(N);
  y.c1.resize(N);
  for (long i = 0; i < N; ++i) {
    double x = 1.0 + i * g.h[0];
    y.c0[i] = std::sin(kPi * (x - 1.0));
    y.c1[i] = -0.5 * std::sin(2.0 * kPi * (x - 1.0));
  }
  return y;
}

PivotPair zero_state(const Grid& g) {
  PivotPair z;
  z.c0.assign(g.spatial_count(), 0.0);
  z.c1.assign(g.spatial_count(), 0.0);
  return z;
}

ControlProblem rest_problem(int nx, double sigma = 0.3) {
  observability::ObservationSetup s = shell_setup(nx, sigma);
  return make_problem(drift_coeffs(), smooth_state(s.grid), zero_state(s.grid), s);
}

// pivot inner product mirrored from the solver (L2 x H^-1 on the grid)
double pivot_inner(const Grid& g, const PivotPair& a, const PivotPair& b) {
  long N = g.spatial_count();
  std::vector<double> w(N, g.h[0]);
  w.front() *= 0.5;
  w.back() *= 0.5;
  double s = 0.0;
  for (long i = 0; i < N; ++i) s += w[i] * a.c0[i] * b.c0[i];
  std::vector<double> az = a.c1, bz = b.c1;
  az.front() = az.back() = 0.0;
  bz.front() = bz.back() = 0.0;
  std::vector<double> lifted = mesh::poisson_dirichlet(g, az);
  for (long i = 0; i < N; ++i) s += g.h[0] * lifted[i] * bz[i];
  return s;
}

}  // namespace

TEST_CASE("dual potential of the drift pair has the closed form 0.3 cos t - 0.1") {
  wave::Coefficients c = drift_coeffs();
  for (double t : {-2.5, -0.7, 0.0, 1.3, 2.5})
    for (double x : {1.0, 1.4, 2.0}) {
      double want = 0.3 * std::cos(t) - 0.1;
      CHECK(c.q(t, {x}) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("zero seed maps to zero under the gramian") {
  ControlProblem p = rest_problem(41);
  PivotPair out = lambda_apply(zero_state(p.grid), p);
  for (double v : out.c0) CHECK(v == 0.0);
  for (double v : out.c1) CHECK(v == 0.0);
}

TEST_CASE("gramian application is linear") {
  ControlProblem p = rest_problem(41);
  long N = p.grid.spatial_count();
  PivotPair a = zero_state(p.grid), b = zero_state(p.grid);
  for (long i = 1; i < N - 1; ++i) {
    double x = 1.0 + i * p.grid.h[0];
    a.c0[i] = std::sin(kPi * (x - 1.0));
    a.c1[i] = 0.4 * (x - 1.0) * (2.0 - x);
    b.c0[i] = std::cos(0.5 * kPi * (x - 1.0)) * (x - 1.0);
    b.c1[i] = std::sin(2.0 * kPi * (x - 1.0));
  }
  PivotPair comb = zero_state(p.grid);
  for (long i = 0; i < N; ++i) {
    comb.c0[i] = 2.0 * a.c0[i] - b.c0[i];
    comb.c1[i] = 2.0 * a.c1[i] - b.c1[i];
  }
  PivotPair la = lambda_apply(a, p), lb = lambda_apply(b, p), lc = lambda_apply(comb, p);
  double scale = 0.0, diff = 0.0;
  for (long i = 0; i < N; ++i) {
    scale = std::max({scale, std::abs(lc.c0[i]), std::abs(lc.c1[i])});
    diff = std::max(diff, std::abs(lc.c0[i] - (2.0 * la.c0[i] - lb.c0[i])));
    diff = std::max(diff, std::abs(lc.c1[i] - (2.0 * la.c1[i] - lb.c1[i])));
  }
  CHECK(scale > 0.0);
  CHECK(diff <= 1e-12 * scale);
}

TEST_CASE("dense gramian is symmetric positive semidefinite to roundoff") {
  ControlProblem p = rest_problem(51);
  long N = p.grid.spatial_count();
  long M = N - 2;
  std::vector<PivotPair> basis;
  for (long e = 0; e < 2 * M; ++e) {
    PivotPair s = zero_state(p.grid);
    if (e < M)
      s.c0[1 + e] = 1.0;
    else
      s.c1[1 + (e - M)] = 1.0;
    basis.push_back(s);
  }
  Eigen::MatrixXd K(2 * M, 2 * M);
  for (long i = 0; i < 2 * M; ++i) {
    PivotPair col = lambda_apply(basis[i], p);
    for (long j = 0; j < 2 * M; ++j) K(i, j) = pivot_inner(p.grid, col, basis[j]);
  }
  double scale = K.cwiseAbs().maxCoeff();
  double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  CHECK(scale > 0.0);
  CHECK(asym <= 1e-8 * scale);  // measured ~3e-15

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()));
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  CHECK(lmax > 0.0);
  CHECK(lmin >= -1e-8 * lmax);  // measured positive (~4e-9)
}

TEST_CASE("quadratic form of the gramian equals the observed adjoint energy") {
  ControlProblem p = rest_problem(51);
  long N = p.grid.spatial_count();
  PivotPair s = zero_state(p.grid);
  for (long i = 1; i < N - 1; ++i) {
    double x = 1.0 + i * p.grid.h[0];
    s.c0[i] = std::sin(kPi * (x - 1.0));
    s.c1[i] = 0.3 * (x - 1.0) * (2.0 - x);
  }
  PivotPair ls = lambda_apply(s, p);
  double lhs = pivot_inner(p.grid, ls, s);

  wave::CoefficientTable table = wave::sample_coefficients(p.coeffs, p.grid);
  wave::Trajectory traj = wave::solve_adjoint(table, s.c0, s.c1);
  double rhs = mesh::integrate(p.setup.observed, [&](std::size_t f) {
    long j = static_cast<long>(f) / N, i = static_cast<long>(f) % N;
    double v = traj.levels[j][i];
    return v * v;
  });
  CHECK(rhs > 0.0);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("a target equal to the free endpoint needs no control") {
  observability::ObservationSetup s = shell_setup(101);
  wave::Coefficients c = drift_coeffs();
  PivotPair y = smooth_state(s.grid);
  wave::CoefficientTable table = wave::sample_coefficients(c, s.grid);
  wave::Trajectory free_run = wave::solve_controlled(table, y.c0, y.c1);
  PivotPair endpoint;
  endpoint.c0 = free_run.levels[s.grid.nt - 1];
  endpoint.c1 = free_run.time_derivative(s.grid.nt - 1);

  ControlProblem p = make_problem(c, y, endpoint, s);
  HUMSolution sol = solve_hum(p);
  CHECK(sol.cg_iterations == 0);
  CHECK(sol.converged);
  CHECK(sol.terminal_error == 0.0);
  CHECK(sol.predicted_control_norm == 0.0);
  for (double v : sol.control.data) CHECK(v == 0.0);
}

TEST_CASE("null control drives the drifted string to rest") {
  ControlProblem p = rest_problem(101);
  HUMSolution sol = solve_hum(p, 1e-2, 200);

  CHECK(sol.converged);
  CHECK_FALSE(sol.stagnated);
  CHECK(sol.diagnostics.empty());
  CHECK(sol.terminal_error <= 1e-2);
  CHECK(sol.terminal_error == doctest::Approx(2.065155e-3).epsilon(1e-4));
  CHECK(sol.cg_iterations == 11);
  CHECK(sol.gramian_residual <= 1e-3);
  CHECK(sol.residual_history.size() == static_cast<std::size_t>(sol.cg_iterations));
  CHECK(sol.residual_history.back() == doctest::Approx(sol.gramian_residual));
  CHECK(sol.predicted_control_norm == doctest::Approx(5.630208).epsilon(1e-4));

  // support containment on the stored field
  long N = p.grid.spatial_count();
  const std::vector<double>& frac = p.setup.observed.fraction;
  bool contained = true, any = false;
  for (std::size_t idx = 0; idx < sol.control.data.size(); ++idx)
    if (sol.control.data[idx] != 0.0) {
      any = true;
      if (!(frac[idx] > 0.0)) contained = false;
    }
  CHECK(any);
  CHECK(contained);

  // the first time level lies outside the cone section, so it carries none
  for (long i = 0; i < N; ++i) CHECK(sol.control.data[i] == 0.0);
}

TEST_CASE("verification reproduces the stored control run") {
  ControlProblem p = rest_problem(101);
  HUMSolution sol = solve_hum(p, 1e-2, 200);
  VerificationReport rep = verify_control(sol, p);

  CHECK(rep.support_ok);
  CHECK(rep.trace_difference <= 1e-12);
  CHECK(rep.terminal_error == doctest::Approx(sol.terminal_error).epsilon(1e-12));
  CHECK(rep.control_norm > 0.0);
  // at convergence the realized L2(W) norm matches sqrt(<b, seed>)
  CHECK(rep.control_norm / sol.predicted_control_norm == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rep.control_norm <= 10.0 * sol.predicted_control_norm);
  CHECK(rep.control_norm >= 0.1 * sol.predicted_control_norm);
}

TEST_CASE("tampered control support is a hard failure") {
  ControlProblem p = rest_problem(101);
  HUMSolution sol = solve_hum(p, 1e-2, 200);

  // time level 0 sits outside the cone section (|t| = T > r), fraction zero
  HUMSolution bad = sol;
  bad.control.data[3] = 1e-3;
  CHECK_THROWS_AS(verify_control(bad, p), SolverError);

  HUMSolution wrong = sol;
  wrong.control.data.pop_back();
  CHECK_THROWS_AS(verify_control(wrong, p), DomainError);
}

TEST_CASE("doubling the collar width lowers the control cost") {
  ControlProblem narrow = rest_problem(101, 0.3);
  ControlProblem wide = rest_problem(101, 0.6);
  HUMSolution sn = solve_hum(narrow, 1e-2, 200);
  HUMSolution sw = solve_hum(wide, 1e-2, 200);
  CHECK(sn.converged);
  CHECK(sw.converged);
  MESSAGE("collar 0.3: iters=", sn.cg_iterations, " |F|=", sn.predicted_control_norm,
          "  collar 0.6: iters=", sw.cg_iterations, " |F|=", sw.predicted_control_norm);
  CHECK(sw.predicted_control_norm < sn.predicted_control_norm);
}

TEST_CASE("identical runs with and without the observability pre-check") {
  ControlProblem p = rest_problem(41);
  HUMSolution checked = solve_hum(p, 1e-2, 200, false);
  HUMSolution assumed = solve_hum(p, 1e-2, 200, true);
  CHECK(checked.cg_iterations == assumed.cg_iterations);
  CHECK(checked.terminal_error == assumed.terminal_error);
  for (std::size_t i = 0; i < checked.control.data.size(); ++i)
    CHECK(checked.control.data[i] == assumed.control.data[i]);
}

TEST_CASE("problem validation rejects malformed inputs") {
  observability::ObservationSetup s = shell_setup(41);
  wave::Coefficients c = drift_coeffs();
  PivotPair y = smooth_state(s.grid);
  PivotPair z = zero_state(s.grid);

  PivotPair bad_trace = y;
  bad_trace.c0.front() = 1.0;
  CHECK_THROWS_AS(make_problem(c, bad_trace, z, s), DomainError);

  PivotPair short_vec = y;
  short_vec.c1.pop_back();
  CHECK_THROWS_AS(make_problem(c, short_vec, z, s), DomainError);

  // a time horizon below the cone radius cannot support control
  SpatialDomain d = shell_domain();
  Grid gshort = mesh::build_grid(d, 0.5, {41});
  observability::ObservationSetup bypassed = observability::make_setup(
      d, observability::Mode::exterior, {{0.0}}, 0.3, 0.5, gshort, true);
  PivotPair ys = smooth_state(gshort), zs = zero_state(gshort);
  CHECK_THROWS_AS(make_problem(c, ys, zs, bypassed), DomainError);

  ControlProblem p = make_problem(c, y, z, s);
  CHECK_THROWS_AS(solve_hum(p, 0.0, 200), DomainError);
  CHECK_THROWS_AS(solve_hum(p, 1e-2, 0), DomainError);

  PivotPair seed = zero_state(s.grid);
  seed.c0.pop_back();
  CHECK_THROWS_AS(lambda_apply(seed, p), DomainError);
}
