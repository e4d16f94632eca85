#include "conewave/hum.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace conewave::hum {

namespace {

using mesh::Grid;

void zero_boundary(const Grid& g, std::vector<double>& f) {
  if (g.n() == 1) {
    f.front() = 0.0;
    f.back() = 0.0;
    return;
  }
  int n0 = g.nx[0], n1 = g.nx[1];
  for (int j = 0; j < n1; ++j) {
    f[j] = 0.0;
    f[static_cast<std::size_t>(n0 - 1) * n1 + j] = 0.0;
  }
  for (int i = 0; i < n0; ++i) {
    f[static_cast<std::size_t>(i) * n1] = 0.0;
    f[static_cast<std::size_t>(i) * n1 + (n1 - 1)] = 0.0;
  }
}

// Centered difference along one axis at fully interior nodes, zero elsewhere
// (the same stencil domain as the forward solver's gradient).
std::vector<double> d_axis(const Grid& g, const std::vector<double>& f, int axis) {
  std::vector<double> out(f.size(), 0.0);
  if (g.n() == 1) {
    int N = g.nx[0];
    double i2h = 0.5 / g.h[0];
    for (int i = 1; i < N - 1; ++i) out[i] = (f[i + 1] - f[i - 1]) * i2h;
    return out;
  }
  int n0 = g.nx[0], n1 = g.nx[1];
  double i2h = 0.5 / g.h[axis];
  long step = (axis == 0) ? n1 : 1;
  for (int i = 1; i < n0 - 1; ++i)
    for (int j = 1; j < n1 - 1; ++j) {
      std::size_t c = static_cast<std::size_t>(i) * n1 + j;
      out[c] = (f[c + step] - f[c - step]) * i2h;
    }
  return out;
}

std::vector<double> trapezoid_weights(const Grid& g) {
  long N = g.spatial_count();
  double cell = 1.0;
  for (double hv : g.h) cell *= hv;
  std::vector<double> w(N, cell);
  if (g.n() == 1) {
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
  }
  int n0 = g.nx[0], n1 = g.nx[1];
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      double f = 1.0;
      if (i == 0 || i == n0 - 1) f *= 0.5;
      if (j == 0 || j == n1 - 1) f *= 0.5;
      w[static_cast<std::size_t>(i) * n1 + j] *= f;
    }
  return w;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Workspace {
  const ControlProblem* prob = nullptr;
  wave::CoefficientTable table;
  std::vector<double> wsp;  // spatial trapezoid weights (cell and end-halving)
  std::vector<double> tw;   // time trapezoid weights
  double cell = 1.0;
  long ns = 0;
  int nt = 0;
};

Workspace make_workspace(const ControlProblem& p) {
  Workspace ws;
  ws.prob = &p;
  ws.table = wave::sample_coefficients(p.coeffs, p.grid);
  ws.ns = p.grid.spatial_count();
  ws.nt = p.grid.nt;
  ws.wsp = trapezoid_weights(p.grid);
  for (double hv : p.grid.h) ws.cell *= hv;
  ws.tw.assign(ws.nt, p.grid.k);
  ws.tw.front() *= 0.5;
  ws.tw.back() *= 0.5;
  return ws;
}

// Exact transpose of the adjoint leapfrog: level-indexed dual vectors g^j map
// to duals (u0, u1) of the seed, so that for every seed s
//   sum_j <g^j, phi_s^j> = <u0, s0> + <u1, s1>.
// Derivation: with P the boundary projector, D_j = diag(1 - (k/2) X^t_j),
// C_j = diag((k/2) X^t_j) and A_j = Lap + X^x_j . grad + V_j, the forward
// recurrence is phi^{j+1} = P D_j^{-1}[(2 + k^2 A_j) phi^j - (1 + C_j)
// phi^{j-1}] with the Taylor start phi^1 = P[(1 + (k^2/2) A_0) phi^0 +
// (k + (k^2/2) X^t_0) P s1].  Running the costate lambda backward applies the
// transposed factors in reverse order; A^T = Lap - div(X^x .) + V on
// zero-boundary inputs.
std::pair<std::vector<double>, std::vector<double>> transpose_adjoint(
    const wave::CoefficientTable& tab, const std::vector<std::vector<double>>& gl) {
  const Grid& g = tab.grid;
  const long N = g.spatial_count();
  const double k = g.k;
  const int nt = g.nt;

  std::vector<double> lam1(N, 0.0), lam2(N, 0.0);  // lambda^{j+1}, lambda^{j+2}
  std::vector<double> cur(N), tmp(N), at(N), ma(N);

  auto apply_at = [&](int j, const std::vector<double>& w, std::vector<double>& out) {
    out = mesh::apply_laplacian(g, w);
    for (int a = 0; a < g.n(); ++a) {
      for (long i = 0; i < N; ++i) ma[i] = tab.xx[a][j][i] * w[i];
      std::vector<double> da = d_axis(g, ma, a);
      for (long i = 0; i < N; ++i) out[i] -= da[i];
    }
    for (long i = 0; i < N; ++i) out[i] += tab.v[j][i] * w[i];
  };

  for (int j = nt - 1; j >= 1; --j) {
    if (j <= nt - 2) {
      for (long i = 0; i < N; ++i) tmp[i] = lam1[i] / (1.0 - 0.5 * k * tab.xt[j][i]);
      apply_at(j, tmp, at);
      for (long i = 0; i < N; ++i) cur[i] = gl[j][i] + 2.0 * tmp[i] + k * k * at[i];
    } else {
      cur = gl[j];
    }
    if (j + 1 <= nt - 2) {
      for (long i = 0; i < N; ++i)
        cur[i] -= (1.0 + 0.5 * k * tab.xt[j + 1][i]) * lam2[i] /
                  (1.0 - 0.5 * k * tab.xt[j + 1][i]);
    }
    zero_boundary(g, cur);
    lam2.swap(lam1);
    lam1 = cur;
  }

  // lam1 = lambda^1, lam2 = lambda^2; close out the Taylor start and the
  // first main step's dependence on phi^0.
  std::vector<double> u0(N), u1(N);
  apply_at(0, lam1, at);
  for (long i = 0; i < N; ++i) u0[i] = gl[0][i] + lam1[i] + 0.5 * k * k * at[i];
  for (long i = 0; i < N; ++i)
    u0[i] -= (1.0 + 0.5 * k * tab.xt[1][i]) * lam2[i] / (1.0 - 0.5 * k * tab.xt[1][i]);
  zero_boundary(g, u0);
  for (long i = 0; i < N; ++i) u1[i] = (k + 0.5 * k * k * tab.xt[0][i]) * lam1[i];
  zero_boundary(g, u1);
  return {std::move(u0), std::move(u1)};
}

double pivot_inner(const Workspace& ws, const PivotPair& a, const PivotPair& b) {
  const Grid& g = ws.prob->grid;
  double s = 0.0;
  for (long i = 0; i < ws.ns; ++i) s += ws.wsp[i] * a.c0[i] * b.c0[i];
  std::vector<double> az = a.c1, bz = b.c1;
  zero_boundary(g, az);
  zero_boundary(g, bz);
  std::vector<double> lifted = mesh::poisson_dirichlet(g, az);
  s += ws.cell * dot(lifted, bz);
  return s;
}

// Lambda seed = R^{-1} S^T Q S seed: adjoint solve, W quadrature weights,
// transpose solve, pivot Riesz map.
PivotPair lambda_core(const Workspace& ws, const PivotPair& seed) {
  const Grid& g = ws.prob->grid;
  wave::Trajectory traj = wave::solve_adjoint(ws.table, seed.c0, seed.c1);
  const std::vector<double>& frac = ws.prob->setup.observed.fraction;
  std::vector<std::vector<double>> gl(ws.nt, std::vector<double>(ws.ns, 0.0));
  for (int j = 0; j < ws.nt; ++j) {
    std::size_t base = static_cast<std::size_t>(j) * ws.ns;
    for (long i = 0; i < ws.ns; ++i) {
      double f = frac[base + i];
      if (f > 0.0) gl[j][i] = ws.tw[j] * ws.wsp[i] * f * traj.levels[j][i];
    }
  }
  auto [u0, u1] = transpose_adjoint(ws.table, gl);

  PivotPair out;
  out.c0.resize(ws.ns);
  for (long i = 0; i < ws.ns; ++i) out.c0[i] = u0[i] / ws.wsp[i];
  std::vector<double> lap = mesh::apply_laplacian(g, u1);
  out.c1.resize(ws.ns);
  for (long i = 0; i < ws.ns; ++i) out.c1[i] = -lap[i] / ws.cell;
  return out;
}

double h1_sq(const Workspace& ws, const std::vector<double>& u) {
  std::vector<double> uz = u;
  zero_boundary(ws.prob->grid, uz);
  std::vector<double> lap = mesh::apply_laplacian(ws.prob->grid, uz);
  return std::max(0.0, -ws.cell * dot(lap, uz));
}

double l2w_sq(const Workspace& ws, const std::vector<double>& u) {
  double s = 0.0;
  for (long i = 0; i < ws.ns; ++i) s += ws.wsp[i] * u[i] * u[i];
  return s;
}

double state_norm(const Workspace& ws, const std::vector<double>& v0,
                  const std::vector<double>& v1) {
  return std::sqrt(h1_sq(ws, v0) + l2w_sq(ws, v1));
}

// Relative terminal error of (a0, a1) against the target, normalized by the
// sizes of the problem data (absolute when both vanish).
double terminal_error_of(const Workspace& ws, const std::vector<double>& a0,
                         const std::vector<double>& a1) {
  const ControlProblem& p = *ws.prob;
  std::vector<double> e0(ws.ns), e1(ws.ns);
  for (long i = 0; i < ws.ns; ++i) {
    e0[i] = a0[i] - p.target.c0[i];
    e1[i] = a1[i] - p.target.c1[i];
  }
  double num = state_norm(ws, e0, e1);
  double den = state_norm(ws, p.initial.c0, p.initial.c1) +
               state_norm(ws, p.target.c0, p.target.c1);
  return den > 0.0 ? num / den : num;
}

void check_dirichlet(const Grid& g, const std::vector<double>& v, const char* what) {
  if (v.size() != static_cast<std::size_t>(g.spatial_count()))
    throw DomainError(std::string(what) + " length does not match the spatial grid");
  double bmax = 0.0;
  if (g.n() == 1) {
    bmax = std::max(std::abs(v.front()), std::abs(v.back()));
  } else {
    int n0 = g.nx[0], n1 = g.nx[1];
    for (int j = 0; j < n1; ++j) {
      bmax = std::max(bmax, std::abs(v[j]));
      bmax = std::max(bmax, std::abs(v[static_cast<std::size_t>(n0 - 1) * n1 + j]));
    }
    for (int i = 0; i < n0; ++i) {
      bmax = std::max(bmax, std::abs(v[static_cast<std::size_t>(i) * n1]));
      bmax = std::max(bmax, std::abs(v[static_cast<std::size_t>(i) * n1 + (n1 - 1)]));
    }
  }
  if (bmax > 1e-10 * (1.0 + max_abs(v)))
    throw DomainError(std::string(what) + " is not Dirichlet-compatible");
}

}  // namespace

ControlProblem make_problem(const wave::Coefficients& coeffs, PivotPair initial,
                            PivotPair target, const observability::ObservationSetup& setup) {
  if (setup.grid.time_axes != 1)
    throw DomainError("control problems use a single time axis");
  if (setup.t_gate_bypassed)
    throw DomainError("control requires a time horizon above the cone radius");
  if (setup.observed.empty()) throw DomainError("the observation region is empty");
  const Grid& g = setup.grid;
  check_dirichlet(g, initial.c0, "initial value");
  check_dirichlet(g, initial.c1, "initial velocity");
  check_dirichlet(g, target.c0, "target value");
  check_dirichlet(g, target.c1, "target velocity");

  ControlProblem p;
  p.coeffs = coeffs;
  p.initial = std::move(initial);
  p.target = std::move(target);
  p.setup = setup;
  p.grid = g;
  return p;
}

wave::Coefficients with_dual_potential(const wave::Coefficients& c) {
  wave::Coefficients out = c;
  const double step = 1e-6;
  out.q = [X = c.X, V = c.V, step](double t, const std::vector<double>& x) {
    double q = V ? V(t, x) : 0.0;
    if (X) {
      std::vector<double> pl = X(t + step, x), mi = X(t - step, x);
      q -= (pl[0] - mi[0]) / (2.0 * step);
      for (std::size_t a = 0; a < x.size(); ++a) {
        std::vector<double> xp = x, xm = x;
        xp[a] += step;
        xm[a] -= step;
        q -= (X(t, xp)[1 + a] - X(t, xm)[1 + a]) / (2.0 * step);
      }
    }
    return q;
  };
  return out;
}

PivotPair lambda_apply(const PivotPair& seed, const ControlProblem& problem) {
  Workspace ws = make_workspace(problem);
  if (seed.c0.size() != static_cast<std::size_t>(ws.ns) ||
      seed.c1.size() != static_cast<std::size_t>(ws.ns))
    throw DomainError("seed length does not match the spatial grid");
  return lambda_core(ws, seed);
}

HUMSolution solve_hum(const ControlProblem& problem, double tol, int max_iter,
                      bool assume_observable) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (max_iter < 1) throw DomainError("need at least one iteration");
  Workspace ws = make_workspace(problem);
  const Grid& g = problem.grid;
  const long N = ws.ns;
  const int J = ws.nt - 1;

  if (!assume_observable) {
    observability::ObservabilityReport probe =
        observability::estimate_constant(problem.setup, problem.coeffs, 1, 1, 1, 4);
    if (!std::isfinite(probe.estimate[0]))
      throw DomainError("the observability probe reports an unobservable setup");
  }

  // terminal mismatch of the free evolution
  wave::Trajectory free_run =
      wave::solve_controlled(ws.table, problem.initial.c0, problem.initial.c1);
  std::vector<double> d0(N), d1(N);
  {
    std::vector<double> dt = free_run.time_derivative(J);
    for (long i = 0; i < N; ++i) {
      d0[i] = free_run.levels[J][i] - problem.target.c0[i];
      d1[i] = dt[i] - problem.target.c1[i];
    }
  }

  // b is the pivot Riesz image of
  //   psi -> int( d1 phi_psi(T) - d0 dt phi_psi(T) + X^t(T) d0 phi_psi(T) ),
  // the duality functional a control must realize to cancel the mismatch;
  // dt phi(T) uses the solver's one-sided terminal stencil.
  PivotPair b;
  {
    std::vector<std::vector<double>> gl(ws.nt, std::vector<double>(N, 0.0));
    const double i2k = 0.5 / g.k;
    for (long i = 0; i < N; ++i) {
      gl[J][i] = ws.wsp[i] * (d1[i] + ws.table.xt[J][i] * d0[i] - 3.0 * i2k * d0[i]);
      gl[J - 1][i] = ws.wsp[i] * (4.0 * i2k * d0[i]);
      gl[J - 2][i] = ws.wsp[i] * (-i2k * d0[i]);
    }
    auto [u0, u1] = transpose_adjoint(ws.table, gl);
    b.c0.resize(N);
    for (long i = 0; i < N; ++i) b.c0[i] = u0[i] / ws.wsp[i];
    std::vector<double> lap = mesh::apply_laplacian(g, u1);
    b.c1.resize(N);
    for (long i = 0; i < N; ++i) b.c1[i] = -lap[i] / ws.cell;
  }

  HUMSolution sol;
  sol.adjoint_seed.c0.assign(N, 0.0);
  sol.adjoint_seed.c1.assign(N, 0.0);

  double b_norm2 = pivot_inner(ws, b, b);
  if (b_norm2 > 0.0) {
    PivotPair x = sol.adjoint_seed, r = b, p = b;
    double rs = b_norm2, best = b_norm2;
    int plateau = 0;
    const double cg_tol2 = (0.1 * tol) * (0.1 * tol) * b_norm2;
    for (int it = 1; it <= max_iter; ++it) {
      PivotPair q = lambda_core(ws, p);
      double pq = pivot_inner(ws, p, q);
      if (!(pq > 0.0)) {
        sol.stagnated = true;
        sol.diagnostics = "search direction fell into the Gramian kernel";
        break;
      }
      double alpha = rs / pq;
      for (long i = 0; i < N; ++i) {
        x.c0[i] += alpha * p.c0[i];
        x.c1[i] += alpha * p.c1[i];
        r.c0[i] -= alpha * q.c0[i];
        r.c1[i] -= alpha * q.c1[i];
      }
      double rs_new = pivot_inner(ws, r, r);
      sol.cg_iterations = it;
      sol.residual_history.push_back(std::sqrt(std::max(0.0, rs_new / b_norm2)));
      if (rs_new < best * (1.0 - 1e-3)) {
        best = rs_new;
        plateau = 0;
      } else if (++plateau >= 20) {
        sol.stagnated = true;
        sol.diagnostics = "residual plateaued over 20 iterations";
        rs = rs_new;
        break;
      }
      double beta = rs_new / rs;
      rs = rs_new;
      if (rs <= cg_tol2) break;
      for (long i = 0; i < N; ++i) {
        p.c0[i] = r.c0[i] + beta * p.c0[i];
        p.c1[i] = r.c1[i] + beta * p.c1[i];
      }
    }
    sol.adjoint_seed = x;
    sol.gramian_residual = std::sqrt(std::max(0.0, rs / b_norm2));
  }

  // control from the converged seed; terminal state under that control
  std::vector<std::vector<double>> control;
  {
    wave::Trajectory traj =
        wave::solve_adjoint(ws.table, sol.adjoint_seed.c0, sol.adjoint_seed.c1);
    const std::vector<double>& frac = problem.setup.observed.fraction;
    control.assign(ws.nt, std::vector<double>(N, 0.0));
    std::vector<int> shape(1, ws.nt);
    for (int v : g.nx) shape.push_back(v);
    sol.control = mesh::Field::zeros(shape);
    for (int j = 0; j < ws.nt; ++j) {
      std::size_t base = static_cast<std::size_t>(j) * N;
      for (long i = 0; i < N; ++i) {
        double f = frac[base + i];
        if (f > 0.0) {
          control[j][i] = f * traj.levels[j][i];
          sol.control.data[base + i] = control[j][i];
        }
      }
    }
  }
  wave::Trajectory steered =
      wave::solve_controlled(ws.table, problem.initial.c0, problem.initial.c1, control);
  sol.achieved.c0 = steered.levels[J];
  sol.achieved.c1 = steered.time_derivative(J);
  sol.terminal_error = terminal_error_of(ws, sol.achieved.c0, sol.achieved.c1);
  sol.predicted_control_norm = std::sqrt(std::max(0.0, pivot_inner(ws, b, sol.adjoint_seed)));
  sol.converged = sol.terminal_error <= tol;
  if (!sol.converged && sol.diagnostics.empty())
    sol.diagnostics = "iteration cap reached before the terminal tolerance";
  return sol;
}

VerificationReport verify_control(const HUMSolution& solution, const ControlProblem& problem) {
  Workspace ws = make_workspace(problem);
  const long N = ws.ns;
  const int J = ws.nt - 1;

  std::size_t expected = static_cast<std::size_t>(ws.nt) * N;
  if (solution.control.data.size() != expected)
    throw DomainError("stored control does not match the problem grid");

  const std::vector<double>& frac = problem.setup.observed.fraction;
  for (std::size_t idx = 0; idx < expected; ++idx)
    if (solution.control.data[idx] != 0.0 && !(frac[idx] > 0.0))
      throw SolverError("control leaks outside the observation region");

  std::vector<std::vector<double>> control(ws.nt, std::vector<double>(N, 0.0));
  for (int j = 0; j < ws.nt; ++j)
    for (long i = 0; i < N; ++i)
      control[j][i] = solution.control.data[static_cast<std::size_t>(j) * N + i];

  wave::Trajectory steered =
      wave::solve_controlled(ws.table, problem.initial.c0, problem.initial.c1, control);
  std::vector<double> a0 = steered.levels[J], a1 = steered.time_derivative(J);

  VerificationReport rep;
  double scale = 1.0 + std::max(max_abs(solution.achieved.c0), max_abs(solution.achieved.c1));
  double diff = 0.0;
  for (long i = 0; i < N; ++i) {
    diff = std::max(diff, std::abs(a0[i] - solution.achieved.c0[i]));
    diff = std::max(diff, std::abs(a1[i] - solution.achieved.c1[i]));
  }
  rep.trace_difference = diff / scale;
  rep.terminal_error = terminal_error_of(ws, a0, a1);
  double norm_sq = mesh::integrate(problem.setup.observed, [&](std::size_t f) {
    double value = solution.control.data[f] / frac[f];
    return value * value;
  });
  rep.control_norm = std::sqrt(std::max(0.0, norm_sq));
  rep.support_ok = true;
  return rep;
}

}  // namespace conewave::hum
