#include "conewave/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conewave::wave {

namespace {

// Envelope factor for the runaway detector: explicit-scheme blowup crosses
// any fixed exponential within a few dozen steps, while stable runs with
// bounded coefficients stay far below exp(kEnvelopeRate * M * elapsed).
constexpr double kEnvelopeRate = 8.0;
constexpr double kEnvelopeSlack = 10.0;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void spatial_coords(const Grid& g, long node, std::vector<double>& x) {
  x.resize(g.n());
  if (g.n() == 1) {
    x[0] = g.x(0, static_cast<int>(node));
  } else {
    int n1 = g.nx[1];
    x[0] = g.x(0, static_cast<int>(node / n1));
    x[1] = g.x(1, static_cast<int>(node % n1));
  }
}

void zero_boundary(const Grid& g, std::vector<double>& f) {
  if (g.n() == 1) {
    f.front() = 0.0;
    f.back() = 0.0;
    return;
  }
  int n0 = g.nx[0], n1 = g.nx[1];
  for (int j = 0; j < n1; ++j) {
    f[j] = 0.0;
    f[static_cast<size_t>(n0 - 1) * n1 + j] = 0.0;
  }
  for (int i = 0; i < n0; ++i) {
    f[static_cast<size_t>(i) * n1] = 0.0;
    f[static_cast<size_t>(i) * n1 + (n1 - 1)] = 0.0;
  }
}

// centered first derivative along each spatial axis (zero on the boundary)
void gradient(const Grid& g, const std::vector<double>& f,
              std::vector<std::vector<double>>& grad) {
  grad.assign(g.n(), std::vector<double>(f.size(), 0.0));
  if (g.n() == 1) {
    int N = g.nx[0];
    double i2h = 0.5 / g.h[0];
    for (int i = 1; i < N - 1; ++i) grad[0][i] = (f[i + 1] - f[i - 1]) * i2h;
    return;
  }
  int n0 = g.nx[0], n1 = g.nx[1];
  double i2h0 = 0.5 / g.h[0], i2h1 = 0.5 / g.h[1];
  for (int i = 1; i < n0 - 1; ++i)
    for (int j = 1; j < n1 - 1; ++j) {
      size_t c = static_cast<size_t>(i) * n1 + j;
      grad[0][c] = (f[c + n1] - f[c - n1]) * i2h0;
      grad[1][c] = (f[c + 1] - f[c - 1]) * i2h1;
    }
}

}  // namespace

Coefficients Coefficients::zero(int n) {
  Coefficients c;
  c.X = [n](double, const std::vector<double>&) { return std::vector<double>(1 + n, 0.0); };
  c.V = [](double, const std::vector<double>&) { return 0.0; };
  c.q = [](double, const std::vector<double>&) { return 0.0; };
  return c;
}

CoefficientTable sample_coefficients(const Coefficients& c, const Grid& grid) {
  CoefficientTable t;
  t.grid = grid;
  long N = grid.spatial_count();
  int levels = grid.nt;
  t.xt.assign(levels, std::vector<double>(N, 0.0));
  t.xx.assign(grid.n(), std::vector<std::vector<double>>(levels, std::vector<double>(N, 0.0)));
  t.v.assign(levels, std::vector<double>(N, 0.0));
  t.q.assign(levels, std::vector<double>(N, 0.0));

  std::vector<double> x;
  for (int j = 0; j < levels; ++j) {
    double tj = grid.t(j);
    for (long i = 0; i < N; ++i) {
      spatial_coords(grid, i, x);
      if (c.X) {
        std::vector<double> Xv = c.X(tj, x);
        if (static_cast<int>(Xv.size()) != 1 + grid.n())
          throw DomainError("coefficient X must return 1 + n components");
        t.xt[j][i] = Xv[0];
        for (int a = 0; a < grid.n(); ++a) t.xx[a][j][i] = Xv[1 + a];
      }
      if (c.V) t.v[j][i] = c.V(tj, x);
      if (c.q) t.q[j][i] = c.q(tj, x);
    }
  }

  // sampled bounds
  CoefficientBounds b;
  double r2min = std::numeric_limits<double>::infinity(), r2max = 0.0;
  for (long i = 0; i < N; ++i) {
    spatial_coords(grid, i, x);
    double r2 = 0.0;
    for (int a = 0; a < grid.n(); ++a) r2 += sq(x[a] - grid.domain.x0[a]);
    r2min = std::min(r2min, r2);
    r2max = std::max(r2max, r2);
  }
  b.R_plus = std::sqrt(r2max);
  b.R_minus = std::sqrt(r2min);

  double xmax = 0.0, dxmax = 0.0, vmax = 0.0;
  auto comp = [&](int a, int j, long i) -> double {
    return a == 0 ? t.xt[j][i] : t.xx[a - 1][j][i];
  };
  int n1 = grid.n() == 2 ? grid.nx[1] : 0;
  for (int j = 0; j < levels; ++j) {
    for (long i = 0; i < N; ++i) {
      vmax = std::max(vmax, std::abs(t.v[j][i]));
      double norm2 = 0.0;
      for (int a = 0; a <= grid.n(); ++a) norm2 += sq(comp(a, j, i));
      xmax = std::max(xmax, std::sqrt(norm2));
      for (int a = 0; a <= grid.n(); ++a) {
        if (j + 1 < levels)
          dxmax = std::max(dxmax, std::abs(comp(a, j + 1, i) - comp(a, j, i)) / grid.k);
        if (grid.n() == 1) {
          if (i + 1 < N)
            dxmax = std::max(dxmax, std::abs(comp(a, j, i + 1) - comp(a, j, i)) / grid.h[0]);
        } else {
          if (i % n1 + 1 < n1)
            dxmax = std::max(dxmax, std::abs(comp(a, j, i + 1) - comp(a, j, i)) / grid.h[1]);
          if (i + n1 < N)
            dxmax = std::max(dxmax, std::abs(comp(a, j, i + n1) - comp(a, j, i)) / grid.h[0]);
        }
      }
    }
  }
  b.M0 = vmax;
  b.M1 = std::max(b.R_plus > 0 ? xmax / std::sqrt(b.R_plus) : xmax, dxmax);
  b.M = std::max({1.0, b.M0, b.M1});
  t.bounds = b;
  return t;
}

Coefficients reverse_coefficients(const Coefficients& c) {
  Coefficients r;
  if (c.X)
    r.X = [X = c.X](double tt, const std::vector<double>& x) {
      std::vector<double> v = X(-tt, x);
      v[0] = -v[0];
      return v;
    };
  if (c.V) r.V = [V = c.V](double tt, const std::vector<double>& x) { return V(-tt, x); };
  if (c.q) r.q = [q = c.q](double tt, const std::vector<double>& x) { return q(-tt, x); };
  return r;
}

std::vector<double> Trajectory::time_derivative(int j) const {
  const int J = static_cast<int>(levels.size()) - 1;
  const double k = grid.k;
  std::vector<double> d(levels[0].size());
  if (j == 0) {
    for (size_t i = 0; i < d.size(); ++i)
      d[i] = (-3.0 * levels[0][i] + 4.0 * levels[1][i] - levels[2][i]) / (2.0 * k);
  } else if (j == J) {
    for (size_t i = 0; i < d.size(); ++i)
      d[i] = (3.0 * levels[J][i] - 4.0 * levels[J - 1][i] + levels[J - 2][i]) / (2.0 * k);
  } else {
    for (size_t i = 0; i < d.size(); ++i)
      d[i] = (levels[j + 1][i] - levels[j - 1][i]) / (2.0 * k);
  }
  return d;
}

State state_at(const Trajectory& traj, int j) {
  State s;
  std::vector<int> shape(traj.grid.nx.begin(), traj.grid.nx.end());
  s.phi.shape = shape;
  s.phi.data = traj.levels[j];
  s.phi_t.shape = shape;
  s.phi_t.data = traj.time_derivative(j);
  s.time = traj.grid.t(j);
  return s;
}

namespace {

// Shared leapfrog core.  sign = +1 runs the adjoint form (potential V),
// sign = -1 the controlled form (potential q); `extra` adds G(level, node) to
// the second-derivative RHS (source for the adjoint, -F for the control).
Trajectory run_leapfrog(const CoefficientTable& tab, int sign,
                        const std::vector<std::vector<double>>& pot,
                        const std::vector<double>& f0, const std::vector<double>& f1,
                        const std::function<double(int, long)>& extra) {
  const Grid& g = tab.grid;
  const long N = g.spatial_count();
  if (f0.size() != static_cast<size_t>(N) || f1.size() != static_cast<size_t>(N))
    throw DomainError("initial data length does not match the grid");
  const double k = g.k;

  Trajectory traj;
  traj.grid = g;
  traj.bounds = tab.bounds;
  traj.levels.assign(g.nt, std::vector<double>(N, 0.0));

  traj.levels[0] = f0;
  zero_boundary(g, traj.levels[0]);
  std::vector<double> vel = f1;
  zero_boundary(g, vel);

  // runaway envelope bookkeeping
  double ref = std::max({max_abs(traj.levels[0]), k * max_abs(vel), 1e-300});
  auto check = [&](const std::vector<double>& level, int j) {
    double m = max_abs(level);
    if (!std::isfinite(m))
      throw SolverError("time stepping produced a non-finite value at level " +
                        std::to_string(j));
    double elapsed = g.t(j) + g.T;
    double envelope = kEnvelopeSlack * ref *
                      std::exp(kEnvelopeRate * tab.bounds.M * (elapsed + 1.0));
    if (m > envelope)
      throw SolverError("instability detected: amplitude " + fmt_double(m) +
                        " exceeded the growth envelope at level " + std::to_string(j));
  };

  std::vector<std::vector<double>> grad;
  std::vector<double> rhs(N);

  // Taylor first step: f^1 = f^0 + k f' + (k^2/2) f_tt(-T)
  {
    std::vector<double> lap = mesh::apply_laplacian(g, traj.levels[0]);
    gradient(g, traj.levels[0], grad);
    std::vector<double>& nxt = traj.levels[1];
    for (long i = 0; i < N; ++i) {
      double adv = 0.0;
      for (int a = 0; a < g.n(); ++a) adv += tab.xx[a][0][i] * grad[a][i];
      double acc = lap[i] + sign * adv + pot[0][i] * traj.levels[0][i] +
                   sign * tab.xt[0][i] * vel[i];
      if (extra) acc += extra(0, i);
      nxt[i] = traj.levels[0][i] + k * vel[i] + 0.5 * k * k * acc;
    }
    zero_boundary(g, nxt);
    if (extra) {
      double gmax = 0.0;
      for (long i = 0; i < N; ++i) gmax = std::max(gmax, std::abs(extra(0, i)));
      ref += k * gmax;
    }
    check(nxt, 1);
  }

  for (int j = 1; j + 1 < g.nt; ++j) {
    const std::vector<double>& cur = traj.levels[j];
    const std::vector<double>& prv = traj.levels[j - 1];
    std::vector<double>& nxt = traj.levels[j + 1];
    std::vector<double> lap = mesh::apply_laplacian(g, cur);
    gradient(g, cur, grad);
    double gmax = 0.0;
    for (long i = 0; i < N; ++i) {
      double adv = 0.0;
      for (int a = 0; a < g.n(); ++a) adv += tab.xx[a][j][i] * grad[a][i];
      double acc = lap[i] + sign * adv + pot[j][i] * cur[i];
      if (extra) {
        double gi = extra(j, i);
        acc += gi;
        gmax = std::max(gmax, std::abs(gi));
      }
      double half_xt = 0.5 * k * sign * tab.xt[j][i];
      double den = 1.0 - half_xt;
      if (den < 0.1)
        throw SolverError("time step too large for the first-order coefficient");
      rhs[i] = (2.0 * cur[i] - (1.0 + half_xt) * prv[i] + k * k * acc) / den;
    }
    nxt = rhs;
    zero_boundary(g, nxt);
    if (extra) ref += k * gmax;
    check(nxt, j + 1);
  }
  return traj;
}

}  // namespace

Trajectory solve_adjoint(const CoefficientTable& table, const std::vector<double>& phi0,
                         const std::vector<double>& phi1, const ScalarFn& source) {
  std::function<double(int, long)> extra;
  if (source) {
    const Grid& g = table.grid;
    extra = [&g, &source](int j, long i) {
      std::vector<double> x;
      spatial_coords(g, i, x);
      return source(g.t(j), x);
    };
  }
  return run_leapfrog(table, +1, table.v, phi0, phi1, extra);
}

Trajectory solve_controlled(const CoefficientTable& table, const std::vector<double>& y0,
                            const std::vector<double>& y1,
                            const std::vector<std::vector<double>>& control) {
  std::function<double(int, long)> extra;
  if (!control.empty()) {
    if (control.size() != static_cast<size_t>(table.grid.nt))
      throw DomainError("control must supply one vector per time level");
    extra = [&control](int j, long i) { return -control[j][i]; };
  }
  return run_leapfrog(table, -1, table.q, y0, y1, extra);
}

double l2_norm_sq(const Grid& grid, const std::vector<double>& field) {
  if (field.size() != static_cast<size_t>(grid.spatial_count()))
    throw DomainError("field length does not match the spatial grid");
  if (grid.n() == 1) {
    int N = grid.nx[0];
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      double w = (i == 0 || i == N - 1) ? 0.5 : 1.0;
      s += w * sq(field[i]);
    }
    return s * grid.h[0];
  }
  int n0 = grid.nx[0], n1 = grid.nx[1];
  double s = 0.0;
  for (int i = 0; i < n0; ++i) {
    double wi = (i == 0 || i == n0 - 1) ? 0.5 : 1.0;
    for (int j = 0; j < n1; ++j) {
      double wj = (j == 0 || j == n1 - 1) ? 0.5 : 1.0;
      s += wi * wj * sq(field[static_cast<size_t>(i) * n1 + j]);
    }
  }
  return s * grid.h[0] * grid.h[1];
}

double energy(const Trajectory& traj, int j) {
  double l2 = l2_norm_sq(traj.grid, traj.levels[j]);
  double dual = mesh::h_minus1_norm(traj.grid, traj.time_derivative(j));
  return 0.5 * (l2 + sq(dual));
}

std::vector<double> duality_pairing(const Trajectory& y, const Trajectory& phi,
                                    const CoefficientTable& table) {
  const Grid& g = table.grid;
  if (y.levels.size() != phi.levels.size() ||
      y.levels.size() != static_cast<size_t>(g.nt))
    throw DomainError("trajectories and table must share one grid");
  std::vector<double> out(g.nt, 0.0);
  for (int j = 0; j < g.nt; ++j) {
    std::vector<double> yt = y.time_derivative(j);
    std::vector<double> pt = phi.time_derivative(j);
    std::vector<double> integrand(yt.size());
    for (size_t i = 0; i < yt.size(); ++i)
      integrand[i] = yt[i] * phi.levels[j][i] - y.levels[j][i] * pt[i] +
                     table.xt[j][i] * y.levels[j][i] * phi.levels[j][i];
    // trapezoid over Omega
    if (g.n() == 1) {
      int N = g.nx[0];
      double s = 0.0;
      for (int i = 0; i < N; ++i)
        s += ((i == 0 || i == N - 1) ? 0.5 : 1.0) * integrand[i];
      out[j] = s * g.h[0];
    } else {
      int n0 = g.nx[0], n1 = g.nx[1];
      double s = 0.0;
      for (int i = 0; i < n0; ++i)
        for (int jj = 0; jj < n1; ++jj) {
          double w = ((i == 0 || i == n0 - 1) ? 0.5 : 1.0) *
                     ((jj == 0 || jj == n1 - 1) ? 0.5 : 1.0);
          s += w * integrand[static_cast<size_t>(i) * n1 + jj];
        }
      out[j] = s * g.h[0] * g.h[1];
    }
  }
  return out;
}

void TwoTimeField::z_row(int j1, int j2, std::vector<double>& out) const {
  const std::vector<double>& a = I[base_level(j1)];
  const std::vector<double>& b = I[base_level(j2)];
  out.resize(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = b[i] - a[i];
}

TwoTimeField build_z(const Trajectory& traj, double k2_request) {
  const Grid& g = traj.grid;
  if (!(k2_request > 0)) throw DomainError("two-time step request must be positive");
  int steps = g.nt - 1;
  int stride = std::max(1, static_cast<int>(std::floor(k2_request / g.k * (1 + 1e-12))));
  stride = std::min(stride, steps);
  while (steps % stride != 0) --stride;  // largest admissible divisor below the request

  TwoTimeField z;
  z.stride = stride;
  z.grid2 = g;
  z.grid2.time_axes = 2;
  z.grid2.nt = steps / stride + 1;
  z.grid2.k = stride * g.k;

  long N = g.spatial_count();
  z.I.assign(g.nt, std::vector<double>(N, 0.0));
  for (int j = 0; j + 1 < g.nt; ++j)
    for (long i = 0; i < N; ++i)
      z.I[j + 1][i] = z.I[j][i] + 0.5 * g.k * (traj.levels[j][i] + traj.levels[j + 1][i]);
  return z;
}

double z_residual(const TwoTimeField& z, const Trajectory& traj,
                  const CoefficientTable& table) {
  const Grid& g = traj.grid;
  const long N = g.spatial_count();
  const double k2 = z.grid2.k;
  const int nt2 = z.grid2.nt;

  // cumulative trapezoid of V phi + X^t phi_t + X^x . grad phi
  std::vector<std::vector<double>> J(g.nt, std::vector<double>(N, 0.0));
  {
    std::vector<double> prev(N, 0.0), cur(N, 0.0);
    std::vector<std::vector<double>> grad;
    for (int j = 0; j < g.nt; ++j) {
      std::vector<double> pt = traj.time_derivative(j);
      gradient(g, traj.levels[j], grad);
      for (long i = 0; i < N; ++i) {
        double adv = 0.0;
        for (int a = 0; a < g.n(); ++a) adv += table.xx[a][j][i] * grad[a][i];
        cur[i] = table.v[j][i] * traj.levels[j][i] + table.xt[j][i] * pt[i] + adv;
      }
      if (j > 0)
        for (long i = 0; i < N; ++i)
          J[j][i] = J[j - 1][i] + 0.5 * g.k * (prev[i] + cur[i]);
      std::swap(prev, cur);
    }
  }

  // spatial Laplacian acts on z-rows; time second differences act on I rows
  double worst = 0.0;
  std::vector<double> row(N), lap;
  for (int j1 = 1; j1 + 1 < nt2; ++j1) {
    int b1 = z.base_level(j1);
    int b1m = z.base_level(j1 - 1), b1p = z.base_level(j1 + 1);
    for (int j2 = 1; j2 + 1 < nt2; ++j2) {
      int b2 = z.base_level(j2);
      int b2m = z.base_level(j2 - 1), b2p = z.base_level(j2 + 1);
      for (long i = 0; i < N; ++i) row[i] = z.I[b2][i] - z.I[b1][i];
      lap = mesh::apply_laplacian(g, row);
      for (long i = 0; i < N; ++i) {
        // skip spatial boundary nodes (lap carries zero there)
        if (g.n() == 1) {
          if (i == 0 || i == N - 1) continue;
        } else {
          int n1 = g.nx[1];
          int i0 = static_cast<int>(i / n1), i1 = static_cast<int>(i % n1);
          if (i0 == 0 || i0 == g.nx[0] - 1 || i1 == 0 || i1 == n1 - 1) continue;
        }
        double ztt1 = -(z.I[b1p][i] - 2.0 * z.I[b1][i] + z.I[b1m][i]) / (k2 * k2);
        double ztt2 = (z.I[b2p][i] - 2.0 * z.I[b2][i] + z.I[b2m][i]) / (k2 * k2);
        double rhs = J[b2][i] - J[b1][i];
        worst = std::max(worst, std::abs(ztt1 + ztt2 - lap[i] - rhs));
      }
    }
  }
  return worst;
}

}  // namespace conewave::wave
