#include "conewave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conewave::mesh {

namespace {

constexpr int kSubSamples = 4;  // midpoint sub-samples per axis for fractions

std::string index_string(const std::vector<int>& idx) {
  std::string s = "(";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(idx[i]);
  }
  return s + ")";
}

// Odometer increment over a row-major multi-index; returns false on wrap.
bool advance(std::vector<int>& idx, const std::vector<int>& shape) {
  for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
    if (++idx[a] < shape[a]) return true;
    idx[a] = 0;
  }
  return false;
}

}  // namespace

double SpatialDomain::diameter() const {
  double s = 0.0;
  for (const auto& b : bounds) s += sq(b.second - b.first);
  return std::sqrt(s);
}

void SpatialDomain::validate() const {
  if (bounds.empty() || bounds.size() > 2)
    throw DomainError("spatial domain must be an interval or a 2D box");
  for (const auto& b : bounds)
    if (!(b.first < b.second)) throw DomainError("degenerate spatial domain: lo >= hi");
  if (x0.size() != bounds.size())
    throw DomainError("observation offset dimension does not match the domain");
}

double Grid::h_min() const {
  double m = h[0];
  for (double v : h) m = std::min(m, v);
  return m;
}

long Grid::spatial_count() const {
  long c = 1;
  for (int v : nx) c *= v;
  return c;
}

long Grid::spatial_index(const std::vector<int>& ix) const {
  long f = 0;
  for (size_t a = 0; a < nx.size(); ++a) f = f * nx[a] + ix[a];
  return f;
}

bool Grid::on_spatial_boundary(const std::vector<int>& ix) const {
  for (size_t a = 0; a < nx.size(); ++a)
    if (ix[a] == 0 || ix[a] == nx[a] - 1) return true;
  return false;
}

Grid build_grid(const SpatialDomain& domain, double T, const std::vector<int>& nx,
                double cfl, double k_request) {
  domain.validate();
  if (static_cast<int>(nx.size()) != domain.n())
    throw DomainError("node counts must match the domain dimension");
  for (int c : nx)
    if (c < 3) throw DomainError("need at least 3 nodes per axis");
  if (!(T > 0)) throw DomainError("time horizon must be positive");

  Grid g;
  g.domain = domain;
  g.nx = nx;
  g.h.resize(nx.size());
  for (size_t a = 0; a < nx.size(); ++a) g.h[a] = domain.length(a) / (nx[a] - 1);
  g.T = T;

  double cfl_cap = 1.0 / std::sqrt(static_cast<double>(domain.n()));
  double c = cfl < 0 ? 0.9 * cfl_cap : cfl;
  if (!(c > 0) || c > cfl_cap + 1e-12)
    throw DomainError("cfl ratio must lie in (0, 1/sqrt(n)]");

  double k_max = c * g.h_min();
  double k0 = k_max;
  if (k_request > 0) {
    if (k_request > k_max * (1 + 1e-12)) {
      g.k_clamped = true;  // caller-visible warning flag
    } else {
      k0 = k_request;
    }
  }
  long half_steps = static_cast<long>(std::ceil(T / k0 - 1e-12));
  half_steps = std::max(half_steps, 1L);
  g.nt = static_cast<int>(2 * half_steps + 1);
  g.k = T / static_cast<double>(half_steps);
  g.time_axes = 1;
  return g;
}

Grid two_time_grid(const SpatialDomain& domain, double T, const std::vector<int>& nx,
                   double k_request) {
  if (!(k_request > 0)) throw DomainError("two-time grid needs a positive step request");
  Grid g = build_grid(domain, T, nx, /*cfl=*/-1.0);
  long half_steps = static_cast<long>(std::ceil(T / k_request - 1e-12));
  half_steps = std::max(half_steps, 1L);
  g.nt = static_cast<int>(2 * half_steps + 1);
  g.k = T / static_cast<double>(half_steps);
  g.time_axes = 2;
  g.k_clamped = false;
  return g;
}

std::size_t RegionMask::nodes() const {
  std::size_t c = 1;
  for (int v : shape) c *= static_cast<std::size_t>(v);
  return c;
}

std::size_t RegionMask::flat(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (size_t a = 0; a < shape.size(); ++a) f = f * shape[a] + idx[a];
  return f;
}

double RegionMask::fraction_sum() const {
  double s = 0.0;
  for (double v : fraction) s += v;
  return s;
}

bool RegionMask::empty() const {
  for (double v : fraction)
    if (v > 0) return false;
  return true;
}

Field Field::zeros(std::vector<int> shape) {
  Field f;
  std::size_t c = 1;
  for (int v : shape) c *= static_cast<std::size_t>(v);
  f.shape = std::move(shape);
  f.data.assign(c, 0.0);
  return f;
}

void Field::check_finite(const char* what) const {
  for (size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw SolverError(std::string(what) + ": non-finite value at flat index " +
                        std::to_string(i));
}

namespace {

// Axis descriptions shared by the mask builders: node count, step, coordinate
// of node 0, and the clip range for node-centered cells.
struct Axis {
  int count;
  double step;
  double origin;
  double clip_lo, clip_hi;
  double coord(int i) const { return origin + i * step; }
};

std::vector<Axis> mask_axes(const Grid& grid, int time_axes) {
  std::vector<Axis> ax;
  for (int a = 0; a < time_axes; ++a)
    ax.push_back({grid.nt, grid.k, -grid.T, -grid.T, grid.T});
  for (int a = 0; a < grid.n(); ++a)
    ax.push_back({grid.nx[a], grid.h[a], grid.domain.lo(a), grid.domain.lo(a),
                  grid.domain.hi(a)});
  return ax;
}

RegionMask mask_from_axes(const std::vector<Axis>& ax) {
  RegionMask m;
  std::size_t total = 1;
  for (const auto& a : ax) {
    m.shape.push_back(a.count);
    m.step.push_back(a.step);
    total *= static_cast<std::size_t>(a.count);
  }
  m.inside.assign(total, 0);
  m.fraction.assign(total, 0.0);
  return m;
}

// Cut-cell fraction of {level > 0} in the clipped node cell, by midpoint
// sub-sampling.  `lipschitz` bounds |grad level|; cells decided by the node
// value alone skip the sampling.
template <class Level>
void fill_level_mask(RegionMask& m, const std::vector<Axis>& ax, double lipschitz,
                     Level&& level) {
  const size_t d = ax.size();
  std::vector<int> idx(d, 0);
  std::vector<double> c(d), clo(d), chi(d), p(d);
  double half_diag2 = 0.0;
  for (const auto& a : ax) half_diag2 += sq(0.5 * a.step);
  const double band = lipschitz * std::sqrt(half_diag2);
  std::size_t f = 0;
  do {
    for (size_t a = 0; a < d; ++a) c[a] = ax[a].coord(idx[a]);
    double v = level(c);
    m.inside[f] = v > 0 ? 1 : 0;
    if (v > band) {
      m.fraction[f] = 1.0;
    } else if (v < -band) {
      m.fraction[f] = 0.0;
    } else {
      for (size_t a = 0; a < d; ++a) {
        clo[a] = std::max(ax[a].clip_lo, c[a] - 0.5 * ax[a].step);
        chi[a] = std::min(ax[a].clip_hi, c[a] + 0.5 * ax[a].step);
      }
      std::vector<int> s(d, 0);
      long hits = 0, total = 0;
      do {
        for (size_t a = 0; a < d; ++a)
          p[a] = clo[a] + (s[a] + 0.5) / kSubSamples * (chi[a] - clo[a]);
        ++total;
        if (level(p) > 0) ++hits;
      } while ([&] {
        for (int a = static_cast<int>(d) - 1; a >= 0; --a) {
          if (++s[a] < kSubSamples) return true;
          s[a] = 0;
        }
        return false;
      }());
      m.fraction[f] = static_cast<double>(hits) / static_cast<double>(total);
    }
    ++f;
  } while (advance(idx, m.shape));
}

}  // namespace

RegionMask full_mask(const Grid& grid, int time_axes) {
  auto ax = mask_axes(grid, time_axes);
  RegionMask m = mask_from_axes(ax);
  std::fill(m.inside.begin(), m.inside.end(), 1);
  std::fill(m.fraction.begin(), m.fraction.end(), 1.0);
  return m;
}

RegionMask boundary_mask(const Grid& grid) {
  auto ax = mask_axes(grid, 0);
  RegionMask m = mask_from_axes(ax);
  std::vector<int> idx(grid.n(), 0);
  std::size_t f = 0;
  do {
    if (grid.on_spatial_boundary(idx)) {
      m.inside[f] = 1;
      m.fraction[f] = 1.0;
    }
    ++f;
  } while (advance(idx, grid.nx));
  return m;
}

RegionMask gamma_plus(const Grid& grid, const std::vector<double>& x0) {
  if (static_cast<int>(x0.size()) != grid.n())
    throw DomainError("observation point dimension does not match the grid");
  auto ax = mask_axes(grid, 0);
  RegionMask m = mask_from_axes(ax);
  std::vector<int> idx(grid.n(), 0);
  std::size_t f = 0;
  do {
    bool keep = false;
    for (int a = 0; a < grid.n() && !keep; ++a) {
      // face x_a = lo has normal -e_a, face x_a = hi has normal +e_a
      if (idx[a] == 0 && -(grid.x(a, 0) - x0[a]) > 0) keep = true;
      if (idx[a] == grid.nx[a] - 1 && (grid.x(a, grid.nx[a] - 1) - x0[a]) > 0) keep = true;
    }
    if (keep) {
      m.inside[f] = 1;
      m.fraction[f] = 1.0;
    }
    ++f;
  } while (advance(idx, grid.nx));
  return m;
}

RegionMask omega_region(const Grid& grid, const RegionMask& gamma, double sigma) {
  if (!(sigma > 0)) throw DomainError("collar width sigma must be positive");
  if (gamma.shape != std::vector<int>(grid.nx.begin(), grid.nx.end()))
    throw DomainError("gamma mask does not match the grid");

  // collect flagged node coordinates
  std::vector<std::vector<double>> pts;
  {
    std::vector<int> idx(grid.n(), 0);
    std::size_t f = 0;
    do {
      if (gamma.inside[f]) {
        std::vector<double> c(grid.n());
        for (int a = 0; a < grid.n(); ++a) c[a] = grid.x(a, idx[a]);
        pts.push_back(std::move(c));
      }
      ++f;
    } while (advance(idx, grid.nx));
  }

  auto ax = mask_axes(grid, 0);
  RegionMask m = mask_from_axes(ax);
  if (pts.empty()) return m;  // empty collar: caller decides how loudly to warn

  auto dist = [&](const std::vector<double>& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : pts) {
      double s = 0.0;
      for (size_t a = 0; a < p.size(); ++a) s += sq(p[a] - g[a]);
      best = std::min(best, s);
    }
    return std::sqrt(best);
  };
  // level > 0 inside the collar; |grad| = 1 for a distance function
  fill_level_mask(m, ax, 1.0, [&](const std::vector<double>& p) { return sigma - dist(p); });
  return m;
}

RegionMask cone_regions(const Grid& grid, const std::vector<double>& x0, int time_dims) {
  if (time_dims != 1 && time_dims != 2)
    throw DomainError("cone mask supports 1 or 2 time axes");
  if (static_cast<int>(x0.size()) != grid.n())
    throw DomainError("observation point dimension does not match the grid");
  auto ax = mask_axes(grid, time_dims);
  RegionMask m = mask_from_axes(ax);

  // level q = |x - x0|^2 - |t|^2; |grad q| <= 2 (sqrt(time_dims) T + max |x - x0|)
  double far = 0.0;
  for (int a = 0; a < grid.n(); ++a)
    far += sq(std::max(std::abs(grid.domain.lo(a) - x0[a]),
                       std::abs(grid.domain.hi(a) - x0[a])));
  double lip = 2.0 * (std::sqrt(static_cast<double>(time_dims)) * grid.T + std::sqrt(far));

  fill_level_mask(m, ax, lip, [&](const std::vector<double>& p) {
    double q = 0.0;
    for (int a = 0; a < time_dims; ++a) q -= sq(p[a]);
    for (int a = 0; a < grid.n(); ++a) q += sq(p[time_dims + a] - x0[a]);
    return q;
  });
  return m;
}

RegionMask intersect(const RegionMask& a, const RegionMask& b) {
  if (a.shape != b.shape || a.step != b.step)
    throw DomainError("mask intersection needs identical grids");
  RegionMask m = a;
  for (size_t i = 0; i < m.fraction.size(); ++i) {
    m.inside[i] = a.inside[i] && b.inside[i];
    m.fraction[i] = a.fraction[i] * b.fraction[i];
  }
  return m;
}

RegionMask extend_in_time(const Grid& grid, const RegionMask& spatial, int time_axes) {
  if (spatial.shape != std::vector<int>(grid.nx.begin(), grid.nx.end()))
    throw DomainError("spatial mask does not match the grid");
  auto ax = mask_axes(grid, time_axes);
  RegionMask m = mask_from_axes(ax);
  std::size_t slices = 1;
  for (int a = 0; a < time_axes; ++a) slices *= static_cast<std::size_t>(grid.nt);
  std::size_t page = spatial.fraction.size();
  for (std::size_t s = 0; s < slices; ++s) {
    std::copy(spatial.inside.begin(), spatial.inside.end(), m.inside.begin() + s * page);
    std::copy(spatial.fraction.begin(), spatial.fraction.end(),
              m.fraction.begin() + s * page);
  }
  return m;
}

double integrate(const RegionMask& mask, const std::function<double(std::size_t)>& value) {
  const size_t d = mask.shape.size();
  std::vector<int> idx(d, 0);
  std::size_t f = 0;
  double acc = 0.0;
  do {
    double frac = mask.fraction[f];
    if (frac > 0) {
      double w = frac;
      for (size_t a = 0; a < d; ++a) {
        double wa = mask.step[a];
        if (idx[a] == 0 || idx[a] == mask.shape[a] - 1) wa *= 0.5;
        w *= wa;
      }
      double v = value(f);
      if (!std::isfinite(v))
        throw SolverError("non-finite integrand at node " + index_string(idx));
      acc += w * v;
    }
    ++f;
  } while (advance(idx, mask.shape));
  return acc;
}

double integrate(const RegionMask& mask, const std::vector<double>& values) {
  if (values.size() != mask.fraction.size())
    throw DomainError("integrand length does not match the mask");
  return integrate(mask, [&](std::size_t i) { return values[i]; });
}

std::vector<double> poisson_dirichlet(const Grid& grid, const std::vector<double>& rhs) {
  if (rhs.size() != static_cast<std::size_t>(grid.spatial_count()))
    throw DomainError("rhs length does not match the spatial grid");

  if (grid.n() == 1) {
    // Thomas algorithm for (1/h^2) tridiag(-1, 2, -1) on interior nodes
    int N = grid.nx[0];
    double ih2 = 1.0 / sq(grid.h[0]);
    int m = N - 2;
    std::vector<double> w(N, 0.0);
    if (m <= 0) return w;
    std::vector<double> diag(m, 2.0 * ih2), rs(m);
    for (int i = 0; i < m; ++i) rs[i] = rhs[i + 1];
    for (int i = 1; i < m; ++i) {
      double factor = -ih2 / diag[i - 1];
      diag[i] -= factor * -ih2;
      rs[i] -= factor * rs[i - 1];
    }
    w[m] = rs[m - 1] / diag[m - 1];
    for (int i = m - 2; i >= 0; --i) w[i + 1] = (rs[i] + ih2 * w[i + 2]) / diag[i];
    return w;
  }

  // 2D: conjugate gradients on the 5-point Laplacian, zero Dirichlet
  int N0 = grid.nx[0], N1 = grid.nx[1];
  double i0 = 1.0 / sq(grid.h[0]), i1 = 1.0 / sq(grid.h[1]);
  auto id = [&](int i, int j) { return static_cast<size_t>(i) * N1 + j; };
  auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 1; i < N0 - 1; ++i)
      for (int j = 1; j < N1 - 1; ++j)
        y[id(i, j)] = (2.0 * x[id(i, j)] - x[id(i - 1, j)] - x[id(i + 1, j)]) * i0 +
                      (2.0 * x[id(i, j)] - x[id(i, j - 1)] - x[id(i, j + 1)]) * i1;
  };

  size_t total = static_cast<size_t>(N0) * N1;
  std::vector<double> b(total, 0.0), w(total, 0.0), r(total, 0.0), p(total, 0.0),
      Ap(total, 0.0);
  double bnorm2 = 0.0;
  for (int i = 1; i < N0 - 1; ++i)
    for (int j = 1; j < N1 - 1; ++j) {
      b[id(i, j)] = rhs[id(i, j)];
      bnorm2 += sq(b[id(i, j)]);
    }
  if (bnorm2 == 0.0) return w;

  r = b;
  p = r;
  double rr = bnorm2;
  const double tol2 = sq(1e-12) * bnorm2;
  long max_iter = 60L * std::max(N0, N1);
  for (long it = 0; it < max_iter; ++it) {
    matvec(p, Ap);
    double pAp = 0.0;
    for (int i = 1; i < N0 - 1; ++i)
      for (int j = 1; j < N1 - 1; ++j) pAp += p[id(i, j)] * Ap[id(i, j)];
    if (!(pAp > 0)) throw SolverError("Poisson CG lost positive definiteness");
    double alpha = rr / pAp;
    double rr_next = 0.0;
    for (int i = 1; i < N0 - 1; ++i)
      for (int j = 1; j < N1 - 1; ++j) {
        size_t q = id(i, j);
        w[q] += alpha * p[q];
        r[q] -= alpha * Ap[q];
        rr_next += sq(r[q]);
      }
    if (rr_next <= tol2) return w;
    double beta = rr_next / rr;
    rr = rr_next;
    for (int i = 1; i < N0 - 1; ++i)
      for (int j = 1; j < N1 - 1; ++j) {
        size_t q = id(i, j);
        p[q] = r[q] + beta * p[q];
      }
  }
  throw SolverError("Poisson CG did not reach the residual target");
}

std::vector<double> apply_laplacian(const Grid& grid, const std::vector<double>& field) {
  if (field.size() != static_cast<std::size_t>(grid.spatial_count()))
    throw DomainError("field length does not match the spatial grid");
  std::vector<double> out(field.size(), 0.0);
  if (grid.n() == 1) {
    int N = grid.nx[0];
    double ih2 = 1.0 / sq(grid.h[0]);
    for (int i = 1; i < N - 1; ++i)
      out[i] = (field[i - 1] - 2.0 * field[i] + field[i + 1]) * ih2;
    return out;
  }
  int N0 = grid.nx[0], N1 = grid.nx[1];
  double i0 = 1.0 / sq(grid.h[0]), i1 = 1.0 / sq(grid.h[1]);
  auto id = [&](int i, int j) { return static_cast<size_t>(i) * N1 + j; };
  for (int i = 1; i < N0 - 1; ++i)
    for (int j = 1; j < N1 - 1; ++j)
      out[id(i, j)] = (field[id(i - 1, j)] - 2.0 * field[id(i, j)] + field[id(i + 1, j)]) * i0 +
                      (field[id(i, j - 1)] - 2.0 * field[id(i, j)] + field[id(i, j + 1)]) * i1;
  return out;
}

double h_minus1_norm(const Grid& grid, const std::vector<double>& field) {
  std::vector<double> rhs = field;
  // zero extension: boundary entries do not participate
  std::vector<int> idx(grid.n(), 0);
  std::size_t f = 0;
  do {
    if (grid.on_spatial_boundary(idx)) rhs[f] = 0.0;
    ++f;
  } while (advance(idx, grid.nx));

  std::vector<double> w = poisson_dirichlet(grid, rhs);
  double cell = 1.0;
  for (double hv : grid.h) cell *= hv;
  double s = 0.0;
  for (size_t i = 0; i < w.size(); ++i) s += w[i] * rhs[i];
  return std::sqrt(std::max(0.0, cell * s));
}

}  // namespace conewave::mesh
