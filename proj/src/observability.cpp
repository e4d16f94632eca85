#include "conewave/observability.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace conewave::observability {

namespace {

using mesh::Grid;
using mesh::RegionMask;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool advance(std::vector<int>& idx, const std::vector<int>& shape) {
  for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
    if (++idx[a] < shape[a]) return true;
    idx[a] = 0;
  }
  return false;
}

// Distance from c to the farthest corner of the box.
double farthest_corner(const mesh::SpatialDomain& d, const std::vector<double>& c) {
  double best = 0.0;
  int n = d.n();
  for (int corner = 0; corner < (1 << n); ++corner) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      double xa = ((corner >> a) & 1) ? d.hi(a) : d.lo(a);
      s += sq(xa - c[a]);
    }
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

// Distance from c to the closed box (zero when c lies inside).
double box_distance(const mesh::SpatialDomain& d, const std::vector<double>& c) {
  double s = 0.0;
  for (int a = 0; a < d.n(); ++a) {
    double gap = std::max({d.lo(a) - c[a], c[a] - d.hi(a), 0.0});
    s += sq(gap);
  }
  return std::sqrt(s);
}

RegionMask mask_union(const RegionMask& a, const RegionMask& b) {
  if (a.shape != b.shape) throw DomainError("mask union needs matching shapes");
  RegionMask out = a;
  for (std::size_t i = 0; i < out.fraction.size(); ++i) {
    out.fraction[i] = std::max(a.fraction[i], b.fraction[i]);
    out.inside[i] = a.inside[i] || b.inside[i];
  }
  return out;
}

// Box dilation by `cells[a]` nodes along each axis, realized as a separable
// per-axis max filter on both the indicator and the cut-cell fraction.
RegionMask dilate(const RegionMask& m, const std::vector<int>& cells) {
  RegionMask out = m;
  int na = static_cast<int>(m.shape.size());
  std::vector<long> stride(na, 1);
  for (int a = na - 2; a >= 0; --a) stride[a] = stride[a + 1] * m.shape[a + 1];
  long total = static_cast<long>(out.fraction.size());
  for (int axis = 0; axis < na; ++axis) {
    if (cells[axis] <= 0) continue;
    std::vector<double> frac = out.fraction;
    std::vector<std::uint8_t> ind = out.inside;
    for (long f = 0; f < total; ++f) {
      int i_axis = static_cast<int>((f / stride[axis]) % m.shape[axis]);
      double best = frac[f];
      std::uint8_t in = ind[f];
      for (int d = -cells[axis]; d <= cells[axis]; ++d) {
        int iq = i_axis + d;
        if (d == 0 || iq < 0 || iq >= m.shape[axis]) continue;
        long fq = f + static_cast<long>(d) * stride[axis];
        best = std::max(best, frac[fq]);
        in = in || ind[fq];
      }
      out.fraction[f] = best;
      out.inside[f] = in;
    }
  }
  return out;
}

// ((-T, T) x omega(center)) intersected with the cone exterior of `center`.
RegionMask center_region(const Grid& grid, const std::vector<double>& center, double sigma) {
  RegionMask gp = mesh::gamma_plus(grid, center);
  RegionMask om = mesh::omega_region(grid, gp, sigma);
  return mesh::intersect(mesh::extend_in_time(grid, om, 1),
                         mesh::cone_regions(grid, center, 1));
}

// Default margin for the interior union region, in cells of the setup grid.
constexpr int kInteriorDilationCells = 2;

Grid level_grid(const ObservationSetup& s, int level) {
  if (level == 0) return s.grid;
  std::vector<int> nx = s.grid.nx;
  for (int& v : nx) v = ((v - 1) << level) + 1;
  return mesh::build_grid(s.grid.domain, s.T, nx);
}

ObservationSetup setup_at_level(const ObservationSetup& s, int level) {
  if (level == 0) return s;
  return make_setup(s.grid.domain, s.mode, s.centers, s.sigma, s.T, level_grid(s, level),
                    /*allow_short_T=*/true, s.dilation);
}

double ratio_with_table(const ObservationSetup& setup, const wave::CoefficientTable& table,
                        const std::vector<double>& phi0, const std::vector<double>& phi1) {
  const Grid& g = setup.grid;
  auto ns = static_cast<std::size_t>(g.spatial_count());
  if (phi0.size() != ns || phi1.size() != ns)
    throw DomainError("data length does not match the spatial grid");

  double num = wave::l2_norm_sq(g, phi0) + sq(mesh::h_minus1_norm(g, phi1));
  if (!(num > 0.0)) throw DomainError("observability ratio needs nonzero data");

  wave::Trajectory traj = wave::solve_adjoint(table, phi0, phi1);
  double den = mesh::integrate(setup.observed, [&](std::size_t flat) {
    std::size_t j = flat / ns, node = flat % ns;
    return sq(traj.levels[j][node]);
  });
  if (!(den > 0.0)) return kInf;
  return num / den;
}

// First `count` Dirichlet Laplacian modes (unit L2 norm, exact zeros on the
// boundary), ordered by frequency magnitude.
std::vector<std::vector<double>> dirichlet_modes(const Grid& grid, int count) {
  int n = grid.n();
  std::vector<std::vector<int>> tuples;
  std::vector<int> q(n, 1);
  while (true) {
    tuples.push_back(q);
    int a = n - 1;
    while (a >= 0 && q[a] == count) q[a--] = 1;
    if (a < 0) break;
    ++q[a];
  }
  std::sort(tuples.begin(), tuples.end(),
            [](const std::vector<int>& A, const std::vector<int>& B) {
              long sa = 0, sb = 0;
              for (int v : A) sa += static_cast<long>(v) * v;
              for (int v : B) sb += static_cast<long>(v) * v;
              if (sa != sb) return sa < sb;
              return A < B;
            });
  tuples.resize(count);

  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (const auto& tq : tuples) {
    std::vector<double> field(grid.spatial_count(), 0.0);
    std::vector<int> ix(n, 0);
    std::size_t f = 0;
    do {
      if (!grid.on_spatial_boundary(ix)) {
        double v = 1.0;
        for (int a = 0; a < n; ++a)
          v *= std::sin(tq[a] * kPi * (grid.x(a, ix[a]) - grid.domain.lo(a)) /
                        grid.domain.length(a));
        field[f] = v;
      }
      ++f;
    } while (advance(ix, grid.nx));
    double norm = std::sqrt(wave::l2_norm_sq(grid, field));
    if (norm > 0.0)
      for (double& v : field) v /= norm;
    out.push_back(std::move(field));
  }
  return out;
}

struct PencilResult {
  double estimate = 0.0;
  bool ok = true;
};

// True when some node with positive fraction is spatially interior; Dirichlet
// solutions vanish on the boundary, so a mask without interior mass observes
// nothing.
bool has_interior_mass(const ObservationSetup& s) {
  const Grid& g = s.grid;
  auto ns = static_cast<std::size_t>(g.spatial_count());
  std::vector<int> ix(g.n(), 0);
  std::vector<bool> interior(ns);
  std::size_t f = 0;
  do {
    interior[f++] = !g.on_spatial_boundary(ix);
  } while (advance(ix, g.nx));
  for (std::size_t i = 0; i < s.observed.fraction.size(); ++i)
    if (s.observed.fraction[i] > 0.0 && interior[i % ns]) return true;
  return false;
}

// Exact maximizer of (pivot energy) / (observed mass) over the span of
// (mode_i, 0) and (0, mode_i): the smallest eigenvalue mu of the pencil
// (observation Gram, pivot Gram) gives 1/mu.  The pivot Gram is positive
// definite because the modes are independent, so Eigen's generalized
// self-adjoint solve applies even when the observation Gram is singular
// (mu = 0 then reports an infinite estimate).
PencilResult pencil_estimate(const ObservationSetup& setup, const wave::CoefficientTable& table,
                             const std::vector<std::vector<double>>& modes) {
  const Grid& g = setup.grid;
  auto ns = static_cast<std::size_t>(g.spatial_count());
  int m = static_cast<int>(modes.size());
  int dim = 2 * m;

  std::vector<double> zero(ns, 0.0);
  std::vector<wave::Trajectory> basis;
  basis.reserve(dim);
  for (int i = 0; i < m; ++i) basis.push_back(wave::solve_adjoint(table, modes[i], zero));
  for (int i = 0; i < m; ++i) basis.push_back(wave::solve_adjoint(table, zero, modes[i]));

  Eigen::MatrixXd pivot = Eigen::MatrixXd::Zero(dim, dim);
  RegionMask spatial = mesh::full_mask(g, 0);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double v = mesh::integrate(spatial,
                                 [&](std::size_t f) { return modes[i][f] * modes[j][f]; });
      pivot(i, j) = pivot(j, i) = v;
    }
  double cell = 1.0;
  for (double hv : g.h) cell *= hv;
  std::vector<std::vector<double>> lifted(m);
  for (int i = 0; i < m; ++i) lifted[i] = mesh::poisson_dirichlet(g, modes[i]);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double s = 0.0;
      for (std::size_t f = 0; f < ns; ++f) s += lifted[i][f] * modes[j][f];
      pivot(m + i, m + j) = pivot(m + j, m + i) = cell * s;
    }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      double v = mesh::integrate(setup.observed, [&](std::size_t flat) {
        std::size_t lev = flat / ns, node = flat % ns;
        return basis[i].levels[lev][node] * basis[j].levels[lev][node];
      });
      gram(i, j) = gram(j, i) = v;
    }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, pivot);
  PencilResult out;
  out.ok = (es.info() == Eigen::Success);
  if (!out.ok) return out;
  double mu = es.eigenvalues()(0);
  out.estimate = (mu > 0.0) ? 1.0 / mu : kInf;
  return out;
}

}  // namespace

ObservationSetup make_setup(const mesh::SpatialDomain& domain, Mode mode,
                            const std::vector<std::vector<double>>& centers, double sigma,
                            double T, const Grid& grid, bool allow_short_T,
                            const std::vector<double>& dilation) {
  domain.validate();
  if (grid.time_axes != 1) throw DomainError("observation setups use a single time axis");
  if (grid.domain.bounds != domain.bounds)
    throw DomainError("grid was built on a different domain");
  if (std::abs(grid.T - T) > 1e-12 * std::max(1.0, std::abs(T)))
    throw DomainError("grid time horizon does not match T");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(T > 0.0)) throw DomainError("T must be positive");
  int n = domain.n();
  for (const auto& c : centers)
    if (static_cast<int>(c.size()) != n) throw DomainError("center dimension mismatch");

  ObservationSetup s;
  s.mode = mode;
  s.grid = grid;
  s.centers = centers;
  s.sigma = sigma;
  s.T = T;

  if (mode == Mode::exterior) {
    if (centers.size() != 1) throw DomainError("exterior mode takes exactly one center");
    if (!dilation.empty()) throw DomainError("the margin applies to interior mode only");
    s.r_minus = box_distance(domain, centers[0]);
    if (!(s.r_minus > 0.0))
      throw DomainError("exterior center must lie outside the closure of Omega");
    s.r_plus = farthest_corner(domain, centers[0]);
    s.observed = center_region(grid, centers[0], sigma);
  } else {
    if (centers.size() != 2) throw DomainError("interior mode takes exactly two centers");
    for (const auto& c : centers)
      for (int a = 0; a < n; ++a)
        if (!(c[a] > domain.lo(a) && c[a] < domain.hi(a)))
          throw DomainError("interior centers must lie inside Omega");
    double d2 = 0.0;
    for (int a = 0; a < n; ++a) d2 += sq(centers[1][a] - centers[0][a]);
    s.r_minus = 0.5 * std::sqrt(d2);
    if (!(s.r_minus > 0.0)) throw DomainError("interior centers must be distinct");
    s.r_plus = std::max(farthest_corner(domain, centers[0]),
                        farthest_corner(domain, centers[1]));

    std::vector<double> step(1, grid.k);
    step.insert(step.end(), grid.h.begin(), grid.h.end());
    s.dilation = dilation;
    if (s.dilation.empty())
      for (double sv : step) s.dilation.push_back(kInteriorDilationCells * sv);
    if (s.dilation.size() != step.size())
      throw DomainError("margin needs one length per mask axis");
    std::vector<int> cells(step.size());
    for (std::size_t a = 0; a < step.size(); ++a) {
      if (!(s.dilation[a] >= 0.0)) throw DomainError("margin lengths must be nonnegative");
      cells[a] = static_cast<int>(std::ceil(s.dilation[a] / step[a] - 1e-9));
    }
    s.observed = dilate(mask_union(center_region(grid, centers[0], sigma),
                                   center_region(grid, centers[1], sigma)),
                        cells);
  }

  if (!(T > s.r_plus)) {
    if (!allow_short_T)
      throw DomainError("time horizon must exceed the cone radius r_plus");
    s.t_gate_bypassed = true;
  }
  return s;
}

double observability_ratio(const ObservationSetup& setup, const wave::Coefficients& coeffs,
                           const std::vector<double>& phi0, const std::vector<double>& phi1) {
  wave::CoefficientTable table = wave::sample_coefficients(coeffs, setup.grid);
  return ratio_with_table(setup, table, phi0, phi1);
}

ObservabilityReport estimate_constant(const ObservationSetup& setup,
                                      const wave::Coefficients& coeffs, int ensemble_size,
                                      int refinement_levels, std::uint64_t seed, int modes) {
  if (ensemble_size < 1) throw DomainError("ensemble must be nonempty");
  if (refinement_levels < 1) throw DomainError("need at least one level");
  if (modes < 1) throw DomainError("need at least one mode");

  ObservabilityReport rep;
  Rng root(seed);
  for (int level = 0; level < refinement_levels; ++level) {
    ObservationSetup sl = setup_at_level(setup, level);
    const Grid& g = sl.grid;
    auto ns = static_cast<std::size_t>(g.spatial_count());
    wave::CoefficientTable table = wave::sample_coefficients(coeffs, g);
    std::vector<std::vector<double>> fields = dirichlet_modes(g, modes);

    PencilResult pencil = pencil_estimate(sl, table, fields);
    rep.pencil_ok = rep.pencil_ok && pencil.ok;

    Rng lr = root.split("level-" + std::to_string(level));
    std::vector<double> ratios;
    ratios.reserve(ensemble_size);
    double max_ratio = 0.0;
    for (int e = 0; e < ensemble_size; ++e) {
      std::vector<double> p0(ns, 0.0), p1(ns, 0.0);
      for (const auto& mf : fields) {
        double a = lr.gaussian(), b = lr.gaussian();
        for (std::size_t i = 0; i < ns; ++i) {
          p0[i] += a * mf[i];
          p1[i] += b * mf[i];
        }
      }
      ratios.push_back(ratio_with_table(sl, table, p0, p1));
      max_ratio = std::max(max_ratio, ratios.back());
    }

    rep.sample_ratios.push_back(std::move(ratios));
    rep.max_sample_ratio.push_back(max_ratio);
    rep.subspace_estimate.push_back(pencil.estimate);
    rep.estimate.push_back(std::max(pencil.estimate, max_ratio));
  }

  for (int level = 1; level < refinement_levels; ++level) {
    double prev = rep.estimate[level - 1], cur = rep.estimate[level];
    double delta = (std::isfinite(prev) && std::isfinite(cur) && prev > 0.0)
                       ? std::abs(cur - prev) / prev
                       : kInf;
    rep.refinement_delta.push_back(delta);
  }
  return rep;
}

ProbeReport negative_probe(const ObservationSetup& setup, const wave::Coefficients& coeffs,
                           int refinement_levels) {
  if (setup.T > setup.r_plus && has_interior_mass(setup))
    throw DomainError("negative probe requires T <= r_plus or an empty observation region");
  if (refinement_levels < 2) throw DomainError("a trend needs at least two levels");

  ProbeReport rep;
  for (int level = 0; level < refinement_levels; ++level) {
    int m = 10 + 4 * level;
    ObservationSetup sl = setup_at_level(setup, level);
    wave::CoefficientTable table = wave::sample_coefficients(coeffs, sl.grid);
    PencilResult pencil = pencil_estimate(sl, table, dirichlet_modes(sl.grid, m));
    rep.modes_used.push_back(m);
    rep.estimates.push_back(pencil.estimate);
    if (std::isinf(pencil.estimate)) rep.infinite = true;
  }
  rep.growth = rep.infinite ? kInf : rep.estimates.back() / rep.estimates.front();
  return rep;
}

}  // namespace conewave::observability
