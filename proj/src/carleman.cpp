#include "conewave/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace conewave::carleman {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Below this f the weight is zero to double precision (f^{2a} with a >= 9),
// and naive f^{-3} scaling would hit denormal trouble; such nodes are skipped.
constexpr double kFTiny = 1e-18;
// exp underflows to zero near -745; treat anything below as exactly zero.
constexpr double kLogFloor = -744.0;

double zeta_or_zero(double log_zeta) {
  return log_zeta < kLogFloor ? 0.0 : std::exp(log_zeta);
}

// Precomputed per-setup lookup tables for the assembly loops.
struct AssemblyContext {
  int nt = 0;
  int n = 0;
  long nspace = 0;
  long stride_t1 = 0, stride_t2 = 0;
  std::vector<long> stride_x;
  std::vector<double> r;          // |x - x0| per spatial node
  std::vector<double> xrel;       // (x - x0), n entries per spatial node
  std::vector<std::uint8_t> interior;  // strictly inside the spatial box
  double cell = 0.0;              // k2^2 * prod(h)

  explicit AssemblyContext(const EstimateSetup& s) {
    const mesh::Grid& g = s.grid;
    nt = g.nt;
    n = g.n();
    nspace = g.spatial_count();
    stride_t2 = nspace;
    stride_t1 = static_cast<long>(nt) * nspace;
    stride_x.assign(n, 1);
    for (int a = n - 2; a >= 0; --a) stride_x[a] = stride_x[a + 1] * g.nx[a + 1];
    cell = g.k * g.k;
    for (int a = 0; a < n; ++a) cell *= g.h[a];

    r.assign(nspace, 0.0);
    xrel.assign(nspace * n, 0.0);
    interior.assign(nspace, 0);
    std::vector<int> ix(n, 0);
    for (long s_node = 0; s_node < nspace; ++s_node) {
      double rr = 0.0;
      bool inner = true;
      for (int a = 0; a < n; ++a) {
        double d = g.x(a, ix[a]) - g.domain.x0[a];
        xrel[s_node * n + a] = d;
        rr += d * d;
        if (ix[a] == 0 || ix[a] == g.nx[a] - 1) inner = false;
      }
      r[s_node] = std::sqrt(rr);
      interior[s_node] = inner ? 1 : 0;
      for (int a = n - 1; a >= 0; --a) {
        if (++ix[a] < g.nx[a]) break;
        ix[a] = 0;
      }
    }
  }
};

FirstOrderParts parts_from_gradients(double t1, double t2, double tau, double r,
                                     const double* xrel, int n, double f, const double grad_t[2],
                                     const double* grad_x) {
  double dtau = (t1 * grad_t[0] + t2 * grad_t[1]) / tau;
  double dr = 0.0, gx2 = 0.0;
  for (int a = 0; a < n; ++a) {
    dr += xrel[a] * grad_x[a];
    gx2 += grad_x[a] * grad_x[a];
  }
  dr /= r;
  double du = dtau - dr;
  double dv = dtau + dr;
  double u = 0.5 * (tau - r);
  double v = 0.5 * (tau + r);
  FirstOrderParts parts;
  parts.du2 = sq(u * du);
  parts.dv2 = sq(v * dv);
  parts.ang_space = f * (gx2 - dr * dr);
  parts.ang_time = f * (grad_t[0] * grad_t[0] + grad_t[1] * grad_t[1] - dtau * dtau);
  return parts;
}

void check_field_shape(const EstimateSetup& s, const mesh::Field& z) {
  const mesh::Grid& g = s.grid;
  bool ok = static_cast<int>(z.shape.size()) == 2 + g.n() && z.shape[0] == g.nt &&
            z.shape[1] == g.nt;
  for (int a = 0; ok && a < g.n(); ++a) ok = z.shape[2 + a] == g.nx[a];
  if (!ok) throw DomainError("carleman: field shape does not match the setup grid");
}

bool f_admitted(double f, const ReportOptions& opts) {
  if (!(f > kFTiny)) return false;
  if (f < opts.f_floor) return false;
  if (opts.f_ceiling > 0.0 && f >= opts.f_ceiling) return false;
  return true;
}

}  // namespace

EstimateSetup make_setup(const mesh::SpatialDomain& domain, double T, const std::vector<int>& nx,
                         const geom::CarlemanParams& params, double sigma, double k2_request) {
  domain.validate();
  if (static_cast<int>(domain.x0.size()) != domain.n())
    throw DomainError("carleman: x0 dimension does not match the domain");
  if (params.dims.m != 2 || params.dims.n != domain.n())
    throw DomainError("carleman: parameter dimensions must be (m, n) = (2, space dim)");
  params.validate();

  EstimateSetup s;
  s.grid = mesh::two_time_grid(domain, T, nx, k2_request);
  s.params = params;
  s.sigma = sigma;
  s.tau_min = s.grid.k;

  // farthest corner of the closed box from x0
  double r2 = 0.0;
  for (int a = 0; a < domain.n(); ++a) {
    double dlo = std::abs(domain.lo(a) - domain.x0[a]);
    double dhi = std::abs(domain.hi(a) - domain.x0[a]);
    r2 += sq(std::max(dlo, dhi));
  }
  s.r_plus = std::sqrt(r2);
  if (params.R < s.r_plus * (1.0 - 1e-9))
    throw DomainError("carleman: params.R must dominate sup |x - x0| over the domain");
  if (T < s.r_plus + 2.0 * s.grid.k)
    throw DomainError("carleman: need T >= sup |x - x0| + 2 k2 for full time stencils");

  s.cone = mesh::cone_regions(s.grid, domain.x0, 2);
  mesh::RegionMask collar =
      mesh::omega_region(s.grid, mesh::gamma_plus(s.grid, domain.x0), sigma);
  s.omega = mesh::intersect(mesh::extend_in_time(s.grid, collar, 2), s.cone);
  return s;
}

FirstOrderParts first_order_density(const EstimateSetup& s, const mesh::Field& z,
                                    const std::vector<int>& idx) {
  check_field_shape(s, z);
  const mesh::Grid& g = s.grid;
  if (static_cast<int>(idx.size()) != 2 + g.n())
    throw DomainError("carleman: node index must have 2 + n entries");
  int j1 = idx[0], j2 = idx[1];
  if (j1 < 1 || j1 > g.nt - 2 || j2 < 1 || j2 > g.nt - 2)
    throw DomainError("carleman: node lacks time stencil neighbors");
  std::vector<int> ix(idx.begin() + 2, idx.end());
  for (int a = 0; a < g.n(); ++a)
    if (ix[a] < 1 || ix[a] > g.nx[a] - 2)
      throw DomainError("carleman: node lacks spatial stencil neighbors");

  double t1 = g.t(j1), t2 = g.t(j2);
  double tau = std::hypot(t1, t2);
  if (tau < s.tau_min) throw DomainError("carleman: node inside the |t| exclusion band");
  std::vector<double> xrel(g.n());
  double rr = 0.0;
  for (int a = 0; a < g.n(); ++a) {
    xrel[a] = g.x(a, ix[a]) - g.domain.x0[a];
    rr += xrel[a] * xrel[a];
  }
  double r = std::sqrt(rr);
  if (r < 1e-12) throw DomainError("carleman: node at the cone center");
  double f = 0.25 * (rr - tau * tau);
  if (!(f > 0.0)) throw DomainError("carleman: node outside the cone-exterior region");

  AssemblyContext ctx(s);
  long c = (static_cast<long>(j1) * g.nt + j2) * ctx.nspace + g.spatial_index(ix);
  double grad_t[2] = {
      (z.data[c + ctx.stride_t1] - z.data[c - ctx.stride_t1]) / (2.0 * g.k),
      (z.data[c + ctx.stride_t2] - z.data[c - ctx.stride_t2]) / (2.0 * g.k)};
  std::vector<double> grad_x(g.n());
  for (int a = 0; a < g.n(); ++a)
    grad_x[a] = (z.data[c + ctx.stride_x[a]] - z.data[c - ctx.stride_x[a]]) / (2.0 * g.h[a]);
  return parts_from_gradients(t1, t2, tau, r, xrel.data(), g.n(), f, grad_t, grad_x.data());
}

NormalData normal_data(const std::vector<double>& x, const std::vector<double>& x0, int axis,
                       int side) {
  if (x.size() != x0.size() || axis < 0 || axis >= static_cast<int>(x.size()))
    throw DomainError("carleman: bad normal axis");
  double rr = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) rr += sq(x[a] - x0[a]);
  double r = std::sqrt(rr);
  if (r < 1e-12) throw DomainError("carleman: normal data at the cone center");
  double nu_dot = (side == 1 ? 1.0 : -1.0) * (x[axis] - x0[axis]);
  NormalData nd;
  nd.nr = nu_dot / r;
  nd.nf = 0.5 * nu_dot;
  return nd;
}

CarlemanReport assemble_report(const EstimateSetup& s, const mesh::Field& z,
                               const ReportOptions& opts) {
  check_field_shape(s, z);
  z.check_finite("carleman field");
  const mesh::Grid& g = s.grid;
  const AssemblyContext ctx(s);
  const double eps = s.params.epsilon, a = s.params.a, b = s.params.b, R = s.params.R;
  const double k2 = g.k;
  const double a2R3 = a * a * R * R * R;
  const double a4R4 = a * a * a * a * R * R * R * R;

  CarlemanReport rep;

  // ---- volume terms over the cone region -------------------------------
  for (int j1 = 1; j1 <= ctx.nt - 2; ++j1) {
    double t1 = g.t(j1);
    for (int j2 = 1; j2 <= ctx.nt - 2; ++j2) {
      double t2 = g.t(j2);
      double tau2 = t1 * t1 + t2 * t2;
      long base = (static_cast<long>(j1) * ctx.nt + j2) * ctx.nspace;
      for (long sn = 0; sn < ctx.nspace; ++sn) {
        double frac = s.cone.fraction[base + sn];
        double ofrac = s.omega.fraction[base + sn];
        if (frac == 0.0 && ofrac == 0.0) continue;
        double r = ctx.r[sn];
        if (r < 1e-12) continue;
        double f = 0.25 * (r * r - tau2);
        if (!f_admitted(f, opts)) continue;
        double xi = 1.0 - eps * r + eps * eps * f;
        double zeta =
            opts.unit_weight ? 1.0 : zeta_or_zero(geom::log_carleman_weight(f, xi, a, b));
        if (zeta == 0.0) continue;

        long c = base + sn;
        double zc = z.data[c];
        double w = ctx.cell * frac;
        rep.lhs_zeroth += w * (b * a * a) * zeta / std::sqrt(f) * zc * zc;
        if (!ctx.interior[sn]) continue;

        double zt1p = z.data[c + ctx.stride_t1], zt1m = z.data[c - ctx.stride_t1];
        double zt2p = z.data[c + ctx.stride_t2], zt2m = z.data[c - ctx.stride_t2];
        double grad_t[2] = {(zt1p - zt1m) / (2.0 * k2), (zt2p - zt2m) / (2.0 * k2)};
        double box = (zt1p - 2.0 * zc + zt1m + zt2p - 2.0 * zc + zt2m) / (k2 * k2);
        double grad_x[3] = {0.0, 0.0, 0.0};
        for (int ax = 0; ax < ctx.n; ++ax) {
          double zp = z.data[c + ctx.stride_x[ax]], zm = z.data[c - ctx.stride_x[ax]];
          grad_x[ax] = (zp - zm) / (2.0 * g.h[ax]);
          box -= (zp - 2.0 * zc + zm) / (g.h[ax] * g.h[ax]);
        }
        rep.rhs_bulk += w * (zeta * f / a) * box * box;

        if (ofrac > 0.0) {
          double wo = ctx.cell * ofrac;
          double gt2 = grad_t[0] * grad_t[0] + grad_t[1] * grad_t[1];
          rep.rhs_obs_gradient += wo * a2R3 * zeta / (f * f) * gt2;
          rep.rhs_obs_zeroth += wo * a4R4 * zeta / (f * f * f) * zc * zc;
        }

        double tau = std::sqrt(tau2);
        if (tau >= s.tau_min && frac > 0.0) {
          FirstOrderParts parts = parts_from_gradients(t1, t2, tau, r, &ctx.xrel[sn * ctx.n],
                                                       ctx.n, f, grad_t, grad_x);
          rep.lhs_first_order += w * eps * zeta / r * parts.total();
        }
      }
    }
  }

  // ---- boundary flux over the spatial faces ----------------------------
  std::vector<int> ix(ctx.n, 0);
  for (int axis = 0; axis < ctx.n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      long into = (side == 1 ? -1 : 1) * ctx.stride_x[axis];
      std::fill(ix.begin(), ix.end(), 0);
      ix[axis] = side == 1 ? g.nx[axis] - 1 : 0;
      while (true) {
        double tang_w = 1.0;
        std::vector<double> x(ctx.n);
        for (int ax = 0; ax < ctx.n; ++ax) {
          x[ax] = g.x(ax, ix[ax]);
          if (ax != axis) {
            tang_w *= g.h[ax];
            if (ix[ax] == 0 || ix[ax] == g.nx[ax] - 1) tang_w *= 0.5;
          }
        }
        long sn = g.spatial_index(ix);
        double r = ctx.r[sn];
        if (r >= 1e-12) {
          NormalData nd = normal_data(x, g.domain.x0, axis, side);
          for (int j1 = 1; j1 <= ctx.nt - 2; ++j1) {
            double t1 = g.t(j1);
            for (int j2 = 1; j2 <= ctx.nt - 2; ++j2) {
              double t2 = g.t(j2);
              double f = 0.25 * (r * r - t1 * t1 - t2 * t2);
              if (!f_admitted(f, opts)) continue;
              double xi = 1.0 - eps * r + eps * eps * f;
              double zeta = opts.unit_weight
                                ? 1.0
                                : zeta_or_zero(geom::log_carleman_weight(f, xi, a, b));
              if (zeta == 0.0) continue;
              long c = (static_cast<long>(j1) * ctx.nt + j2) * ctx.nspace + sn;
              double nz = (3.0 * z.data[c] - 4.0 * z.data[c + into] + z.data[c + 2 * into]) /
                          (2.0 * g.h[axis]);
              double factor = (1.0 - eps * r) * nd.nf + eps * f * nd.nr;
              if (opts.unit_weight) factor = std::abs(factor);
              rep.rhs_boundary += k2 * k2 * tang_w * zeta * factor * nz * nz;
            }
          }
        }
        // advance over the tangential indices
        int ax = ctx.n - 1;
        for (; ax >= 0; --ax) {
          if (ax == axis) continue;
          if (++ix[ax] < g.nx[ax]) break;
          ix[ax] = 0;
        }
        if (ax < 0) break;
      }
    }
  }
  return rep;
}

CarlemanReport interior_sides(const EstimateSetup& s, const mesh::Field& z,
                              const ReportOptions& opts) {
  if (s.omega.empty())
    throw DomainError("carleman: the interior form needs a nonempty observation collar");
  return assemble_report(s, z, opts);
}

CarlemanReport boundary_sides(const EstimateSetup& s, const mesh::Field& z,
                              const ReportOptions& opts) {
  return assemble_report(s, z, opts);
}

namespace {

double member_ratio(const EstimateSetup& s, const mesh::Field& z, Form form) {
  CarlemanReport rep = form == Form::interior ? interior_sides(s, z) : boundary_sides(s, z);
  if (!(rep.lhs_total() > 0.0))
    throw DomainError("carleman: family member with nonpositive left-hand side");
  return rep.empirical_ratio(form);
}

}  // namespace

double empirical_constant(const EstimateSetup& s, const std::vector<mesh::Field>& family,
                          Form form) {
  if (family.empty()) throw DomainError("carleman: empty test family");
  double best = std::numeric_limits<double>::infinity();
  for (const mesh::Field& z : family) best = std::min(best, member_ratio(s, z, form));
  return best;
}

double empirical_constant(const EstimateSetup& s, const std::vector<FieldGen>& family,
                          Form form) {
  if (family.empty()) throw DomainError("carleman: empty test family");
  double best = std::numeric_limits<double>::infinity();
  for (const FieldGen& gen : family) best = std::min(best, member_ratio(s, gen(), form));
  return best;
}

FamilyResult family_sweep(const EstimateSetup& s, const std::vector<FieldGen>& family) {
  if (family.empty()) throw DomainError("carleman: empty test family");
  if (s.omega.empty())
    throw DomainError("carleman: the interior form needs a nonempty observation collar");
  FamilyResult out;
  out.min_ratio_boundary = std::numeric_limits<double>::infinity();
  out.min_ratio_interior = std::numeric_limits<double>::infinity();
  for (const FieldGen& gen : family) {
    CarlemanReport rep = assemble_report(s, gen());
    if (!(rep.lhs_total() > 0.0))
      throw DomainError("carleman: family member with nonpositive left-hand side");
    out.min_ratio_boundary = std::min(out.min_ratio_boundary, rep.empirical_ratio(Form::boundary));
    out.min_ratio_interior = std::min(out.min_ratio_interior, rep.empirical_ratio(Form::interior));
    out.reports.push_back(rep);
  }
  return out;
}

namespace {

// boundary-vanishing spatial profile: product over axes of sin^p(pi xhat)
// with an optional low-frequency cosine modulation
std::vector<double> bump_profile(const mesh::Grid& g, Rng& rng, int power) {
  int n = g.n();
  std::vector<double> mod_freq(n), mod_phase(n);
  for (int a = 0; a < n; ++a) {
    mod_freq[a] = rng.uniform(0.0, 1.5);
    mod_phase[a] = rng.uniform(0.0, 2.0 * kPi);
  }
  std::vector<double> eta(g.spatial_count(), 1.0);
  std::vector<int> ix(n, 0);
  for (long sn = 0; sn < g.spatial_count(); ++sn) {
    double val = 1.0;
    for (int a = 0; a < n; ++a) {
      double xhat = (g.x(a, ix[a]) - g.domain.lo(a)) / g.domain.length(a);
      double base = std::sin(kPi * xhat);
      val *= (power == 2 ? base * base : base) *
             (1.0 + 0.4 * std::cos(2.0 * kPi * mod_freq[a] * xhat + mod_phase[a]));
    }
    eta[sn] = val;
    for (int a = n - 1; a >= 0; --a) {
      if (++ix[a] < g.nx[a]) break;
      ix[a] = 0;
    }
  }
  return eta;
}

mesh::Field bump_member(const EstimateSetup& s, Rng rng, int variant) {
  const mesh::Grid& g = s.grid;
  int nt = g.nt;
  long nspace = g.spatial_count();
  std::vector<double> eta = bump_profile(g, rng, variant == 0 ? 1 : 2);
  double w1 = rng.uniform(0.5, 2.0), w2 = rng.uniform(0.5, 2.0);
  double p1 = rng.uniform(0.0, 2.0 * kPi), p2 = rng.uniform(0.0, 2.0 * kPi);
  double w3 = rng.uniform(0.5, 2.0), w4 = rng.uniform(0.5, 2.0);

  std::vector<double> rsq;
  if (variant == 3) {
    rsq.resize(nspace);
    AssemblyContext ctx(s);
    for (long sn = 0; sn < nspace; ++sn) rsq[sn] = ctx.r[sn] * ctx.r[sn];
  }

  std::vector<int> shape = {nt, nt};
  for (int a = 0; a < g.n(); ++a) shape.push_back(g.nx[a]);
  mesh::Field out = mesh::Field::zeros(shape);
  for (int j1 = 0; j1 < nt; ++j1) {
    double t1 = g.t(j1);
    for (int j2 = 0; j2 < nt; ++j2) {
      double t2 = g.t(j2);
      double gt;
      if (variant == 2)
        gt = std::cos(w1 * t1 + p1) * std::cos(w2 * t2 + p2) +
             0.5 * std::sin(w3 * t1) * std::sin(w4 * t2);
      else
        gt = std::cos(w1 * t1 + p1) * std::cos(w2 * t2 + p2);
      double tau2 = t1 * t1 + t2 * t2;
      long base = (static_cast<long>(j1) * nt + j2) * nspace;
      for (long sn = 0; sn < nspace; ++sn) {
        double val = eta[sn] * gt;
        if (variant == 3) {
          double f = 0.25 * (rsq[sn] - tau2);
          val *= f * f;
        }
        out.data[base + sn] = val;
      }
    }
  }
  return out;
}

std::vector<double> random_modes(const mesh::Grid& g, Rng& rng, double amp) {
  int n = g.n();
  long nspace = g.spatial_count();
  std::vector<double> out(nspace, 0.0);
  for (int mode = 0; mode < 4; ++mode) {
    std::vector<int> q(n);
    for (int a = 0; a < n; ++a) q[a] = rng.uniform_int(1, 3);
    double c = amp * rng.gaussian() / (1.0 + mode);
    std::vector<int> ix(n, 0);
    for (long sn = 0; sn < nspace; ++sn) {
      double val = c;
      for (int a = 0; a < n; ++a) {
        double xhat = (g.x(a, ix[a]) - g.domain.lo(a)) / g.domain.length(a);
        val *= std::sin(q[a] * kPi * xhat);
      }
      out[sn] += val;
      for (int a = n - 1; a >= 0; --a) {
        if (++ix[a] < g.nx[a]) break;
        ix[a] = 0;
      }
    }
  }
  return out;
}

}  // namespace

mesh::Field trajectory_member(const EstimateSetup& s, const wave::Coefficients& coeffs,
                              const std::vector<double>& phi0, const std::vector<double>& phi1) {
  const mesh::Grid& g2 = s.grid;
  double cap = 0.9 / std::sqrt(static_cast<double>(g2.n()));
  int stride = std::max(1, static_cast<int>(std::ceil(g2.k / (cap * g2.h_min()) - 1e-9)));
  mesh::Grid g1 = mesh::build_grid(g2.domain, g2.T, g2.nx, -1.0, g2.k / stride);
  if (g1.k_clamped) {  // requested step sat an ulp above the stability bound
    ++stride;
    g1 = mesh::build_grid(g2.domain, g2.T, g2.nx, -1.0, g2.k / stride);
  }
  wave::CoefficientTable table = wave::sample_coefficients(coeffs, g1);
  wave::Trajectory traj = wave::solve_adjoint(table, phi0, phi1);
  wave::TwoTimeField z2 = wave::build_z(traj, g2.k);
  if (z2.grid2.nt != g2.nt || std::abs(z2.grid2.k - g2.k) > 1e-12)
    throw SolverError("carleman: trajectory two-time grid does not match the setup grid");

  std::vector<int> shape = {g2.nt, g2.nt};
  for (int a = 0; a < g2.n(); ++a) shape.push_back(g2.nx[a]);
  mesh::Field out = mesh::Field::zeros(shape);
  long nspace = g2.spatial_count();
  std::vector<double> row(nspace);
  for (int j1 = 0; j1 < g2.nt; ++j1)
    for (int j2 = 0; j2 < g2.nt; ++j2) {
      z2.z_row(j1, j2, row);
      std::copy(row.begin(), row.end(), out.data.begin() + (static_cast<long>(j1) * g2.nt + j2) * nspace);
    }
  return out;
}

std::vector<FieldGen> standard_family(const EstimateSetup& s, int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("carleman: family count must be positive");
  Rng root(seed);
  std::vector<FieldGen> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng member = root.split("member-" + std::to_string(i));
    int variant = i % 5;
    if (variant <= 3) {
      out.push_back([&s, member, variant]() { return bump_member(s, member, variant); });
    } else {
      out.push_back([&s, member, i]() {
        Rng local = member;  // keep repeated invocations identical
        std::vector<double> phi0 = random_modes(s.grid, local, 1.0);
        std::vector<double> phi1 = random_modes(s.grid, local, 0.5);
        wave::Coefficients c = wave::Coefficients::zero(s.grid.n());
        if ((i / 5) % 2 == 1) {
          int n = s.grid.n();
          c.X = [n](double t, const std::vector<double>& x) {
            std::vector<double> comps(n + 1, 0.0);
            comps[0] = 0.2 * std::cos(t);
            comps[1] = 0.15 * std::sin(x[0]);
            return comps;
          };
          c.V = [](double t, const std::vector<double>&) { return 0.4 * std::cos(t); };
        }
        return trajectory_member(s, c, phi0, phi1);
      });
    }
  }
  return out;
}

geom::CarlemanParams strong_parameter_preset(const geom::Dimensions& dims, double R, double M,
                                             double delta, double margin) {
  if (R <= 0.0 || M <= 0.0 || delta <= 0.0 || margin <= 0.0)
    throw DomainError("carleman: preset arguments must be positive");
  geom::CarlemanParams p;
  p.dims = dims;
  p.R = R;
  p.epsilon = delta * delta / R;
  p.b = delta / R;
  double mn = static_cast<double>(dims.m + dims.n);
  p.a = std::max({mn * mn, std::ceil(margin * M * M * R * R * R), std::ceil(margin * M * R)});
  p.validate();
  return p;
}

}  // namespace conewave::carleman
