#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conewave/mesh.hpp"

using namespace conewave;
using namespace conewave::mesh;

namespace {

SpatialDomain interval(double lo, double hi, double x0 = 0.0) {
  SpatialDomain d;
  d.bounds = {{lo, hi}};
  d.x0 = {x0};
  return d;
}

SpatialDomain unit_box() {
  SpatialDomain d;
  d.bounds = {{0.0, 1.0}, {0.0, 1.0}};
  d.x0 = {0.5, 0.5};
  return d;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("build_grid: spacing, odd time axis, CFL clamp") {
  Grid g = build_grid(interval(1.0, 2.0), 2.5, {101});
  CHECK(g.h[0] == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(g.nt % 2 == 1);
  CHECK(g.k <= 0.9 * g.h[0] * (1 + 1e-12));
  CHECK(g.t(0) == doctest::Approx(-2.5));
  CHECK(g.t(g.nt - 1) == doctest::Approx(2.5));
  CHECK(g.t((g.nt - 1) / 2) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(!g.k_clamped);

  Grid b = build_grid(unit_box(), 1.0, {51, 51});
  CHECK(b.h[0] == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(b.h[1] == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(b.k <= 0.02 / std::sqrt(2.0) * (1 + 1e-12));

  // an inadmissible requested step is clamped and flagged
  Grid c = build_grid(interval(0.0, 1.0), 1.0, {11}, 0.5, 0.2);
  CHECK(c.k_clamped);
  CHECK(c.k <= 0.05 * (1 + 1e-12));
  Grid fine = build_grid(interval(0.0, 1.0), 1.0, {11}, 0.5, 0.04);
  CHECK(!fine.k_clamped);
  CHECK(fine.k == doctest::Approx(0.04).epsilon(1e-14));

  CHECK_THROWS_AS(build_grid(interval(2.0, 1.0), 1.0, {11}), DomainError);
  CHECK_THROWS_AS(build_grid(interval(0.0, 1.0), -1.0, {11}), DomainError);
  CHECK_THROWS_AS(build_grid(interval(0.0, 1.0), 1.0, {2}), DomainError);
  // cfl above the stability cap is rejected outright
  CHECK_THROWS_AS(build_grid(unit_box(), 1.0, {11, 11}, 0.9), DomainError);
}

TEST_CASE("gamma_plus: interval and box cases") {
  Grid g = build_grid(interval(1.0, 2.0), 1.0, {11});
  RegionMask gp = gamma_plus(g, {0.0});
  CHECK(gp.inside[10] == 1);  // x = 2, nu = +1, nu.(x - x0) = 2 > 0
  CHECK(gp.inside[0] == 0);   // x = 1, nu = -1, nu.(x - x0) = -1 < 0
  for (int i = 1; i < 10; ++i) CHECK(gp.inside[i] == 0);

  Grid s = build_grid(interval(-1.0, 1.0), 1.0, {11});
  RegionMask both = gamma_plus(s, {0.0});
  CHECK(both.inside[0] == 1);
  CHECK(both.inside[10] == 1);

  // box with the observation point at the center: every face participates
  Grid b = build_grid(unit_box(), 1.0, {11, 11});
  RegionMask bp = gamma_plus(b, {0.5, 0.5});
  RegionMask bd = boundary_mask(b);
  CHECK(bp.inside == bd.inside);

  // the flagged set always sits inside the discrete boundary, and together
  // with its complement covers it exactly
  RegionMask part = gamma_plus(b, {-3.0, 0.2});
  for (size_t i = 0; i < part.inside.size(); ++i) {
    CHECK(part.inside[i] <= bd.inside[i]);
  }
}

TEST_CASE("omega_region: collar width, limits, determinism") {
  Grid g = build_grid(interval(1.0, 2.0), 1.0, {101});
  RegionMask gp = gamma_plus(g, {0.0});
  RegionMask om = omega_region(g, gp, 0.3);
  for (int i = 0; i <= 100; ++i) {
    double x = g.x(0, i);
    if (x > 1.7 + 1e-9) CHECK(om.inside[i] == 1);
    if (x < 1.7 - 1e-9) CHECK(om.inside[i] == 0);
    if (x < 1.7 - g.h[0]) CHECK(om.fraction[i] == 0.0);
    if (x > 1.7 + g.h[0]) CHECK(om.fraction[i] == 1.0);
  }
  // the cut node at x = 1.7 carries the half-cell fraction
  CHECK(om.fraction[70] == doctest::Approx(0.5));

  // sigma covering the whole domain floods it
  RegionMask all = omega_region(g, gp, 5.0);
  CHECK(all.fraction_sum() == doctest::Approx(101.0));

  // sigma -> 0+: the collar's quadrature mass vanishes
  RegionMask tiny = omega_region(g, gp, 1e-6);
  CHECK(tiny.fraction_sum() <= 1e-3);

  // no flagged nodes: legal, empty
  RegionMask none = boundary_mask(g);
  std::fill(none.inside.begin(), none.inside.end(), 0);
  std::fill(none.fraction.begin(), none.fraction.end(), 0.0);
  CHECK(omega_region(g, none, 0.3).empty());

  // recomputation is bitwise identical
  RegionMask again = omega_region(g, gp, 0.3);
  CHECK(again.fraction == om.fraction);
}

TEST_CASE("cone_regions: node membership and fractions") {
  Grid g = build_grid(interval(1.0, 2.0), 2.5, {11}, 0.5, 0.05);
  REQUIRE(g.k == doctest::Approx(0.05).epsilon(1e-14));
  RegionMask D = cone_regions(g, {0.0}, 1);
  auto at = [&](int j, int i) { return D.flat({j, i}); };
  // (t, x) = (1.5, 1.2): 1.44 < 2.25, inside the cone -> excluded
  CHECK(D.inside[at(80, 2)] == 0);
  CHECK(D.fraction[at(80, 2)] == 0.0);
  // t = 0 plane is entirely kept (x0 lies outside the closure)
  for (int i = 0; i <= 10; ++i) {
    CHECK(D.inside[at(50, i)] == 1);
    CHECK(D.fraction[at(50, i)] == 1.0);
  }

  // two-time membership: t1^2 + t2^2 < r^2
  Grid tt = two_time_grid(interval(1.0, 2.0), 2.0, {11}, 0.25);
  RegionMask DD = cone_regions(tt, {0.0}, 2);
  auto at2 = [&](int j1, int j2, int i) { return DD.flat({j1, j2, i}); };
  // t1 = 1, t2 = 1, x = 2: 2 < 4 -> kept; x = 1.2: 2 > 1.44 -> dropped
  int j1 = static_cast<int>(std::lround((1.0 + 2.0) / tt.k));
  CHECK(DD.inside[at2(j1, j1, 10)] == 1);
  CHECK(DD.inside[at2(j1, j1, 2)] == 0);
}

TEST_CASE("integrate: exact box, cone-slab oracle, masks compose") {
  Grid b = build_grid(unit_box(), 1.0, {51, 51});
  RegionMask full = full_mask(b, 0);
  double area = integrate(full, [](std::size_t) { return 1.0; });
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));

  // {|x| > |t|} over (-2,2) x (1,2) has measure integral_1^2 2x dx = 3
  double exact = 3.0;
  double err_prev = -1.0;
  for (int nx : {51, 101}) {
    Grid g = build_grid(interval(1.0, 2.0), 2.0, {nx});
    RegionMask D = cone_regions(g, {0.0}, 1);
    double I = integrate(D, [](std::size_t) { return 1.0; });
    double err = std::abs(I - exact);
    CHECK(err <= 1.5 * g.h[0]);
    if (err_prev >= 0) CHECK(err < err_prev);
    err_prev = err;
  }

  // intersecting masks multiplies fractions, exactly
  Grid g = build_grid(interval(1.0, 2.0), 2.0, {51});
  RegionMask D = cone_regions(g, {0.0}, 1);
  RegionMask om = extend_in_time(g, omega_region(g, gamma_plus(g, {0.0}), 0.3), 1);
  RegionMask W = intersect(D, om);
  for (size_t i = 0; i < W.fraction.size(); ++i)
    CHECK(W.fraction[i] == D.fraction[i] * om.fraction[i]);
  double direct = integrate(W, [](std::size_t) { return 1.0; });
  double via_product =
      integrate(D, [&](std::size_t i) { return om.fraction[i] > 0 ? om.fraction[i] : 0.0; });
  CHECK(direct == doctest::Approx(via_product).epsilon(1e-12));

  // quadrature is homogeneous of degree 1 in the integrand
  double three = integrate(D, [](std::size_t) { return -3.7; });
  double one = integrate(D, [](std::size_t) { return 1.0; });
  CHECK(three == doctest::Approx(-3.7 * one).epsilon(1e-13));

  // a NaN under positive mask fraction aborts with a located message
  std::vector<double> bad(D.fraction.size(), 1.0);
  bad[D.flat({(g.nt - 1) / 2, 5})] = std::nan("");
  CHECK_THROWS_AS(integrate(D, bad), SolverError);
}

TEST_CASE("h_minus1_norm: eigenfunction oracles and linearity") {
  // 1D: -lap w = sin(pi x) on (0,1) -> w = sin(pi x)/pi^2, norm = 1/(pi sqrt 2)
  Grid g = build_grid(interval(0.0, 1.0), 1.0, {201});
  std::vector<double> phi(201);
  for (int i = 0; i < 201; ++i) phi[i] = std::sin(kPi * g.x(0, i));
  double nrm = h_minus1_norm(g, phi);
  CHECK(nrm == doctest::Approx(1.0 / (kPi * std::sqrt(2.0))).epsilon(1e-4));

  // zero field and exact degree-1 homogeneity
  CHECK(h_minus1_norm(g, std::vector<double>(201, 0.0)) == 0.0);
  std::vector<double> scaled = phi;
  for (double& v : scaled) v *= -3.7;
  CHECK(h_minus1_norm(g, scaled) == doctest::Approx(3.7 * nrm).epsilon(1e-12));

  // 2D (CG path): phi = sin(pi x) sin(pi y) -> norm = 1/(2 pi sqrt 2)
  Grid b = build_grid(unit_box(), 1.0, {81, 81});
  std::vector<double> phi2(81 * 81);
  for (int i = 0; i < 81; ++i)
    for (int j = 0; j < 81; ++j)
      phi2[static_cast<size_t>(i) * 81 + j] =
          std::sin(kPi * b.x(0, i)) * std::sin(kPi * b.x(1, j));
  double nrm2 = h_minus1_norm(b, phi2);
  CHECK(nrm2 == doctest::Approx(1.0 / (2.0 * kPi * std::sqrt(2.0))).epsilon(1e-3));
}

TEST_CASE("poisson_dirichlet and apply_laplacian are mutually consistent") {
  Grid g = build_grid(interval(0.0, 1.0), 1.0, {101});
  std::vector<double> rhs(101);
  for (int i = 0; i < 101; ++i) {
    double x = g.x(0, i);
    rhs[i] = x * (1 - x) * std::exp(x);
  }
  rhs[0] = rhs[100] = 0.0;
  std::vector<double> w = poisson_dirichlet(g, rhs);
  std::vector<double> back = apply_laplacian(g, w);
  for (int i = 1; i < 100; ++i) CHECK(-back[i] == doctest::Approx(rhs[i]).epsilon(1e-10));
  CHECK(w[0] == 0.0);
  CHECK(w[100] == 0.0);

  Grid b = build_grid(unit_box(), 1.0, {41, 41});
  std::vector<double> rhs2(41 * 41, 0.0);
  for (int i = 1; i < 40; ++i)
    for (int j = 1; j < 40; ++j)
      rhs2[static_cast<size_t>(i) * 41 + j] = std::cos(3.0 * b.x(0, i)) + b.x(1, j);
  std::vector<double> w2 = poisson_dirichlet(b, rhs2);
  std::vector<double> back2 = apply_laplacian(b, w2);
  for (int i = 1; i < 40; ++i)
    for (int j = 1; j < 40; ++j) {
      size_t q = static_cast<size_t>(i) * 41 + j;
      CHECK(-back2[q] == doctest::Approx(rhs2[q]).epsilon(1e-8));
    }
}

TEST_CASE("field container basics") {
  Field f = Field::zeros({3, 4});
  CHECK(f.nodes() == 12);
  f.check_finite("probe");
  f.data[5] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(f.check_finite("probe"), SolverError);
}
