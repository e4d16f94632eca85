#include "conewave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace conewave::geom {

namespace {

double norm2(const std::vector<double>& w) {
  double s = 0;
  for (double c : w) s += c * c;
  return std::sqrt(s);
}

}  // namespace

void validate_dims(const Dimensions& d) {
  if (d.m < 1 || d.m > 3 || d.n < 1 || d.n > 3)
    throw DomainError("dimensions out of supported range (1..3 each)");
}

NullFrame null_frame(const SpacetimePoint& p) {
  NullFrame fr;
  fr.tau = norm2(p.t);
  fr.r = norm2(p.x);
  fr.u = 0.5 * (fr.tau - fr.r);
  fr.v = 0.5 * (fr.tau + fr.r);
  fr.f = -fr.u * fr.v;
  if (fr.tau > 0) {
    fr.omega_t.resize(p.t.size());
    for (size_t i = 0; i < p.t.size(); ++i) fr.omega_t[i] = p.t[i] / fr.tau;
  }
  if (fr.r > 0) {
    fr.omega_x.resize(p.x.size());
    for (size_t i = 0; i < p.x.size(); ++i) fr.omega_x[i] = p.x[i] / fr.r;
  }
  return fr;
}

SpacetimePoint point_from_polar(double tau, double r, const std::vector<double>& omega_t,
                                const std::vector<double>& omega_x) {
  SpacetimePoint p;
  p.t.resize(omega_t.size());
  for (size_t i = 0; i < omega_t.size(); ++i) p.t[i] = tau * omega_t[i];
  p.x.resize(omega_x.size());
  for (size_t i = 0; i < omega_x.size(); ++i) p.x[i] = r * omega_x[i];
  return p;
}

std::vector<double> unit_from_angles(int d, const std::vector<double>& ang) {
  if (d == 2) {
    if (ang.size() != 1) throw DomainError("S^1 chart needs one angle");
    return {std::cos(ang[0]), std::sin(ang[0])};
  }
  if (d == 3) {
    if (ang.size() != 2) throw DomainError("S^2 chart needs two angles");
    double st = std::sin(ang[0]);
    return {st * std::cos(ang[1]), st * std::sin(ang[1]), std::cos(ang[0])};
  }
  throw DomainError("angular chart only defined for d in {2,3}");
}

std::vector<double> angles_from_unit(const std::vector<double>& w) {
  if (w.size() == 2) return {std::atan2(w[1], w[0])};
  if (w.size() == 3) {
    double c = std::clamp(w[2], -1.0, 1.0);
    return {std::acos(c), std::atan2(w[1], w[0])};
  }
  throw DomainError("angular chart only defined for d in {2,3}");
}

WarpedScalars warped_scalars(const NullFrame& fr, double eps, const Dimensions& dims) {
  validate_dims(dims);
  WarpedScalars s;
  s.rho = fr.r + 2.0 * eps * fr.f;
  s.xi = (1.0 + eps * fr.u) * (1.0 - eps * fr.v);
  if (s.rho <= 0) throw DomainError("warped radius rho <= 0 at this point");
  s.h_bar = 0.5 + eps * fr.f / (2.0 * s.rho);
  s.w_bar = 0.25 * (dims.n + dims.m - 2) + (dims.n - 2) * eps * fr.f / (2.0 * s.rho);
  return s;
}

WarpedFrameFields warped_frame_fields(const NullFrame& fr, double eps, const Dimensions& dims) {
  validate_dims(dims);
  if (!(fr.f > 0)) throw DomainError("frame fields need a cone-exterior point (f > 0)");
  WarpedScalars s = warped_scalars(fr, eps, dims);
  WarpedFrameFields w;
  double root = 2.0 * std::sqrt(fr.f);
  w.T_u = -fr.u / root;
  w.T_v = fr.v / root;
  w.N_u = fr.u / root;
  w.N_v = fr.v / root;
  w.gamma.u_ab = (1.0 - 2.0 * eps * fr.u) / (2.0 * s.rho);
  w.gamma.v_ab = -(1.0 + 2.0 * eps * fr.v) / (2.0 * s.rho);
  w.gamma.a_ub = -(1.0 + 2.0 * eps * fr.v) / s.rho;
  w.gamma.a_vb = (1.0 - 2.0 * eps * fr.u) / s.rho;
  w.gamma.u_CD = fr.tau > 0 ? 1.0 / (2.0 * fr.tau) : 0.0;
  w.gamma.v_CD = w.gamma.u_CD;
  w.gamma.C_uD = fr.tau > 0 ? 1.0 / fr.tau : 0.0;
  w.gamma.C_vD = w.gamma.C_uD;
  double k = eps * fr.f / (2.0 * s.rho);
  w.pi_TT = k;
  w.pi_NN = -k;
  w.pi_ab = k;
  w.pi_CD = -k;
  return w;
}

CarlemanParams CarlemanParams::from_delta(const Dimensions& dims, double R, double delta,
                                          double a_override, double a_slope, double kappa1,
                                          double kappa2) {
  validate_dims(dims);
  if (R <= 0) throw DomainError("radius scale R must be positive");
  if (delta <= 0 || delta >= 1) throw DomainError("delta must lie in (0,1)");
  CarlemanParams prm;
  prm.dims = dims;
  prm.R = R;
  prm.epsilon = delta * delta / R;
  prm.b = delta / R;
  double mn = static_cast<double>(dims.m + dims.n);
  prm.a = a_override > 0 ? a_override : std::max(mn * mn, std::ceil(a_slope * R));
  prm.validate(kappa1, kappa2);
  return prm;
}

void CarlemanParams::validate(double kappa1, double kappa2) const {
  validate_dims(dims);
  double mn = static_cast<double>(dims.m + dims.n);
  if (!(a >= mn * mn)) throw DomainError("parameter a below (m+n)^2");
  if (!(b > 0) || !(R > 0)) throw DomainError("parameters b, R must be positive");
  if (epsilon < 0) throw DomainError("epsilon must be nonnegative");
  if (kappa1 * epsilon > b * (1.0 + 1e-12))
    throw DomainError("separation kappa1*eps <= b violated");
  if (kappa2 * b * R > 1.0 + 1e-12) throw DomainError("separation kappa2*b*R <= 1 violated");
}

double log_carleman_weight(double f, double xi, double a, double b) {
  if (!(f > 0) || !(xi > 0)) throw DomainError("log weight needs f > 0 and xi > 0");
  double q = f / xi;
  return 2.0 * a * (std::log(q) + 2.0 * b * std::sqrt(q));
}

double carleman_weight(const SpacetimePoint& p, const SpacetimePoint& center,
                       const CarlemanParams& prm) {
  if (p.t.size() != center.t.size() || p.x.size() != center.x.size())
    throw DomainError("point/center dimension mismatch");
  SpacetimePoint q;
  q.t.resize(p.t.size());
  q.x.resize(p.x.size());
  for (size_t i = 0; i < p.t.size(); ++i) q.t[i] = p.t[i] - center.t[i];
  for (size_t i = 0; i < p.x.size(); ++i) q.x[i] = p.x[i] - center.x[i];
  NullFrame fr = null_frame(q);
  double xi = (1.0 + prm.epsilon * fr.u) * (1.0 - prm.epsilon * fr.v);
  if (!(xi > 0)) throw DomainError("compression factor xi <= 0; epsilon too large for this point");
  if (!(fr.f > 0)) return 0.0;  // continuous extension across the cone
  return std::exp(log_carleman_weight(fr.f, xi, prm.a, prm.b));
}

double IdentityResiduals::max_residual() const {
  double m = 0;
  for (const auto& e : entries) m = std::max(m, e.residual);
  return m;
}

const IdentityEntry* IdentityResiduals::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

namespace {

// Radial scalars as functions of (u,v) at fixed eps.
struct UvScalars {
  double eps;
  double f(double u, double v) const { return -u * v; }
  double rho(double u, double v) const { return (v - u) + 2.0 * eps * (-u * v); }
  double f_over_rho(double u, double v) const { return f(u, v) / rho(u, v); }
};

template <class F>
struct UvDerivs {
  // centered stencils of a scalar F(u,v) around (u0,v0)
  const F& fn;
  double u0, v0, h;
  double at(double du, double dv) const { return fn(u0 + du, v0 + dv); }
  double du() const { return (at(h, 0) - at(-h, 0)) / (2 * h); }
  double dv() const { return (at(0, h) - at(0, -h)) / (2 * h); }
  double duu() const { return (at(h, 0) - 2 * at(0, 0) + at(-h, 0)) / (h * h); }
  double dvv() const { return (at(0, h) - 2 * at(0, 0) + at(0, -h)) / (h * h); }
  double duv() const {
    return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
  }
};

}  // namespace

IdentityResiduals warped_identity_residuals(const SpacetimePoint& p, double eps, double fd_step,
                                            const Dimensions& dims) {
  validate_dims(dims);
  NullFrame fr = null_frame(p);
  if (!(fr.f > 0)) throw DomainError("identity check needs a cone-exterior point");
  if (!(fr.tau > 2 * fd_step) || !(fr.r > 2 * fd_step))
    throw DomainError("point too close to a chart degeneracy for this fd_step");
  const double u0 = fr.u, v0 = fr.v, h = fd_step;
  const int m = dims.m, n = dims.n;
  UvScalars S{eps};
  WarpedScalars ws = warped_scalars(fr, eps, dims);
  WarpedFrameFields ff = warped_frame_fields(fr, eps, dims);
  const double rho0 = ws.rho, tau0 = fr.tau, r0 = fr.r, f0 = fr.f;

  // wave operator of the warped metric on a radial scalar, derivatives numeric
  auto box = [&](auto&& fn) {
    UvDerivs<std::decay_t<decltype(fn)>> d{fn, u0, v0, h};
    double cu = (1.0 - 2.0 * eps * u0);   // d_v rho
    double cv = (1.0 + 2.0 * eps * v0);   // -d_u rho
    double ang_x = (n - 1) / (2.0 * rho0);
    double ang_t = (m - 1) / (2.0 * tau0);
    return -d.duv() - ang_x * (cu * d.du() - cv * d.dv()) - ang_t * (d.du() + d.dv());
  };

  auto f_fn = [&](double u, double v) { return S.f(u, v); };
  auto frho_fn = [&](double u, double v) { return S.f_over_rho(u, v); };
  // w_bar minus its additive constant: second differences of the constant
  // would only contribute h^{-2} roundoff noise, and the operator annihilates
  // constants exactly.
  auto wvar_fn = [&](double u, double v) {
    return (n - 2) * eps * 0.5 * S.f_over_rho(u, v);
  };

  UvDerivs<decltype(f_fn)> df{f_fn, u0, v0, h};
  UvDerivs<decltype(frho_fn)> dfr{frho_fn, u0, v0, h};

  IdentityResiduals out;
  auto push = [&](const char* id, double analytic, double numeric) {
    out.entries.push_back({id, analytic, numeric, std::abs(numeric - analytic)});
  };

  // sharp gradient components: (grad f)^u = -1/2 d_v f, (grad f)^v = -1/2 d_u f
  push("grad_sharp_u", 0.5 * u0, -0.5 * df.dv());
  push("grad_sharp_v", 0.5 * v0, -0.5 * df.du());
  // |grad f|^2 = f
  push("grad_square", f0, -df.du() * df.dv());
  // Hessian, uv entry: -1
  double hess_uu = df.duu();
  double hess_vv = df.dvv();
  double hess_uv = df.duv();
  push("hess_uv", -1.0, hess_uv);
  // Hessian, angular blocks (scale factors of the metric blocks)
  if (n >= 2) {
    double num = -(ff.gamma.u_ab * df.du() + ff.gamma.v_ab * df.dv());
    push("hess_ang_x", 0.5 + eps * f0 / rho0, num);
  }
  if (m >= 2) {
    double num = -(ff.gamma.u_CD * df.du() + ff.gamma.v_CD * df.dv());
    push("hess_ang_t", 0.5, num);
  }
  // Hessian in the unit frame
  double hTT = ff.T_u * ff.T_u * hess_uu + 2 * ff.T_u * ff.T_v * hess_uv + ff.T_v * ff.T_v * hess_vv;
  double hNN = ff.N_u * ff.N_u * hess_uu + 2 * ff.N_u * ff.N_v * hess_uv + ff.N_v * ff.N_v * hess_vv;
  double hTN = ff.T_u * ff.N_u * hess_uu + (ff.T_u * ff.N_v + ff.T_v * ff.N_u) * hess_uv +
               ff.T_v * ff.N_v * hess_vv;
  push("hess_TT", -0.5, hTT);
  push("hess_NN", 0.5, hNN);
  push("hess_TN", 0.0, hTN);
  // cubic contraction grad f . Hess f . grad f = f/2
  double gu = -0.5 * df.dv(), gv = -0.5 * df.du();
  push("grad_cubic", 0.5 * f0,
       gu * gu * hess_uu + 2 * gu * gv * hess_uv + gv * gv * hess_vv);
  // wave operator values
  push("box_f", 0.5 * (n + m) + (n - 1) * eps * f0 / rho0, box(f_fn));
  push("box_f_rho",
       -(n - 3) * f0 / (rho0 * rho0 * rho0) + (n + m - 2) * r0 / (2.0 * rho0 * rho0),
       box(frho_fn));
  push("box_w",
       -(n - 2) * eps / (2.0 * rho0) *
           ((n - 3) * f0 / (rho0 * rho0) - (n + m - 2) * r0 / (2.0 * rho0)),
       box(wvar_fn));
  // partials of f/rho
  push("du_f_rho", -v0 * v0 / (rho0 * rho0), dfr.du());
  push("dv_f_rho", u0 * u0 / (rho0 * rho0), dfr.dv());
  // deformation tensor components (numeric Hessian minus analytic h_bar)
  push("pi_TT", ff.pi_TT, hTT + ws.h_bar);
  push("pi_NN", ff.pi_NN, hNN - ws.h_bar);
  if (n >= 2) {
    double num = -(ff.gamma.u_ab * df.du() + ff.gamma.v_ab * df.dv()) - ws.h_bar;
    push("pi_ang_x", ff.pi_ab, num);
  }
  if (m >= 2) {
    double num = -(ff.gamma.u_CD * df.du() + ff.gamma.v_CD * df.dv()) - ws.h_bar;
    push("pi_ang_t", ff.pi_CD, num);
  }

  out.bounds_ok = (0 < -u0) && (-u0 < r0) && (0 < v0) && (v0 < r0) && (0 < f0) && (f0 < r0 * r0);
  out.root_f_below_rho = std::sqrt(f0) < rho0;
  return out;
}

SpacetimePoint conformal_map(const SpacetimePoint& p, double eps, double R) {
  NullFrame fr = null_frame(p);
  if (!(fr.f > 0)) throw DomainError("compression map needs a cone-exterior point");
  if (!(fr.r < R)) throw DomainError("compression map needs r < R");
  double du = 1.0 + eps * fr.u;
  double dv = 1.0 - eps * fr.v;
  if (!(du > 0) || !(dv > 0)) throw DomainError("compression map degenerate: epsilon too large");
  double ub = fr.u / du;
  double vb = fr.v / dv;
  double tau_b = ub + vb;
  double r_b = vb - ub;
  std::vector<double> omt = fr.omega_t;
  std::vector<double> omx = fr.omega_x;
  if (omt.empty()) omt.assign(p.t.size(), 0.0);  // tau == 0 stays tau == 0
  if (omx.empty()) omx.assign(p.x.size(), 0.0);
  return point_from_polar(tau_b, r_b, omt, omx);
}

namespace {

// Point parameterized by null chart coordinates plus angular chart angles.
// Axes with dimension 1 keep their (fixed, possibly signed) unit direction.
struct PolarChart {
  int m, n;
  std::vector<double> fixed_omt, fixed_omx;  // used when angular dim is 1
  std::vector<double> ang_t, ang_x;          // chart angles when dim >= 2

  SpacetimePoint at(double u, double v, const std::vector<double>& at_shift,
                    const std::vector<double>& ax_shift) const {
    double tau = u + v, r = v - u;
    std::vector<double> omt, omx;
    if (m >= 2) {
      std::vector<double> a = ang_t;
      for (size_t i = 0; i < a.size(); ++i) a[i] += at_shift[i];
      omt = unit_from_angles(m, a);
    } else {
      omt = fixed_omt;
    }
    if (n >= 2) {
      std::vector<double> a = ang_x;
      for (size_t i = 0; i < a.size(); ++i) a[i] += ax_shift[i];
      omx = unit_from_angles(n, a);
    } else {
      omx = fixed_omx;
    }
    return point_from_polar(tau, r, omt, omx);
  }
};

// Wave operator in the null-polar chart for metric with radius function
// rho(u,v) (warped: r + 2 eps f; flat: eps = 0 gives rho = r), acting on a
// scalar supplied through chart evaluations.  drho_u/drho_v are the analytic
// partials of rho at the base point.
struct ChartBox {
  int m, n;
  double u0, v0, h;
  double rho0, drho_u, drho_v, tau0;

  template <class Eval>
  double apply(Eval&& G) const {
    std::vector<double> z0t(std::max(0, m - 1), 0.0), z0x(std::max(0, n - 1), 0.0);
    auto at = [&](double du, double dv) { return G(u0 + du, v0 + dv, z0t, z0x); };
    double duv = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
    double du = (at(h, 0) - at(-h, 0)) / (2 * h);
    double dv = (at(0, h) - at(0, -h)) / (2 * h);
    double cu = 0.5 * ((n - 1) * drho_v / rho0 + (m - 1) / tau0);  // multiplies d_u
    double cv = 0.5 * ((n - 1) * drho_u / rho0 + (m - 1) / tau0);  // multiplies d_v
    double val = -duv - cv * dv - cu * du;
    if (n >= 2) val += lap_sphere(G, /*temporal=*/false) / (rho0 * rho0);
    if (m >= 2) val -= lap_sphere(G, /*temporal=*/true) / (tau0 * tau0);
    return val;
  }

  template <class Eval>
  double lap_sphere(Eval&& G, bool temporal) const {
    int d = temporal ? m : n;
    auto at = [&](double s0, double s1) {
      std::vector<double> st(std::max(0, m - 1), 0.0), sx(std::max(0, n - 1), 0.0);
      auto& s = temporal ? st : sx;
      s[0] = s0;
      if (d == 3) s[1] = s1;
      return G(u0, v0, st, sx);
    };
    double c = at(0, 0);
    double d2_0 = (at(h, 0) - 2 * c + at(-h, 0)) / (h * h);
    if (d == 2) return d2_0;
    // d == 3: theta is slot 0, phi slot 1; needs the base theta for cot/sin
    double theta = base_theta(temporal);
    double d1_0 = (at(h, 0) - at(-h, 0)) / (2 * h);
    double d2_1 = (at(0, h) - 2 * c + at(0, -h)) / (h * h);
    double st = std::sin(theta);
    return d2_0 + (std::cos(theta) / st) * d1_0 + d2_1 / (st * st);
  }

  double base_theta(bool temporal) const { return temporal ? theta_t : theta_x; }
  double theta_t = 0, theta_x = 0;
};

}  // namespace

ConformalResiduals conformal_residuals(const SpacetimePoint& p, double eps, double R,
                                       const std::function<double(const SpacetimePoint&)>& zbar,
                                       double fd_step, const Dimensions& dims) {
  validate_dims(dims);
  const int m = dims.m, n = dims.n;
  NullFrame fr = null_frame(p);
  if (!(fr.f > 0) || !(fr.r < R)) throw DomainError("point outside the admissible region");
  WarpedScalars ws = warped_scalars(fr, eps, dims);
  const double xi = ws.xi;
  if (!(xi > 0)) throw DomainError("compression factor not positive");

  SpacetimePoint q = conformal_map(p, eps, R);
  NullFrame fq = null_frame(q);
  WarpedScalars wq = warped_scalars(fq, eps, dims);
  const double h = fd_step;

  // image chart coordinates computed analytically (avoids the Cartesian
  // roundtrip noise of conformal_map; the map itself is validated separately
  // through the transform rules below)
  const double ub = fr.u / (1.0 + eps * fr.u);
  const double vb = fr.v / (1.0 - eps * fr.v);
  const double tau_q = ub + vb, r_q = vb - ub, f_q = -ub * vb;
  const double rho_q = r_q + 2.0 * eps * f_q;

  // chart-degeneracy guard: stencils in tau, r and sphere angles must stay
  // well inside their charts at both the source and the image
  double margin = 4.0 * h;
  if (fr.tau < margin || fr.r < margin || tau_q < margin || r_q < margin)
    throw DomainError("chart degenerates within the FD stencil");
  auto theta_ok = [&](const std::vector<double>& w) {
    if (w.size() != 3) return true;
    double theta = std::acos(std::clamp(w[2], -1.0, 1.0));
    return theta > 0.15 && theta < 3.141592653589793 - 0.15;
  };
  if (!theta_ok(fr.omega_t) || !theta_ok(fr.omega_x))
    throw DomainError("chart degenerates within the FD stencil");

  ConformalResiduals out;

  // (a) transform rules tau -> tau/xi, f -> f/xi, rho -> r/xi
  double e1 = std::abs(fq.tau - fr.tau / xi) / std::max(1.0, fq.tau);
  double e2 = std::abs(fq.f - fr.f / xi) / std::max(1.0, std::abs(fq.f));
  double e3 = std::abs(wq.rho - fr.r / xi) / std::max(1.0, wq.rho);
  out.transform_rel = std::max({e1, e2, e3});

  // (b) pullback metric against xi^{-2} * flat, with the analytic Jacobian
  double Ju = 1.0 / sq(1.0 + eps * fr.u);
  double Jv = 1.0 / sq(1.0 - eps * fr.v);
  double xi2 = 1.0 / (xi * xi);
  double r_uv = std::abs(-2.0 * Ju * Jv - xi2 * (-2.0));
  double r_ab = n >= 2 ? std::abs(rho_q * rho_q - xi2 * fr.r * fr.r) : 0.0;
  double r_CD = m >= 2 ? std::abs(tau_q * tau_q - xi2 * fr.tau * fr.tau) : 0.0;
  out.metric_pullback = std::max({r_uv, r_ab, r_CD});

  // (c) conformal wave-operator law.  All functions through chart evaluators:
  //   z(source chart)  = zbar(compressed point)
  //   ztil(image chart) = xi(preimage)^kappa * zbar(point)
  PolarChart chart{m, n, fr.omega_t, fr.omega_x, {}, {}};
  if (m >= 2) chart.ang_t = angles_from_unit(fr.omega_t);
  if (n >= 2) chart.ang_x = angles_from_unit(fr.omega_x);
  PolarChart chart_q = chart;  // same angular rays at the image
  const double kappa = 0.5 * (m + n) - 1.0;

  auto z_source = [&](double u, double v, const std::vector<double>& st,
                      const std::vector<double>& sx) {
    double du = 1.0 + eps * u, dv = 1.0 - eps * v;
    double ub = u / du, vb = v / dv;
    PolarChart c = chart;
    SpacetimePoint pt = c.at(ub, vb, st, sx);
    // c.at() adds shifts to base angles; ub,vb passed directly
    return zbar(pt);
  };
  auto ztil_image = [&](double u, double v, const std::vector<double>& st,
                        const std::vector<double>& sx) {
    // preimage of the (u,v) part under the compression map
    double upre = u / (1.0 - eps * u);
    double vpre = v / (1.0 + eps * v);
    double xipre = (1.0 + eps * upre) * (1.0 - eps * vpre);
    PolarChart c = chart_q;
    SpacetimePoint pt = c.at(u, v, st, sx);
    return std::pow(xipre, kappa) * zbar(pt);
  };

  // flat wave operator at the source (rho = r, drho_u = -1, drho_v = +1)
  ChartBox box_flat{m, n, fr.u, fr.v, h, fr.r, -1.0, 1.0, fr.tau};
  if (m == 3) box_flat.theta_t = chart.ang_t[0];
  if (n == 3) box_flat.theta_x = chart.ang_x[0];
  double box_z = box_flat.apply(z_source);

  // warped wave operator at the image point
  ChartBox box_w{m,  n,  ub, vb, h, rho_q, -(1.0 + 2.0 * eps * vb),
                 (1.0 - 2.0 * eps * ub), tau_q};
  if (m == 3) box_w.theta_t = chart_q.ang_t[0];
  if (n == 3) box_w.theta_x = chart_q.ang_x[0];
  double box_ztil = box_w.apply(ztil_image);

  double coef = (n - 1) * (m + n - 2) * eps / (2.0 * rho_q);
  std::vector<double> zt(std::max(0, m - 1), 0.0), zx(std::max(0, n - 1), 0.0);
  double lhs = box_ztil + coef * ztil_image(ub, vb, zt, zx);
  double rhs = std::pow(xi, kappa + 2.0) * box_z;
  out.wave_law = std::abs(lhs - rhs);
  return out;
}

double weight_gradient_ratio(const SpacetimePoint& p, const SpacetimePoint& center,
                             const CarlemanParams& prm, double fd_step) {
  auto logz = [&](const SpacetimePoint& q) {
    SpacetimePoint s;
    s.t.resize(q.t.size());
    s.x.resize(q.x.size());
    for (size_t i = 0; i < q.t.size(); ++i) s.t[i] = q.t[i] - center.t[i];
    for (size_t i = 0; i < q.x.size(); ++i) s.x[i] = q.x[i] - center.x[i];
    NullFrame fr = null_frame(s);
    if (!(fr.f > 0)) throw DomainError("gradient stencil leaves the cone exterior");
    double xi = (1.0 + prm.epsilon * fr.u) * (1.0 - prm.epsilon * fr.v);
    return log_carleman_weight(fr.f, xi, prm.a, prm.b);
  };
  double f0;
  {
    // f of the center-shifted point, which is what the bound refers to
    SpacetimePoint s;
    s.t.resize(p.t.size());
    s.x.resize(p.x.size());
    for (size_t i = 0; i < p.t.size(); ++i) s.t[i] = p.t[i] - center.t[i];
    for (size_t i = 0; i < p.x.size(); ++i) s.x[i] = p.x[i] - center.x[i];
    f0 = null_frame(s).f;
  }
  if (!(f0 > 0)) throw DomainError("gradient ratio needs a cone-exterior point");
  double mx = 0.0;
  SpacetimePoint q = p;
  for (size_t i = 0; i < p.t.size(); ++i) {
    q.t[i] = p.t[i] + fd_step;
    double hi = logz(q);
    q.t[i] = p.t[i] - fd_step;
    double lo = logz(q);
    q.t[i] = p.t[i];
    mx = std::max(mx, std::abs(hi - lo) / (2 * fd_step));
  }
  for (size_t i = 0; i < p.x.size(); ++i) {
    q.x[i] = p.x[i] + fd_step;
    double hi = logz(q);
    q.x[i] = p.x[i] - fd_step;
    double lo = logz(q);
    q.x[i] = p.x[i];
    mx = std::max(mx, std::abs(hi - lo) / (2 * fd_step));
  }
  return mx * f0 / (prm.a * prm.R);
}

Monotonicity weight_time_monotonicity(double t_small, double t_large, double t2,
                                      const std::vector<double>& x, const CarlemanParams& prm) {
  auto eval = [&](double t1) {
    SpacetimePoint p;
    p.t = {t1, t2};
    p.x = x;
    NullFrame fr = null_frame(p);
    if (!(prm.epsilon * fr.r < 1.0))
      throw DomainError("monotonicity comparison requires eps*r < 1");
    if (!(fr.f > 0)) throw DomainError("monotonicity comparison point outside the cone exterior");
    double xi = (1.0 + prm.epsilon * fr.u) * (1.0 - prm.epsilon * fr.v);
    double fxi = fr.f / xi;
    double log_zf = log_carleman_weight(fr.f, xi, prm.a, prm.b) + std::log(fr.f);
    return std::pair<double, double>{fxi, log_zf};
  };
  auto [fxi_s, zf_s] = eval(t_small);
  auto [fxi_l, zf_l] = eval(t_large);
  double tol = 1e-13 * std::max({1.0, std::abs(fxi_s), std::abs(fxi_l)});
  if (std::abs(t_small * t_small - t_large * t_large) <
      1e-14 * std::max(1.0, t_large * t_large))
    return Monotonicity::equal;
  if (std::abs(fxi_s - fxi_l) <= tol) return Monotonicity::equal;
  if (fxi_s > fxi_l && zf_s > zf_l) return Monotonicity::strict;
  return Monotonicity::violated;
}

}  // namespace conewave::geom
