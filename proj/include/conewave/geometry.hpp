#pragma once
// Null-cone geometry for m time dimensions and n space dimensions:
// polar/null coordinates, the eps-warped metric, the conformal compression
// map, and the Carleman weight built from them.
//
// Conventions (fixed throughout):
//   tau = |t|, r = |x|, u = (tau - r)/2, v = (tau + r)/2, f = -u*v.
//   The cone-exterior region is {f > 0}; there 0 < -u < r, 0 < v < r, f < r^2.
//   Warped radius rho = r + 2*eps*f; compression factor
//   xi = (1 + eps*u)(1 - eps*v) = 1 - eps*r + eps^2*f.

#include <functional>
#include <string>
#include <vector>

#include "conewave/util.hpp"

namespace conewave::geom {

struct Dimensions {
  int m = 2;  // time dimensions
  int n = 1;  // space dimensions
};
void validate_dims(const Dimensions& d);  // 1 <= m,n <= 3

struct SpacetimePoint {
  std::vector<double> t;
  std::vector<double> x;
};

struct NullFrame {
  double tau = 0, r = 0, u = 0, v = 0, f = 0;
  std::vector<double> omega_t;  // t/tau, empty when tau == 0
  std::vector<double> omega_x;  // x/r,   empty when r == 0
  bool in_exterior() const { return f > 0.0; }
};

NullFrame null_frame(const SpacetimePoint& p);
SpacetimePoint point_from_polar(double tau, double r, const std::vector<double>& omega_t,
                                const std::vector<double>& omega_x);

// Unit-sphere charts used for finite differencing in angular directions.
// d = 2: {theta} -> (cos, sin); d = 3: {theta, phi} -> polar/azimuth.
std::vector<double> unit_from_angles(int d, const std::vector<double>& ang);
std::vector<double> angles_from_unit(const std::vector<double>& w);

struct WarpedScalars {
  double rho = 0;    // r + 2*eps*f
  double xi = 0;     // (1+eps*u)(1-eps*v)
  double h_bar = 0;  // 1/2 + eps*f/(2*rho)
  double w_bar = 0;  // (n+m-2)/4 + (n-2)*eps*f/(2*rho)
};
WarpedScalars warped_scalars(const NullFrame& fr, double eps, const Dimensions& dims);

// Scale factors of the nonzero Christoffel symbols of the warped metric in
// the (u, v, omega_x, omega_t) chart.  Each field multiplies the indicated
// structure: *_ab the spatial-angular metric block, *_CD the temporal-angular
// block, a_ub / C_uD the corresponding Kronecker delta.
struct WarpedChristoffels {
  double u_ab, v_ab, a_ub, a_vb;
  double u_CD, v_CD, C_uD, C_vD;
};

struct WarpedFrameFields {
  // Unit timelike / spacelike combinations of the null pair:
  //   T = (-u d_u + v d_v) / (2 sqrt f),  N = (u d_u + v d_v) / (2 sqrt f).
  double T_u, T_v, N_u, N_v;
  WarpedChristoffels gamma;
  // Components of pi = Hess(f) - h_bar * gbar (the deformation tensor of the
  // warped gradient flow); pi_ab and pi_CD are metric-block scale factors.
  double pi_TT, pi_NN, pi_ab, pi_CD;
};
WarpedFrameFields warped_frame_fields(const NullFrame& fr, double eps, const Dimensions& dims);

struct CarlemanParams {
  double a = 0;        // large exponent parameter
  double b = 0;        // exponential strength
  double epsilon = 0;  // warping strength
  double R = 0;        // radius scale of the region under study
  Dimensions dims;

  // delta-recipe: eps = delta^2/R, b = delta/R, a = max((m+n)^2, ceil(a_slope*R))
  // unless a_override > 0.  Throws DomainError when the separation conditions
  // a >= (m+n)^2, kappa1*eps <= b, kappa2*b*R <= 1 fail.
  static CarlemanParams from_delta(const Dimensions& dims, double R, double delta,
                                   double a_override = -1.0, double a_slope = 20.0,
                                   double kappa1 = 10.0, double kappa2 = 10.0);
  void validate(double kappa1 = 10.0, double kappa2 = 10.0) const;
};

// log of the weight for f > 0, xi > 0:  2a * ( log(f/xi) + 2b*sqrt(f/xi) ).
double log_carleman_weight(double f, double xi, double a, double b);

// Weight with pole shifted to `center`; extends continuously by 0 where the
// shifted f is <= 0.  Throws DomainError if xi <= 0 at the point.
double carleman_weight(const SpacetimePoint& p, const SpacetimePoint& center,
                       const CarlemanParams& prm);

// ---- verification sweeps -------------------------------------------------

struct IdentityEntry {
  std::string id;
  double analytic = 0, numeric = 0, residual = 0;
};

struct IdentityResiduals {
  std::vector<IdentityEntry> entries;
  bool bounds_ok = false;         // 0 < -u < r, 0 < v < r, 0 < f < r^2
  bool root_f_below_rho = false;  // sqrt(f) < rho
  double max_residual() const;
  const IdentityEntry* find(const std::string& id) const;
};

// Checks the gradient / Hessian / wave-operator identities of the warped
// metric at p: derivatives of the radial scalars by centered differences in
// the (u,v) chart, Christoffels analytic.  Requires p in the cone exterior
// with tau, r > 2*fd_step.
IdentityResiduals warped_identity_residuals(const SpacetimePoint& p, double eps,
                                            double fd_step, const Dimensions& dims);

// Compression map (u,v) -> (u/(1+eps u), v/(1-eps v)) at fixed angles.
// Requires f > 0, r < R and nondegenerate denominators.
SpacetimePoint conformal_map(const SpacetimePoint& p, double eps, double R);

struct ConformalResiduals {
  double metric_pullback = 0;  // max-entry residual of (pullback metric) - xi^{-2} * flat
  double wave_law = 0;         // conformal wave-operator law residual
  double transform_rel = 0;    // relative residual of tau, f, rho transform rules
};

// Verifies the conformal relations at p for a smooth test function zbar
// defined near the image point.  Both wave operators are evaluated in
// polar/null charts so the eps = 0 case degenerates to an exact identity.
ConformalResiduals conformal_residuals(const SpacetimePoint& p, double eps, double R,
                                       const std::function<double(const SpacetimePoint&)>& zbar,
                                       double fd_step, const Dimensions& dims);

// max_alpha |d_alpha log zeta| * f / (a R) over Cartesian directions, via
// centered differences of log zeta (equals |grad zeta| f / (a R zeta)).
// Throws DomainError if the stencil leaves the cone exterior.
double weight_gradient_ratio(const SpacetimePoint& p, const SpacetimePoint& center,
                             const CarlemanParams& prm, double fd_step);

enum class Monotonicity { strict, equal, violated };

// Two time dimensions: compares f/xi and zeta*f at t=(t_small,t2,x) versus
// t=(t_large,t2,x).  Requires eps*r < 1 and both points in the cone exterior.
// |t_small| < |t_large| should give strictly larger values at t_small.
Monotonicity weight_time_monotonicity(double t_small, double t_large, double t2,
                                      const std::vector<double>& x, const CarlemanParams& prm);

}  // namespace conewave::geom
