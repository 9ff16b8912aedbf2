#ifndef ERN_BACKGROUND_HPP
#define ERN_BACKGROUND_HPP

/* Closed-form extremal Reissner-Nordstrom exterior background.
 *
 * The metric is g = -D du dv ... in double-null form with D(r) = (1 - M/r)^2.
 * The horizon r = M sits at u = +infinity; the regularized coordinate
 * uhat maps it to the finite grid line uhat_H = Lambda - M, with
 * r(uhat, 0) = Lambda - uhat along the initial ingoing cone and
 * w(uhat) = D(Lambda - uhat) the (degenerate) chart speed.
 */

#include <cmath>
#include <stdexcept>

namespace ern {

struct BackgroundParams {
  double M = 1.0;        // black-hole mass, r = M is the horizon
  double Lambda = 100.0; // anchor radius of the tau-cylinder Gamma
  double delta = 0.005;  // hierarchy parameter, 0 < delta < 1/100
  double r0 = 1.8;       // inner edge of the generic-quadratic window
  double r1 = 2.5;       // outer edge of the generic-quadratic window

  double r_m1() const { return M + 0.5 * (r0 - M); }
  double r_m2() const { return M + 0.25 * (r0 - M); }
  double uhat_H() const { return Lambda - M; }

  void validate() const; // throws std::invalid_argument on violation
};

template <class Real>
Real metric_coefficient(Real r, Real M) {
  Real x = Real(1) - M / r;
  return x * x;
}

template <class Real>
Real metric_coefficient_deriv(Real r, Real M) {
  return Real(2) * M * (r - M) / (r * r * r);
}

// potential(r) -> (D, D'); domain error for r < M.
struct Potential {
  double D;
  double Dp;
};
Potential potential(double r, const BackgroundParams& par);

// Tortoise coordinate, normalized so r_*(2M) = 0.  Domain r > M.
template <class Real>
Real tortoise(Real r, Real M) {
  return r - M - M * M / (r - M) + Real(2) * M * std::log((r - M) / M);
}
double tortoise_checked(double r, const BackgroundParams& par);

// Inverse of the tortoise coordinate: safeguarded Newton with bisection
// fallback on [M(1+1e-14), hi].  Residual <= 1e-12 * max(1, |rstar|).
double radius_from_tortoise(double rstar, const BackgroundParams& par);

// c = r_*(Lambda), so that r(0,0) = Lambda in double-null coordinates.
double rstar_offset(const BackgroundParams& par);

// r(u,v) solving r_*(r) = v - u + c.
double radius_from_double_null(double u, double v, const BackgroundParams& par);

// Regularized chart maps along v = 0:  u(uhat) = r_*(Lambda) - r_*(Lambda-uhat).
double u_of_uhat(double uhat, const BackgroundParams& par);
double uhat_of_u(double u, const BackgroundParams& par);

// Chart speed w(uhat) = D(Lambda - uhat); w(uhat_H) = 0.
double regular_speed(double uhat, const BackgroundParams& par);

// tau-foliation: tau = 1 + 2 sqrt(D(Lambda)) * min(u,v); constant in u
// inside r < Lambda and constant in v outside.
double tau_of_uv(double u, double v, const BackgroundParams& par);
// The cylinder Gamma = {r = Lambda} is the line u = v; the cone vertex of
// tau is at u = v = gamma_coordinate(tau).
double gamma_coordinate(double tau, const BackgroundParams& par);

// Region classification (function of r alone, closed boundary convention).
struct RegionTag {
  bool near_a;        // r <= r_m1   (region A)
  bool near_a_prime;  // r <= r_m2   (region A')
  bool below_lambda;  // r <= Lambda
  bool above_lambda;  // r >= Lambda (both true exactly on r = Lambda)
};
RegionTag classify_region(double r, const BackgroundParams& par);
bool in_band(double r, double rho1, double rho2); // closed band [rho1, rho2]

// Vector-field coefficients on the chart basis.
// DoubleNull: coefficients on (d/du, d/dv).  RegularizedNull: on (d/duhat, d/dv).
enum class Chart { DoubleNull, RegularizedNull };
enum class FieldName { T, Y, R };
struct VectorCoeffs {
  double c1; // coefficient of d/du (or d/duhat)
  double c2; // coefficient of d/dv
};
// r and A describe the evaluation point; A is only used in the regularized
// chart (A = D/w, with A = 1 on the horizon).  uhat is needed for w.
VectorCoeffs vector_field_coefficients(FieldName name, Chart chart, double r,
                                       double uhat, double A,
                                       const BackgroundParams& par);

} // namespace ern

#endif
