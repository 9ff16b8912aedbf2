#include "ern/background.hpp"

#include <algorithm>
#include <string>

namespace ern {

void BackgroundParams::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("background: " + msg); };
  if (!(M > 0)) fail("M must be positive");
  if (!(Lambda >= std::max(r1, 100.0 * M))) fail("Lambda must be >= max(r1, 100 M)");
  if (!(delta > 0 && delta < 0.01)) fail("delta must lie in (0, 1/100)");
  if (!(M < r0 && r0 < 2 * M)) fail("r0 must lie in (M, 2M)");
  if (!(2 * M < r1 && r1 < Lambda)) fail("r1 must lie in (2M, Lambda)");
  // r_m1, r_m2 are derived, so M < r_m2 < r_m1 < r0 holds automatically.
}

Potential potential(double r, const BackgroundParams& par) {
  if (r < par.M) throw std::domain_error("potential: r < M (interior not modeled)");
  return {metric_coefficient(r, par.M), metric_coefficient_deriv(r, par.M)};
}

double tortoise_checked(double r, const BackgroundParams& par) {
  if (r <= par.M) throw std::domain_error("tortoise: r <= M");
  return tortoise(r, par.M);
}

double radius_from_tortoise(double rstar, const BackgroundParams& par) {
  const double M = par.M;
  double lo = M * (1.0 + 1e-14);
  double hi = std::max(par.Lambda, rstar + 10.0 * M);
  while (tortoise(hi, M) < rstar) hi *= 2.0; // ensure bracketing from above
  if (tortoise(lo, M) > rstar)
    throw std::domain_error("radius_from_tortoise: target below representable range");

  // Initial guess: r ~ rstar far out, r ~ M + M^2/(-rstar) near the horizon.
  double r = rstar > 2 * M ? rstar : M + M * M / std::max(M, -rstar);
  r = std::clamp(r, lo, hi);

  const double tol = 1e-13 * std::max(1.0, std::fabs(rstar));
  for (int it = 0; it < 200; ++it) {
    double f = tortoise(r, M) - rstar;
    if (f > 0) hi = r; else lo = r;
    if (std::fabs(f) <= tol) break;
    double D = metric_coefficient(r, M);
    double step = f * D; // Newton: dr_*/dr = 1/D
    double rn = r - step;
    if (!(rn > lo && rn < hi)) rn = 0.5 * (lo + hi); // bisection safeguard
    if (std::fabs(rn - r) < 1e-14 * M && std::fabs(f) < 1e-9) { r = rn; break; }
    r = rn;
  }
  return r;
}

double rstar_offset(const BackgroundParams& par) { return tortoise(par.Lambda, par.M); }

double radius_from_double_null(double u, double v, const BackgroundParams& par) {
  return radius_from_tortoise(v - u + rstar_offset(par), par);
}

double u_of_uhat(double uhat, const BackgroundParams& par) {
  if (!(uhat >= 0 && uhat < par.uhat_H()))
    throw std::domain_error("u_of_uhat: uhat outside [0, uhat_H)");
  return rstar_offset(par) - tortoise(par.Lambda - uhat, par.M);
}

double uhat_of_u(double u, const BackgroundParams& par) {
  return par.Lambda - radius_from_tortoise(rstar_offset(par) - u, par);
}

double regular_speed(double uhat, const BackgroundParams& par) {
  return metric_coefficient(par.Lambda - uhat, par.M);
}

double tau_of_uv(double u, double v, const BackgroundParams& par) {
  return 1.0 + 2.0 * std::sqrt(metric_coefficient(par.Lambda, par.M)) * std::min(u, v);
}

double gamma_coordinate(double tau, const BackgroundParams& par) {
  return (tau - 1.0) / (2.0 * std::sqrt(metric_coefficient(par.Lambda, par.M)));
}

RegionTag classify_region(double r, const BackgroundParams& par) {
  if (r < par.M) throw std::domain_error("classify_region: r < M");
  RegionTag t;
  t.near_a_prime = r <= par.r_m2();
  t.near_a = r <= par.r_m1();
  t.below_lambda = r <= par.Lambda;
  t.above_lambda = r >= par.Lambda;
  return t;
}

bool in_band(double r, double rho1, double rho2) { return r >= rho1 && r <= rho2; }

VectorCoeffs vector_field_coefficients(FieldName name, Chart chart, double r,
                                       double uhat, double A,
                                       const BackgroundParams& par) {
  if (chart == Chart::DoubleNull) {
    switch (name) {
      case FieldName::T: return {0.5, 0.5};
      case FieldName::R: return {-0.5, 0.5};
      case FieldName::Y: {
        double D = metric_coefficient(r, par.M);
        if (D == 0.0)
          throw std::domain_error("vector_field_coefficients: Y degenerate at r = M in double-null chart");
        return {-1.0 / D, 0.0};
      }
    }
  } else {
    double w = regular_speed(uhat, par);
    switch (name) {
      case FieldName::T: return {0.5 * w, 0.5};
      case FieldName::R: return {-0.5 * w, 0.5};
      case FieldName::Y: return {-1.0 / A, 0.0};
    }
  }
  throw std::logic_error("vector_field_coefficients: unreachable");
}

} // namespace ern
