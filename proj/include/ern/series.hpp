#ifndef ERN_SERIES_HPP
#define ERN_SERIES_HPP

/* Time-series extraction: horizon monitors (Aretakis charge and friends),
 * weighted sup norms along ingoing cones, pointwise decay series, and the
 * log-log rate fit used by all decay studies.
 */

#include <string>
#include <vector>

#include "ern/evolution.hpp"

namespace ern {

struct Series {
  std::string name;
  std::vector<double> x, y;
  size_t size() const { return x.size(); }
};

// Fields sampled on the horizon line (requires a horizon-reaching grid).
// Y = -(1/A) d_uhat; transverse derivatives come from transporting
// d_uhat psi and d_uhat^2 psi along the horizon with the restricted wave
// equation (a one-sided stencil only seeds the transport at v = 0).
enum class HorizonField { Phi, YPhi, YYPhi, AretakisH, YPsi, YYPsi };
std::string horizon_field_name(HorizonField f);

// Coefficient of mode (l, m) of component `comp` on the horizon, against v.
Series horizon_series(const Trajectory& tr, HorizonField f, int l, int m, int comp = 0);

// sup over the slice Sigma_tau = Cbar(tau) u C(tau) of sup_{S^2} |phi|.
double sup_phi_on_slice(const Trajectory& tr, double tau);
Series sup_phi_series(const Trajectory& tr, const std::vector<double>& taus);

// sup over Cbar(tau) n {r <= r_m1} of (r-M)^{-q} |d_u phi| (regularized:
// (r-M)^{-q} w |d_uhat phi|); the horizon node contributes its limit.
Series weighted_sup_series(const Trajectory& tr, double q, const std::vector<double>& taus);

// Pointwise decay monitors: sup_{Cbar(tau)} |d_v phi| (near) and
// sup_{C(tau)} |r w d_uhat phi| = sup |r d_u phi| (far).
Series linfty_near_series(const Trajectory& tr, const std::vector<double>& taus);
Series linfty_far_series(const Trajectory& tr, const std::vector<double>& taus);

// T(x_i) = int_{x_i}^{x_end} y(s)^power ds by the trapezoid rule.
Series tail_integral(const Series& s, int power = 2);

struct RateFit {
  double exponent = 0;  // slope of ln|y| against ln x
  double stderr_ = 0;   // standard error of the slope
  double intercept = 0;
  int n = 0;
};
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

// Predicted decay exponent of the q-weighted sup series for data of
// delta-regularity (the instability-rate prediction).
inline double predicted_sup_exponent(double q, double delta) {
  return (1 + delta) / (1 + 2 * delta) * (q - 1.5 + delta);
}

} // namespace ern

#endif
