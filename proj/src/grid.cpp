#include "ern/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace ern {

std::vector<double> GridSpec::v_nodes() const {
  std::vector<double> v(nv + 1);
  v[0] = 0;
  double h = dv0;
  for (int j = 1; j <= nv; ++j) {
    v[j] = v[j - 1] + h;
    h *= stretch;
  }
  return v;
}

void GridSpec::validate() const {
  if (nu < 2 || nv < 2) throw std::invalid_argument("grid: need at least 2 cells per direction");
  if (!(dv0 > 0)) throw std::invalid_argument("grid: dv0 must be positive");
  if (!(stretch >= 1.0 && stretch <= 1.05))
    throw std::invalid_argument("grid: stretch must lie in [1, 1.05]");
}

GeometryCache GeometryCache::build(const BackgroundParams& par, const GridSpec& grid) {
  grid.validate();
  GeometryCache g;
  int nu = grid.nu, nv = grid.nv;
  g.duhat = grid.duhat(par);
  g.horizon = grid.reaches_horizon(par);
  g.uhat.resize(nu + 1);
  for (int i = 0; i <= nu; ++i) g.uhat[i] = i * g.duhat;
  if (g.horizon) g.uhat[nu] = par.uhat_H(); // exact, no accumulation error
  g.v = grid.v_nodes();
  g.w.resize(nu + 1);
  for (int i = 0; i <= nu; ++i) g.w[i] = metric_coefficient(par.Lambda - g.uhat[i], par.M);
  if (g.horizon) g.w[nu] = 0.0;

  g.r.resize(nu + 1, nv + 1);
  g.A.resize(nu + 1, nv + 1);
  const double M = par.M;
  for (int i = 0; i <= nu; ++i) {
    if (g.horizon && i == nu) {
      g.r.row(i).setConstant(M); // D(M) = 0 fixed point, pinned exactly
      g.A.row(i).setOnes();
      continue;
    }
    double r = par.Lambda - g.uhat[i];
    double lnA = 0;
    g.r(i, 0) = r;
    g.A(i, 0) = 1.0;
    for (int j = 1; j <= nv; ++j) {
      double h = g.v[j] - g.v[j - 1];
      // RK4 on (r, lnA)' = (D(r), D'(r)); the lnA equation rides along on
      // the same substage radii.
      double k1r = metric_coefficient(r, M), k1a = metric_coefficient_deriv(r, M);
      double r2 = r + 0.5 * h * k1r;
      double k2r = metric_coefficient(r2, M), k2a = metric_coefficient_deriv(r2, M);
      double r3 = r + 0.5 * h * k2r;
      double k3r = metric_coefficient(r3, M), k3a = metric_coefficient_deriv(r3, M);
      double r4 = r + h * k3r;
      double k4r = metric_coefficient(r4, M), k4a = metric_coefficient_deriv(r4, M);
      r += h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
      lnA += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
      g.r(i, j) = r;
      g.A(i, j) = std::exp(lnA);
    }
  }
  return g;
}

} // namespace ern
