#ifndef ERN_GRID_HPP
#define ERN_GRID_HPP

/* Null grid and cached background geometry.
 *
 * uhat runs over [0, uhat_max] in nu equal cells (uhat_max defaults to
 * uhat_H = Lambda - M so the horizon is the exact grid line i = nu).
 * v runs over [0, v_max] in nv cells, uniform or geometrically stretched.
 * r(uhat, v) and the conformal factor A = D(r)/w(uhat) are integrated per
 * uhat-line by classical RK4 on (dr/dv, dlnA/dv) = (D(r), D'(r)).
 */

#include <vector>

#include <Eigen/Dense>

#include "ern/background.hpp"

namespace ern {

struct GridSpec {
  int nu = 396;          // uhat cells
  int nv = 800;          // v cells
  double dv0 = 0.25;     // first v step
  double stretch = 1.0;  // geometric ratio of consecutive v steps (<= 1.05)
  double uhat_max = -1;  // < 0 means "up to the horizon line uhat_H"

  double duhat(const BackgroundParams& par) const {
    return span(par) / nu;
  }
  double span(const BackgroundParams& par) const {
    return uhat_max < 0 ? par.uhat_H() : uhat_max;
  }
  bool reaches_horizon(const BackgroundParams& par) const {
    return uhat_max < 0 || uhat_max == par.uhat_H();
  }
  std::vector<double> v_nodes() const;
  void validate() const;
};

struct GeometryCache {
  double duhat = 0;
  bool horizon = false;           // last uhat line is the horizon
  std::vector<double> uhat;       // nu+1 nodes
  std::vector<double> v;          // nv+1 nodes
  Eigen::VectorXd w;              // w(uhat_i) = D(Lambda - uhat_i)
  Eigen::MatrixXd r, A;           // (nu+1) x (nv+1)

  static GeometryCache build(const BackgroundParams& par, const GridSpec& grid);
};

} // namespace ern

#endif
