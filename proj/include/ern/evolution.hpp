#ifndef ERN_EVOLUTION_HPP
#define ERN_EVOLUTION_HPP

/* Characteristic marching of psi = r*phi on the regularized null grid.
 *
 * The evolved equation is (2.10) recast in (uhat, v):
 *   d_uhat d_v psi = A ( -D'(r) phi + r^{-2} lap_unit psi ) - r S,
 * with S = D*N/w the regular source.  Each diamond is advanced by the null
 * parallelogram rule with center values from a predictor (corner averages)
 * plus one corrector pass; locally O(h^2).
 */

#include <string>
#include <vector>

#include "ern/grid.hpp"
#include "ern/nonlinearity.hpp"
#include "ern/sphere.hpp"

namespace ern {

struct InitialPulse {
  enum class Leg { Outgoing, Ingoing };
  enum class Shape { Gaussian, Bump, Ramp };
  Leg leg = Leg::Outgoing;
  Shape shape = Shape::Gaussian;
  double amplitude = 1.0;
  double center = 15.0; // v on the outgoing leg, r - M offset on the ingoing
  double width = 3.0;
  int l = 0, m = 0;
  int comp = 0;
};

struct InitialData {
  int L = 0, ncomp = 1;
  Mat outgoing; // (nv+1) x ncol, psi(0, v_j)
  Mat ingoing;  // (nu+1) x ncol, psi(uhat_i, 0)
};

InitialData build_initial_data(const std::vector<InitialPulse>& pulses,
                               const BackgroundParams& par, const GeometryCache& geo,
                               int L, int ncomp);

struct Thresholds {
  double theta1 = 1e6; // sup |psi|
  double theta2 = 1e6; // horizon sup |Y phi|
};

struct BlowupSignal {
  bool fired = false;
  int i = -1, j = -1;
  double v = 0;
  std::string what;
};

struct Trajectory {
  BackgroundParams par;
  GridSpec grid;
  NonlinearitySpec spec;
  int L = 0, ncomp = 1;
  GeometryCache geo;
  std::vector<Mat> psi; // one (nu+1) x ncol matrix per committed v-row
  BlowupSignal blowup;

  int ncoef() const { return sh_count(L); }
  int ncol() const { return ncomp * ncoef(); }
  int col(int comp, int coef) const { return comp * ncoef() + coef; }
  int rows() const { return int(psi.size()); }
  int nu() const { return grid.nu; }
};

Trajectory evolve(const InitialData& data, const NonlinearitySpec& spec,
                  const BackgroundParams& par, const GridSpec& grid,
                  const Thresholds& thr = {}, int correctors = 1);

// Standalone blowup test of one committed row (also used internally).
BlowupSignal detect_blowup(const Trajectory& tr, int j, const Thresholds& thr);

} // namespace ern

#endif
