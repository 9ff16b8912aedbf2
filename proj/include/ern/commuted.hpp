#ifndef ERN_COMMUTED_HPP
#define ERN_COMMUTED_HPP

/* Commuted fields psi^k = T^t Gamma_{g1}...Gamma_{gk} psi for t + k <= K_max.
 *
 * Gamma acts spectrally (exact); T = (w d_uhat + d_v)/2 by second-order
 * stencils (centered inside, one-sided at edges).  T commutes with the
 * rotations, so tuples are canonicalized T-first.
 */

#include <string>
#include <vector>

#include "ern/evolution.hpp"

namespace ern {

// Derivative weights of the quadratic through (x0,f0),(x1,f1),(x2,f2) at x.
inline void deriv3_weights(double x0, double x1, double x2, double x, double& c0,
                           double& c1, double& c2) {
  c0 = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
  c1 = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
  c2 = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
}

struct CommutTuple {
  int t = 0;                // T applications (outermost)
  std::vector<int> gammas;  // rotation string, applied right-to-left
  int order() const { return t + int(gammas.size()); }
  std::string name() const;
};

std::vector<CommutTuple> commuted_tuples(int kmax);

// One application of the commutation operators to a stack of coefficient
// slices (also used to commute the source field).
std::vector<Mat> commute_T(const std::vector<Mat>& in, const GeometryCache& geo);
std::vector<Mat> commute_gamma(const std::vector<Mat>& in, int g, int L, int ncomp);

class CommutedCache {
 public:
  CommutedCache(const Trajectory& tr, int kmax);
  int kmax() const { return kmax_; }
  const Trajectory& trajectory() const { return tr_; }
  const std::vector<CommutTuple>& tuples() const { return tuples_; }
  const std::vector<Mat>& slices(int idx) const {
    return tuples_[idx].order() == 0 ? tr_.psi : fields_[idx];
  }

 private:
  const Trajectory& tr_;
  int kmax_;
  std::vector<CommutTuple> tuples_;
  std::vector<std::vector<Mat>> fields_;
};

// d/duhat of a slice field at (i, j): second-order stencil.
double duhat_deriv(const std::vector<Mat>& f, const GeometryCache& geo, int i, int j,
                   int colidx);
// d/dv of a slice field at (i, j).
double dv_deriv(const std::vector<Mat>& f, const GeometryCache& geo, int i, int j,
                int colidx);

} // namespace ern

#endif
