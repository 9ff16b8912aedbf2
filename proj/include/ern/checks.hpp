#ifndef ERN_CHECKS_HPP
#define ERN_CHECKS_HPP

/* Numerical checkers for the a-priori estimates: boundary pieces I-VI on the
 * two-rectangle region of the energy-estimate figure, the T-energy /
 * Morawetz / trapping-removal / (r-M)^{-p} / r^p inequalities with fitted
 * constants, the exact multiplier identity, and randomized Hardy and
 * interpolation suites on synthetic fields.
 */

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ern/energies.hpp"
#include "ern/rng.hpp"

namespace ern {

struct CheckResult {
  std::string name;
  double lhs = 0, rhs = 0;
  double constant = 0;    // fitted C = lhs / rhs (0 when lhs = 0)
  bool violation = false; // lhs > 0 with rhs = 0, or non-finite values
  std::string notes;
};

// Index-snapped region R = [i1,i2]x[j1,j2p] u [i1,i2p]x[j1,j2] (uhat x v).
// Boundary pieces: I  (j=j1,  i in [i1,i2p]),  II (i=i1, j in [j1,j2p]),
//                  III(j=j2p, i in [i1,i2]),   IV (i=i2, j in [j2,j2p]),
//                  V  (j=j2,  i in [i2,i2p]),  VI (i=i2p, j in [j1,j2]).
struct ButterflyIdx {
  int i1 = 0, i2 = 0, i2p = 0;
  int j1 = 0, j2 = 0, j2p = 0;
};

// Snap tau1 <= tau2 cones and the truncation lines to the grid; uhat2p < 0
// selects the last uhat line (the horizon on horizon-reaching grids) and
// v2p < 0 the last committed row.
ButterflyIdx make_butterfly(const Trajectory& tr, double tau1, double tau2,
                            double uhat2p = -1, double v2p = -1);

// Nonlinear error integrals over R (all zero for linear runs); pointwise
// absolute products via collocation quadrature, subsampled by `stride`.
struct ErrorIntegrals {
  double e_T = 0, e_Z = 0, e_trap = 0;
  double e_near = 0; // feeds the (r-M)^{-p} checker (needs p)
  double e_far = 0;  // feeds the r^p checker
};
ErrorIntegrals error_integrals(const CommutedCache& cache, int k, double p,
                               const ButterflyIdx& b, int stride = 2);

// Bulk magnitude of each structural class of the source over R (base field).
std::vector<std::pair<std::string, double>> source_class_magnitudes(
    const Trajectory& tr, const ButterflyIdx& b, int stride = 2);

CheckResult check_t_energy(const CommutedCache& cache, int k, const ButterflyIdx& b);
CheckResult check_morawetz(const CommutedCache& cache, int k, const ButterflyIdx& b);
CheckResult check_trap_removal(const CommutedCache& cache, int k, const ButterflyIdx& b);
CheckResult check_r_minus_p(const CommutedCache& cache, const EnergyConfig& cfg,
                            const ButterflyIdx& b);
CheckResult check_r_p(const CommutedCache& cache, const EnergyConfig& cfg,
                      const ButterflyIdx& b);

// Discrete residual of the exact multiplier identity for X in {T, R} on the
// rectangle [i1,i2]x[j1,j2]; lhs = |residual|, rhs = magnitude scale.
CheckResult check_multiplier_identity(const Trajectory& tr, FieldName X, int i1, int i2,
                                      int j1, int j2);

// Smooth random psi field (sums of separable Gaussians on low-l modes) on a
// non-horizon grid; geometry is genuine, the field solves no equation.
Trajectory synthetic_trajectory(const BackgroundParams& par, const GridSpec& grid,
                                int L, int ncomp, uint64_t seed, int npulses = 4);

// Hardy inequality suites on the cone row j (near) / uhat line i (far) inside
// R; the applicable subset depends on p (cone forms need p < 1, bulk p < 2).
std::vector<CheckResult> check_hardy_near(const CommutedCache& cache, double p, int j,
                                          const ButterflyIdx& b);
std::vector<CheckResult> check_hardy_far(const CommutedCache& cache, double p, int i,
                                         const ButterflyIdx& b);

// Hoelder interpolation: int w^p dmu <= (int w^p1)^theta (int w^p2)^(1-theta)
// with p = theta p1 + (1-theta) p2.
CheckResult check_interpolation(const std::vector<double>& w,
                                const std::vector<double>& mu, double p1, double p2,
                                double theta);

} // namespace ern

#endif
