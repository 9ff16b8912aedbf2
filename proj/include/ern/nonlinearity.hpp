#ifndef ERN_NONLINEARITY_HPP
#define ERN_NONLINEARITY_HPP

/* Term algebra for the right-hand side N(x, phi, dphi).
 *
 * Near the horizon and near infinity only the two null-form shapes are
 * admitted:
 *   NullUV:      f(r,phi) D^{-1} du(phi_a) dv(phi_b)
 *   NullAngular: f(r,phi) r^{-2} Gamma_i(phi_a) Gamma_j(phi_b)
 * In the window r0 <= r <= r1 any quadratic MidGeneric f X1(phi_a) X2(phi_b)
 * with X in {du, dv, Gamma_i} is allowed.  AretakisPoly is the focusing
 * horizon term chi(r) (phi^{2n} + (Y phi)^{2n}).
 *
 * Everything is evaluated in horizon-regular form: the equation carries D*N,
 * and the solver's source is S = D*N / w(uhat).  For NullUV the D^{-1} and
 * the w cancel analytically (du = w duhat), so no degenerate division ever
 * happens.
 */

#include <string>
#include <vector>

#include "ern/background.hpp"
#include "ern/sphere.hpp"

namespace ern {

struct SmoothCoefficient {
  enum class Base { One, InvR, InvR2, InvD };
  enum class PhiDep { None, Cos, Rational }; // cos(phi_c) or 1/(1+phi_c^2)
  Base base = Base::One;
  PhiDep phi_dep = PhiDep::None;
  int phi_comp = 0;
  double c = 1.0;
  double bound = 1.0; // declared bound (hypothesis, audited by sampling)
  double eval(double r, double phi_value, const BackgroundParams& par) const;
};

struct CutoffProfile {
  // Piecewise-polynomial bump of class C^s: 0 outside [lo,hi], 1 on
  // [plateau_lo, plateau_hi], smoothstep ramps between.
  double lo = 0, plateau_lo = 0, plateau_hi = 0, hi = 0;
  int s = 4;
  double eval(double r) const;
};

enum class TermKind { NullUV, NullAngular, MidGeneric, AretakisPoly };
enum class Direction { U, V, G1, G2, G3 };

struct NonlinearityTerm {
  TermKind kind = TermKind::NullUV;
  SmoothCoefficient f;
  int target = 0;          // which component of N this term feeds
  int alpha = 0, beta = 0; // factor components
  int gi = 1, gj = 1;      // rotation indices for NullAngular
  Direction x1 = Direction::U, x2 = Direction::V; // MidGeneric slots
  double win_lo = 0, win_hi = 0; // active radius window [lo, hi)
  int n = 1;               // AretakisPoly exponent (phi^{2n})
  CutoffProfile chi;       // AretakisPoly cutoff
};

struct NonlinearitySpec {
  int ncomp = 1;
  std::vector<NonlinearityTerm> terms;
  bool empty() const { return terms.empty(); }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
  std::vector<std::string> flags; // e.g. AretakisPoly "non-null-condition"
};
ValidationReport validate(const NonlinearitySpec& spec, const BackgroundParams& par);

// Collocation-point state on one sphere: matrices are npts x ncomp.
struct PointState {
  double r = 0, A = 1, w = 0;
  const Mat* phi = nullptr;
  const Mat* duhat_phi = nullptr; // d/duhat derivative (regular chart)
  const Mat* dv_phi = nullptr;
  const Mat* gamma_phi[3] = {nullptr, nullptr, nullptr};
};

enum class SourceChart { DoubleNull, RegularizedNull };

// RegularizedNull: out += S with S = D*N/w (the solver's regular source).
// DoubleNull: out += D*N = w*S.
void accumulate_source(const NonlinearitySpec& spec, const PointState& st,
                       SourceChart chart, const BackgroundParams& par, Mat& out);

// Structural classes of the nonlinear bulk decomposition used by diagnostics.
enum class StructClass { Star, ClassI, ClassII, ClassIII, ClassIV, ClassV, NonNull };
std::vector<std::vector<StructClass>> classify_for_diagnostics(const NonlinearitySpec& spec);
std::string struct_class_name(StructClass c);

// Sampling audit of the declared coefficient bounds (10^3 random points).
std::vector<std::string> audit_coefficient_bounds(const NonlinearitySpec& spec,
                                                  const BackgroundParams& par,
                                                  std::uint64_t seed);

// Ready-made specs.
NonlinearitySpec wave_map_spec(const BackgroundParams& par, double coupling = 1.0);
NonlinearitySpec aretakis_spec(const BackgroundParams& par, int n, double chi_width);

} // namespace ern

#endif
