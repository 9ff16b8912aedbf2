#ifndef ERN_SPHERE_HPP
#define ERN_SPHERE_HPP

/* Band-limited real spherical harmonics on the symmetry spheres.
 *
 * Coefficient layout: index (l,m) -> l*l + l + m, 0 <= l <= L, -l <= m <= l.
 * Real basis: Y_{l0} = Pbar_{l0}; Y_{lm} = sqrt(2) Pbar_{lm} cos(m phi) and
 * Y_{l,-m} = sqrt(2) Pbar_{lm} sin(m phi) for m > 0, with Pbar the fully
 * normalized associated Legendre functions.  Quadrature is Gauss-Legendre in
 * cos(theta) times a uniform trapezoid in phi.
 *
 * The rotation fields Gamma_1,2,3 act spectrally (exact within each degree l)
 * and satisfy [Gamma_i, Gamma_j] = eps_ijk Gamma_k and
 * sum_i Gamma_i^2 = unit-sphere Laplacian.
 */

#include <Eigen/Dense>

namespace ern {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int L) { return (L + 1) * (L + 1); }

struct SphereGrid {
  int L = 0;     // band limit of the coefficient space served by this grid
  int nth = 1;   // Gauss-Legendre colatitude nodes
  int nph = 1;   // uniform longitude nodes
  Eigen::VectorXd x, wx;  // cos(theta) nodes and weights
  Eigen::VectorXd phi;    // longitudes
  Mat B;                  // npts x ncoef synthesis matrix
  Mat Bw;                 // ncoef x npts analysis matrix (B^T * quadrature weights)
  int npts() const { return nth * nph; }
  int ncoef() const { return sh_count(L); }
};

SphereGrid make_sphere_grid(int L, int nth, int nph);

// Minimal exact grid for band L (analysis o synthesis = identity).
const SphereGrid& unit_grid(int L);
// Padded grid exact for integrands of degree <= 3L (dealiased quadratics).
const SphereGrid& padded_grid(int L);

Vec synthesize(const SphereGrid& g, const Vec& coef);
Vec analyze(const SphereGrid& g, const Vec& vals);

// Coefficient-space operators; band limit inferred from the vector size.
Vec laplacian_unit(const Vec& coef);                // scales (l,m) by -l(l+1)
Vec rotation_derivative(int i, const Vec& coef);    // i in {1,2,3}

// Pointwise product of two band-L fields, analyzed on the padded grid and
// truncated back to band L.
Vec product_dealiased(const Vec& f, const Vec& g, int L);

struct SupBound {
  double grid_max;  // collocation max of |f|
  double majorant;  // (sum_{|k|<=2} int |Gamma^k f|^2 dom)^(1/2)
};
SupBound sup_bound(const Vec& coef, int L);

} // namespace ern

#endif
