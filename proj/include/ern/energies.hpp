#ifndef ERN_ENERGIES_HPP
#define ERN_ENERGIES_HPP

/* The weighted flux/bulk hierarchy along the tau-foliation.
 *
 * Outgoing cones C(tau) carry measure dom dv, ingoing cones Cbar(tau) carry
 * dom du = dom duhat / w.  Every ingoing integrand is rewritten in the
 * regularized chart; terms with an integrable power divergence at the
 * horizon ( ~ (uhat_H - uhat)^{-sigma}, sigma < 1 ) integrate the last cell
 * with the exact power-law rule instead of the trapezoid.
 */

#include <string>
#include <vector>

#include "ern/commuted.hpp"

namespace ern {

struct EnergyConfig {
  double p = 0; // in {0} union [delta, 2-delta]
  int k = 0;    // commutation order
  double p_star() const { return p < 1 ? p : 0.0; }
  double c_pstar() const {
    double ps = p_star();
    return (ps - 1) * (ps - 1);
  }
  void validate(const BackgroundParams& par) const;
};

struct EnergyReport {
  std::string kind;
  double p = 0;
  int k = 0;
  double tau = 0; // cone label: tau, or v / u for the fixed-cone fluxes
  double value = 0;
  double err_est = 0;
  bool truncated = false; // the v_max boundary contributes
  bool partial = false;   // cone clipped by the computed domain
};

// Angular-integrated quadratic monitors at a grid node, summed over all
// commuted tuples of order <= k and all components (Parseval in the angle).
struct NodeData {
  double psi2 = 0, duh_psi2 = 0, dv_psi2 = 0;
  double phi2 = 0, duh_phi2 = 0, dv_phi2 = 0;
  double ang_phi2 = 0; // int |slashed-nabla phi|^2 dom = r^-2 sum l(l+1)|a|^2
  double Rphi2 = 0;
};
NodeData node_data(const CommutedCache& cache, int k, int i, int j);

struct ConeSample {
  std::vector<double> coord; // uhat (ingoing) or v (outgoing)
  std::vector<double> r, A, w;
  std::vector<NodeData> q;
  bool partial = false, truncated = false;
  bool horizon_end = false; // ingoing cone reaches the pinned horizon node
  size_t size() const { return coord.size(); }
};
ConeSample sample_ingoing_cone(const CommutedCache& cache, int k, double tau);
ConeSample sample_outgoing_cone(const CommutedCache& cache, int k, double tau);

// Trapezoid with every-other-node error estimate.
void trapezoid(const std::vector<double>& x, const std::vector<double>& f,
               double& value, double& err);
// Trapezoid whose last cell is integrated as f ~ C (x_end - x)^(-sigma).
double integrate_power_tail(const std::vector<double>& x, const std::vector<double>& f,
                            double sigma);

EnergyReport outgoing_flux(const CommutedCache& cache, const EnergyConfig& cfg, double tau);
EnergyReport ingoing_flux(const CommutedCache& cache, const EnergyConfig& cfg, double tau);
EnergyReport far_ingoing_flux(const CommutedCache& cache, const EnergyConfig& cfg,
                              double v, double tau1, double tau2);
EnergyReport near_outgoing_flux(const CommutedCache& cache, const EnergyConfig& cfg,
                                double u, double tau1, double tau2);
EnergyReport far_bulk_density(const CommutedCache& cache, const EnergyConfig& cfg, double tau);
EnergyReport near_bulk_density(const CommutedCache& cache, const EnergyConfig& cfg, double tau);
EnergyReport near_bulk_nondegenerate(const CommutedCache& cache, int k, double tau);

enum class EnergyKind {
  OutgoingFlux,
  IngoingFlux,
  FarIngoingFlux,
  NearOutgoingFlux,
  FarBulkDensity,
  NearBulkDensity,
  NearBulkNondegenerate,
};
std::string energy_kind_name(EnergyKind kind);
EnergyReport compute_energy(EnergyKind kind, const EnergyConfig& cfg,
                            const CommutedCache& cache, double tau, double tau1 = 0,
                            double tau2 = 0);

// Master energy X_{p,k}(tau1, tau2) and trapping integral Y_k(tau1, tau2).
double master_energy(const CommutedCache& cache, const EnergyConfig& cfg, double tau1,
                     double tau2, int nsamples = 25);
double trapping_integral(const CommutedCache& cache, int k, double tau1, double tau2,
                         int nsamples = 25);

// Initial-data norm at commutation depth kmax: the tau=1 fluxes at
// p = 2-delta (order kmax) and p = 1+delta (order kmax+2 capped at the cache
// depth) plus the two pointwise sup terms.
struct InitialNorm {
  double energy_part = 0; // quadratic part, already square-rooted
  double sup_part = 0;
  double value = 0; // sqrt(energy_part^2 + sup_part^2)
};
InitialNorm initial_norm(const CommutedCache& cache, int kmax);

} // namespace ern

#endif
