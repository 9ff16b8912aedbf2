#include "ern/series.hpp"

#include "ern/commuted.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace ern {

std::string horizon_field_name(HorizonField f) {
  switch (f) {
    case HorizonField::Phi: return "phi_H";
    case HorizonField::YPhi: return "Yphi_H";
    case HorizonField::YYPhi: return "YYphi_H";
    case HorizonField::AretakisH: return "aretakis_H";
    case HorizonField::YPsi: return "Ypsi_H";
    case HorizonField::YYPsi: return "YYpsi_H";
  }
  return "?";
}

namespace {

// column series f(i) at row j for either psi or phi = psi / r
double node_val(const Trajectory& tr, int i, int j, int c, bool phi) {
  double v = tr.psi[j](i, c);
  return phi ? v / tr.geo.r(i, j) : v;
}

// sup over the sphere of the field whose coefficient row is `row`.
double sphere_sup(const Eigen::RowVectorXd& row, int L, int ncomp) {
  const SphereGrid& g = unit_grid(L);
  int nc = sh_count(L);
  double sup = 0;
  for (int q = 0; q < ncomp; ++q) {
    Vec vals = g.B * row.segment(q * nc, nc).transpose();
    sup = std::max(sup, vals.cwiseAbs().maxCoeff());
  }
  return sup;
}

Eigen::RowVectorXd duh_row(const Trajectory& tr, int i, int j) {
  const Mat& f = tr.psi[j];
  double h = tr.geo.duhat;
  int nu = tr.nu();
  if (i == 0) return (-3 * f.row(0) + 4 * f.row(1) - f.row(2)) / (2 * h);
  if (i == nu) return (3 * f.row(nu) - 4 * f.row(nu - 1) + f.row(nu - 2)) / (2 * h);
  return (f.row(i + 1) - f.row(i - 1)) / (2 * h);
}

Eigen::RowVectorXd dv_row(const Trajectory& tr, int i, int j) {
  int last = tr.rows() - 1;
  const GeometryCache& geo = tr.geo;
  int j0 = j == 0 ? 0 : (j == last ? last - 2 : j - 1);
  double c0, c1, c2;
  deriv3_weights(geo.v[j0], geo.v[j0 + 1], geo.v[j0 + 2], geo.v[j], c0, c1, c2);
  return c0 * tr.psi[j0].row(i) + c1 * tr.psi[j0 + 1].row(i) + c2 * tr.psi[j0 + 2].row(i);
}

Eigen::RowVectorXd duh_phi_row(const Trajectory& tr, int i, int j) {
  double r = tr.geo.r(i, j), A = tr.geo.A(i, j);
  return (duh_row(tr, i, j) + (A / r) * tr.psi[j].row(i)) / r;
}

Eigen::RowVectorXd dv_phi_row(const Trajectory& tr, int i, int j) {
  double r = tr.geo.r(i, j), A = tr.geo.A(i, j), D = A * tr.geo.w[i];
  return (dv_row(tr, i, j) - (D / r) * tr.psi[j].row(i)) / r;
}

/* Transverse derivatives on the horizon line.
 *
 * One-sided uhat stencils are consistent only while the neighbouring nodes
 * hug the horizon: along fixed uhat the offset s = r - M grows like
 * s0 / (1 - s0 v / M^2), so every interior node has escaped the near-horizon
 * layer by v ~ M^2 / duhat and the stencil error stops converging.  Instead,
 * restrict the wave equation to uhat = uhat_H.  With A = 1, r = M and
 * D'(M) = 0 the transverse derivatives obey ODEs in v closed in horizon-line
 * data:
 *   d_v (d_uhat psi)   = M^{-2} lap psi - M S,
 *   d_v (d_uhat^2 psi) = a M^{-2} lap psi + D''(M) phi + 2 M^{-3} lap psi
 *                        + M^{-2} lap (d_uhat psi) + S - M d_uhat S,
 * with a(v) = d_uhat ln A |_H = -2 v / M^2 (from d_v d_uhat ln A = -A D''(r)
 * and A = 1 on the initial slice).  The stencil only seeds the integration at
 * v = 0, where the data is smooth across the whole grid.  The d_uhat S term
 * (nonlinear runs only) is dropped, so the second-derivative monitor is
 * quantitative on linear runs and qualitative otherwise.
 */
struct HorizonTransport {
  std::vector<Eigen::RowVectorXd> eta; // d_uhat psi per committed row
  std::vector<Eigen::RowVectorXd> xi;  // d_uhat^2 psi
  std::vector<double> a;               // d_uhat ln A
};

// Coefficient row of the regular source S on the horizon sphere.
class HorizonSourceEval {
 public:
  explicit HorizonSourceEval(const Trajectory& tr)
      : tr_(tr), sg_(&padded_grid(tr.L)), nc_(tr.ncoef()) {
    for (int i = 0; i < 3; ++i) {
      G_[i].resize(nc_, nc_);
      Vec e = Vec::Zero(nc_);
      for (int c = 0; c < nc_; ++c) {
        e[c] = 1;
        G_[i].col(c) = rotation_derivative(i + 1, e);
        e[c] = 0;
      }
    }
    int np = sg_->npts();
    vphi_.resize(np, tr.ncomp);
    vduh_.resize(np, tr.ncomp);
    vdv_.resize(np, tr.ncomp);
    for (auto& m : vg_) m.resize(np, tr.ncomp);
    S_.resize(np, tr.ncomp);
  }

  Eigen::RowVectorXd eval(int j, const Eigen::RowVectorXd& eta) {
    double M = tr_.par.M;
    int nu = tr_.nu();
    Eigen::RowVectorXd phic = tr_.psi[j].row(nu) / M;
    Eigen::RowVectorXd duhphi = (eta + phic) / M;
    Eigen::RowVectorXd dvphi = dv_row(tr_, nu, j) / M;
    for (int q = 0; q < tr_.ncomp; ++q) {
      auto seg = phic.segment(q * nc_, nc_).transpose();
      vphi_.col(q) = sg_->B * seg;
      vduh_.col(q) = sg_->B * duhphi.segment(q * nc_, nc_).transpose();
      vdv_.col(q) = sg_->B * dvphi.segment(q * nc_, nc_).transpose();
      for (int i = 0; i < 3; ++i) vg_[i].col(q) = sg_->B * (G_[i] * seg);
    }
    S_.setZero();
    PointState st;
    st.r = M;
    st.A = 1;
    st.w = 0;
    st.phi = &vphi_;
    st.duhat_phi = &vduh_;
    st.dv_phi = &vdv_;
    for (int i = 0; i < 3; ++i) st.gamma_phi[i] = &vg_[i];
    accumulate_source(tr_.spec, st, SourceChart::RegularizedNull, tr_.par, S_);
    Eigen::RowVectorXd out(tr_.ncol());
    for (int q = 0; q < tr_.ncomp; ++q)
      out.segment(q * nc_, nc_) = (sg_->Bw * S_.col(q)).transpose();
    return out;
  }

 private:
  const Trajectory& tr_;
  const SphereGrid* sg_;
  int nc_;
  Mat G_[3], vphi_, vduh_, vdv_, vg_[3], S_;
};

HorizonTransport build_horizon_transport(const Trajectory& tr) {
  int nu = tr.nu();
  if (nu < 3) throw std::invalid_argument("horizon transport: grid too coarse");
  double h = tr.geo.duhat, M = tr.par.M;
  int rows = tr.rows(), ncol = tr.ncol(), nc = tr.ncoef();
  Eigen::RowVectorXd lam(ncol);
  for (int q = 0; q < tr.ncomp; ++q)
    for (int l = 0; l <= tr.L; ++l)
      for (int m = -l; m <= l; ++m)
        lam[q * nc + sh_index(l, m)] = -double(l) * (l + 1);
  HorizonTransport ht;
  ht.eta.resize(size_t(rows));
  ht.xi.resize(size_t(rows));
  ht.a.resize(size_t(rows));
  const Mat& f0 = tr.psi[0];
  ht.eta[0] = (3 * f0.row(nu) - 4 * f0.row(nu - 1) + f0.row(nu - 2)) / (2 * h);
  ht.xi[0] =
      (2 * f0.row(nu) - 5 * f0.row(nu - 1) + 4 * f0.row(nu - 2) - f0.row(nu - 3)) / (h * h);
  for (int j = 0; j < rows; ++j) ht.a[size_t(j)] = -2 * tr.geo.v[size_t(j)] / (M * M);
  bool nonlinear = !tr.spec.empty();
  std::unique_ptr<HorizonSourceEval> se;
  if (nonlinear) se = std::make_unique<HorizonSourceEval>(tr);
  double Dpp = 2 / (M * M);
  auto eta_rate = [&](int j, const Eigen::RowVectorXd& S) -> Eigen::RowVectorXd {
    return tr.psi[size_t(j)].row(nu).cwiseProduct(lam) / (M * M) - M * S;
  };
  auto xi_rate = [&](int j, const Eigen::RowVectorXd& eta,
                     const Eigen::RowVectorXd& S) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd lpsi = tr.psi[size_t(j)].row(nu).cwiseProduct(lam);
    return ht.a[size_t(j)] / (M * M) * lpsi + (Dpp / M) * tr.psi[size_t(j)].row(nu) +
           2 / (M * M * M) * lpsi + eta.cwiseProduct(lam) / (M * M) + S;
  };
  Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(ncol);
  Eigen::RowVectorXd Sj = nonlinear ? se->eval(0, ht.eta[0]) : zero;
  for (int j = 0; j + 1 < rows; ++j) {
    double dv = tr.geo.v[size_t(j) + 1] - tr.geo.v[size_t(j)];
    Eigen::RowVectorXd Gj = eta_rate(j, Sj);
    Eigen::RowVectorXd Sj1 = zero;
    if (nonlinear) Sj1 = se->eval(j + 1, ht.eta[size_t(j)] + dv * Gj); // predictor
    ht.eta[size_t(j) + 1] = ht.eta[size_t(j)] + 0.5 * dv * (Gj + eta_rate(j + 1, Sj1));
    if (nonlinear) { // one corrector pass on the source
      Sj1 = se->eval(j + 1, ht.eta[size_t(j) + 1]);
      ht.eta[size_t(j) + 1] = ht.eta[size_t(j)] + 0.5 * dv * (Gj + eta_rate(j + 1, Sj1));
    }
    ht.xi[size_t(j) + 1] =
        ht.xi[size_t(j)] + 0.5 * dv * (xi_rate(j, ht.eta[size_t(j)], Sj) +
                                       xi_rate(j + 1, ht.eta[size_t(j) + 1], Sj1));
    Sj = Sj1;
  }
  return ht;
}

int nearest_row(const std::vector<double>& v, double x, int last) {
  auto it = std::lower_bound(v.begin(), v.begin() + last + 1, x);
  int j = int(it - v.begin());
  if (j > 0 && (j > last || v[j] - x > x - v[j - 1])) --j;
  return std::min(j, last);
}

// ingoing-cone node range at tau: nearest v-row jv and first uhat index
bool cone_indices(const Trajectory& tr, double tau, int& jv, int& i0) {
  const BackgroundParams& par = tr.par;
  double v_tau = gamma_coordinate(tau, par);
  int last = tr.rows() - 1;
  if (v_tau > tr.geo.v[last]) return false;
  jv = nearest_row(tr.geo.v, v_tau, last);
  double uh = v_tau <= 0 ? 0.0 : uhat_of_u(v_tau, par);
  if (uh >= tr.geo.uhat.back()) return false;
  i0 = std::clamp(int(std::ceil(uh / tr.geo.duhat - 1e-9)), 0, tr.nu());
  return true;
}

} // namespace

Series horizon_series(const Trajectory& tr, HorizonField f, int l, int m, int comp) {
  if (!tr.geo.horizon)
    throw std::invalid_argument("horizon_series: grid does not reach the horizon");
  if (tr.rows() < 3) throw std::invalid_argument("horizon_series: too few rows");
  int nc = tr.ncoef();
  if (l > tr.L || std::abs(m) > l || comp < 0 || comp >= tr.ncomp)
    throw std::invalid_argument("horizon_series: mode outside the run's bands");
  int c = comp * nc + sh_index(l, m);
  int nu = tr.nu();
  double M = tr.par.M;
  HorizonTransport ht = build_horizon_transport(tr);
  Series s;
  s.name = horizon_field_name(f);
  for (int j = 0; j < tr.rows(); ++j) {
    double phi = node_val(tr, nu, j, c, true);
    double eta = ht.eta[size_t(j)][c], xi = ht.xi[size_t(j)][c], a = ht.a[size_t(j)];
    double g = (eta + phi) / M; // d_uhat phi on the horizon
    double y = 0;
    switch (f) {
      case HorizonField::Phi: y = phi; break;
      case HorizonField::YPhi: y = -g; break;
      // Y^2 f = d_uhat^2 f - a d_uhat f on the horizon (A = 1);
      // d_uhat^2 phi = (xi + 2 g + a phi) / r via psi = r phi, d_uhat^2 r = -a
      case HorizonField::YYPhi: y = (xi + 2 * g + a * phi) / M - a * g; break;
      case HorizonField::AretakisH: y = phi - M * g; break; // = -eta
      case HorizonField::YPsi: y = -eta; break;
      case HorizonField::YYPsi: y = xi - a * eta; break;
    }
    s.x.push_back(tr.geo.v[j]);
    s.y.push_back(y);
  }
  return s;
}

double sup_phi_on_slice(const Trajectory& tr, double tau) {
  int jv, i0;
  if (!cone_indices(tr, tau, jv, i0)) return 0;
  double sup = 0;
  for (int i = i0; i <= tr.nu(); ++i)
    sup = std::max(sup, sphere_sup(tr.psi[jv].row(i) / tr.geo.r(i, jv), tr.L, tr.ncomp));
  int iu = std::clamp(i0 - 1, 0, tr.nu()); // outgoing leg at the matching uhat line
  for (int j = jv; j < tr.rows(); ++j)
    sup = std::max(sup, sphere_sup(tr.psi[j].row(iu) / tr.geo.r(iu, j), tr.L, tr.ncomp));
  return sup;
}

Series sup_phi_series(const Trajectory& tr, const std::vector<double>& taus) {
  Series s;
  s.name = "sup_phi";
  for (double t : taus) {
    s.x.push_back(t);
    s.y.push_back(sup_phi_on_slice(tr, t));
  }
  return s;
}

Series weighted_sup_series(const Trajectory& tr, double q, const std::vector<double>& taus) {
  const BackgroundParams& par = tr.par;
  Series s;
  s.name = "weighted_sup_q";
  // the horizon node contributes its limit (r-M)^{2-q} |d_uhat phi| / (A r^2),
  // nonzero only at q = 2; use the transported derivative there
  bool horizon_node = tr.geo.horizon && q == 2.0;
  HorizonTransport ht;
  if (horizon_node) ht = build_horizon_transport(tr);
  for (double tau : taus) {
    int jv, i0;
    double sup = 0;
    if (cone_indices(tr, tau, jv, i0)) {
      for (int i = i0; i <= tr.nu(); ++i) {
        double r = tr.geo.r(i, jv);
        if (r > par.r_m1()) continue;
        if (i == tr.nu() && tr.geo.horizon) {
          if (!horizon_node) continue;
          Eigen::RowVectorXd g =
              (ht.eta[size_t(jv)] + tr.psi[size_t(jv)].row(i) / par.M) / par.M;
          sup = std::max(sup, sphere_sup(g, tr.L, tr.ncomp) / (r * r));
          continue;
        }
        double weight = std::pow(r - par.M, -q) * tr.geo.w[i];
        if (weight == 0) continue;
        sup = std::max(sup, weight * sphere_sup(duh_phi_row(tr, i, jv), tr.L, tr.ncomp));
      }
    }
    s.x.push_back(tau);
    s.y.push_back(sup);
  }
  return s;
}

Series linfty_near_series(const Trajectory& tr, const std::vector<double>& taus) {
  Series s;
  s.name = "linfty_near";
  for (double tau : taus) {
    int jv, i0;
    double sup = 0;
    if (cone_indices(tr, tau, jv, i0))
      for (int i = i0; i <= tr.nu(); ++i)
        sup = std::max(sup, sphere_sup(dv_phi_row(tr, i, jv), tr.L, tr.ncomp));
    s.x.push_back(tau);
    s.y.push_back(sup);
  }
  return s;
}

Series linfty_far_series(const Trajectory& tr, const std::vector<double>& taus) {
  Series s;
  s.name = "linfty_far";
  for (double tau : taus) {
    int jv, i0;
    double sup = 0;
    if (cone_indices(tr, tau, jv, i0)) {
      int iu = std::clamp(i0 - 1, 0, tr.nu());
      double w = tr.geo.w[iu];
      for (int j = jv; j < tr.rows(); ++j) {
        double r = tr.geo.r(iu, j);
        sup = std::max(sup, r * w * sphere_sup(duh_phi_row(tr, iu, j), tr.L, tr.ncomp));
      }
    }
    s.x.push_back(tau);
    s.y.push_back(sup);
  }
  return s;
}

Series tail_integral(const Series& s, int power) {
  Series t;
  t.name = s.name + "_tail";
  int n = int(s.size());
  t.x = s.x;
  t.y.assign(n, 0.0);
  for (int i = n - 2; i >= 0; --i) {
    double fa = std::pow(std::fabs(s.y[i]), power);
    double fb = std::pow(std::fabs(s.y[i + 1]), power);
    t.y[i] = t.y[i + 1] + 0.5 * (fa + fb) * (s.x[i + 1] - s.x[i]);
  }
  return t;
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  RateFit fit;
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0 && std::fabs(y[i]) > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(std::fabs(y[i])));
    }
  }
  int n = int(lx.size());
  fit.n = n;
  if (n < 2) return fit;
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  if (n > 2) {
    double ss = 0;
    for (int i = 0; i < n; ++i) {
      double r = ly[i] - fit.intercept - fit.exponent * lx[i];
      ss += r * r;
    }
    fit.stderr_ = std::sqrt(ss / ((n - 2) * sxx));
  }
  return fit;
}

} // namespace ern
