#include "ern/energies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ern {

void EnergyConfig::validate(const BackgroundParams& par) const {
  bool ok = p == 0.0 || (p >= par.delta && p <= 2.0 - par.delta);
  if (!ok) throw std::invalid_argument("energy: p must lie in {0} union [delta, 2-delta]");
  if (k < 0) throw std::invalid_argument("energy: k must be nonnegative");
}

NodeData node_data(const CommutedCache& cache, int k, int i, int j) {
  const Trajectory& tr = cache.trajectory();
  const GeometryCache& geo = tr.geo;
  const double r = geo.r(i, j), A = geo.A(i, j), w = geo.w[i], D = A * w;
  const double hu = geo.duhat;
  const int nc = tr.ncoef(), ncol = tr.ncol(), nu = tr.nu();
  const int last = tr.rows() - 1;
  NodeData nd;
  Eigen::RowVectorXd duh, dv, phi, duhphi, dvphi, Rphi;
  int j0 = j == 0 ? 0 : (j == last ? last - 2 : j - 1);
  double c0, c1, c2;
  deriv3_weights(geo.v[j0], geo.v[j0 + 1], geo.v[j0 + 2], geo.v[j], c0, c1, c2);
  for (size_t t = 0; t < cache.tuples().size(); ++t) {
    if (cache.tuples()[t].order() > k) continue;
    const std::vector<Mat>& f = cache.slices(t);
    Eigen::RowVectorXd psi = f[j].row(i);
    if (i == 0)
      duh = (-3 * f[j].row(0) + 4 * f[j].row(1) - f[j].row(2)) / (2 * hu);
    else if (i == nu)
      duh = (3 * f[j].row(nu) - 4 * f[j].row(nu - 1) + f[j].row(nu - 2)) / (2 * hu);
    else
      duh = (f[j].row(i + 1) - f[j].row(i - 1)) / (2 * hu);
    dv = c0 * f[j0].row(i) + c1 * f[j0 + 1].row(i) + c2 * f[j0 + 2].row(i);
    phi = psi / r;
    duhphi = (duh + A * phi) / r;
    dvphi = (dv - D * phi) / r;
    Rphi = 0.5 * (dvphi - w * duhphi);
    nd.psi2 += psi.squaredNorm();
    nd.duh_psi2 += duh.squaredNorm();
    nd.dv_psi2 += dv.squaredNorm();
    nd.phi2 += phi.squaredNorm();
    nd.duh_phi2 += duhphi.squaredNorm();
    nd.dv_phi2 += dvphi.squaredNorm();
    nd.Rphi2 += Rphi.squaredNorm();
    double ang = 0;
    for (int c = 0; c < ncol; ++c) {
      int l = int(std::floor(std::sqrt(double(c % nc) + 0.5)));
      ang += double(l) * (l + 1) * phi[c] * phi[c];
    }
    nd.ang_phi2 += ang / (r * r);
  }
  return nd;
}

namespace {

NodeData lerp(const NodeData& a, const NodeData& b, double t) {
  NodeData o;
  o.psi2 = (1 - t) * a.psi2 + t * b.psi2;
  o.duh_psi2 = (1 - t) * a.duh_psi2 + t * b.duh_psi2;
  o.dv_psi2 = (1 - t) * a.dv_psi2 + t * b.dv_psi2;
  o.phi2 = (1 - t) * a.phi2 + t * b.phi2;
  o.duh_phi2 = (1 - t) * a.duh_phi2 + t * b.duh_phi2;
  o.dv_phi2 = (1 - t) * a.dv_phi2 + t * b.dv_phi2;
  o.ang_phi2 = (1 - t) * a.ang_phi2 + t * b.ang_phi2;
  o.Rphi2 = (1 - t) * a.Rphi2 + t * b.Rphi2;
  return o;
}

int locate(const std::vector<double>& x, double v) {
  // largest j with x[j] <= v, clamped to [0, n-2]
  auto it = std::upper_bound(x.begin(), x.end(), v);
  int j = int(it - x.begin()) - 1;
  return std::clamp(j, 0, int(x.size()) - 2);
}

} // namespace

ConeSample sample_ingoing_cone(const CommutedCache& cache, int k, double tau) {
  const Trajectory& tr = cache.trajectory();
  const GeometryCache& geo = tr.geo;
  const BackgroundParams& par = tr.par;
  ConeSample cs;
  cs.horizon_end = geo.horizon;
  double v_tau = gamma_coordinate(tau, par);
  int last = tr.rows() - 1;
  if (v_tau < 0 || v_tau > geo.v[last] * (1 + 1e-12)) {
    cs.partial = true;
    return cs;
  }
  int jlo = locate(geo.v, v_tau);
  double tf = (v_tau - geo.v[jlo]) / (geo.v[jlo + 1] - geo.v[jlo]);
  double uh_start = v_tau == 0 ? 0.0 : uhat_of_u(v_tau, par);
  double span = geo.uhat.back();
  if (uh_start >= span) {
    cs.partial = true;
    return cs;
  }
  auto node = [&](int i) {
    return lerp(node_data(cache, k, i, jlo), node_data(cache, k, i, jlo + 1), tf);
  };
  auto rnode = [&](int i) { return (1 - tf) * geo.r(i, jlo) + tf * geo.r(i, jlo + 1); };
  auto Anode = [&](int i) { return (1 - tf) * geo.A(i, jlo) + tf * geo.A(i, jlo + 1); };
  int i0 = int(std::ceil(uh_start / geo.duhat - 1e-9));
  int nu = tr.nu();
  if (i0 > 0 && geo.uhat[i0] > uh_start + 1e-12 * geo.duhat) {
    // fractional first sample exactly on Gamma
    double s = (uh_start - geo.uhat[i0 - 1]) / geo.duhat;
    cs.coord.push_back(uh_start);
    cs.q.push_back(lerp(node(i0 - 1), node(i0), s));
    cs.r.push_back((1 - s) * rnode(i0 - 1) + s * rnode(i0));
    cs.A.push_back((1 - s) * Anode(i0 - 1) + s * Anode(i0));
    cs.w.push_back(metric_coefficient(par.Lambda - uh_start, par.M));
  }
  for (int i = i0; i <= nu; ++i) {
    cs.coord.push_back(geo.uhat[i]);
    cs.q.push_back(node(i));
    cs.r.push_back(rnode(i));
    cs.A.push_back(Anode(i));
    cs.w.push_back(geo.w[i]);
  }
  return cs;
}

ConeSample sample_outgoing_cone(const CommutedCache& cache, int k, double tau) {
  const Trajectory& tr = cache.trajectory();
  const GeometryCache& geo = tr.geo;
  const BackgroundParams& par = tr.par;
  ConeSample cs;
  cs.truncated = true;
  cs.partial = tr.rows() - 1 < tr.grid.nv;
  double u_tau = gamma_coordinate(tau, par);
  double span = geo.uhat.back();
  int last = tr.rows() - 1;
  double uh_tau = u_tau == 0 ? 0.0 : uhat_of_u(u_tau, par);
  if (uh_tau >= span || u_tau > geo.v[last] * (1 + 1e-12)) {
    cs.partial = true;
    cs.coord.clear();
    return cs;
  }
  int ilo = std::min(int(uh_tau / geo.duhat), tr.nu() - 1);
  double s = (uh_tau - geo.uhat[ilo]) / geo.duhat;
  double wc = metric_coefficient(par.Lambda - uh_tau, par.M);
  auto node = [&](int j) {
    NodeData nd = lerp(node_data(cache, k, ilo, j), node_data(cache, k, ilo + 1, j), s);
    return nd;
  };
  auto rnode = [&](int j) { return (1 - s) * geo.r(ilo, j) + s * geo.r(ilo + 1, j); };
  auto Anode = [&](int j) { return (1 - s) * geo.A(ilo, j) + s * geo.A(ilo + 1, j); };
  int j0 = locate(geo.v, u_tau);
  double cell = geo.v[j0 + 1] - geo.v[j0];
  int jstart = j0 + (geo.v[j0] < u_tau - 1e-12 * cell ? 1 : 0);
  if (jstart > last) {
    cs.partial = true;
    return cs;
  }
  if (jstart > 0 && geo.v[jstart] > u_tau + 1e-12 * cell) {
    double tf = (u_tau - geo.v[j0]) / (geo.v[j0 + 1] - geo.v[j0]);
    cs.coord.push_back(u_tau);
    cs.q.push_back(lerp(node(j0), node(j0 + 1), tf));
    cs.r.push_back((1 - tf) * rnode(j0) + tf * rnode(j0 + 1));
    cs.A.push_back((1 - tf) * Anode(j0) + tf * Anode(j0 + 1));
    cs.w.push_back(wc);
  }
  for (int j = jstart; j <= last; ++j) {
    cs.coord.push_back(geo.v[j]);
    cs.q.push_back(node(j));
    cs.r.push_back(rnode(j));
    cs.A.push_back(Anode(j));
    cs.w.push_back(wc);
  }
  return cs;
}

void trapezoid(const std::vector<double>& x, const std::vector<double>& f, double& value,
               double& err) {
  value = 0;
  int n = int(x.size());
  for (int i = 0; i + 1 < n; ++i) value += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
  double coarse = 0;
  for (int i = 0; i + 2 < n; i += 2) coarse += 0.5 * (f[i] + f[i + 2]) * (x[i + 2] - x[i]);
  if (n >= 3) {
    if ((n - 1) % 2 == 1) // odd leftover cell
      coarse += 0.5 * (f[n - 2] + f[n - 1]) * (x[n - 1] - x[n - 2]);
    err = std::fabs(value - coarse) / 3.0;
  } else {
    err = 0;
  }
}

double integrate_power_tail(const std::vector<double>& x, const std::vector<double>& f,
                            double sigma) {
  // f diverges like C (x_last - x)^(-sigma) toward the final node; the final
  // entry of f is ignored.
  int n = int(x.size());
  if (n < 2) return 0;
  double v = 0;
  for (int i = 0; i + 2 < n; ++i) v += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
  v += f[n - 2] * (x[n - 1] - x[n - 2]) / (1.0 - sigma);
  return v;
}

EnergyReport outgoing_flux(const CommutedCache& cache, const EnergyConfig& cfg, double tau) {
  cfg.validate(cache.trajectory().par);
  ConeSample cs = sample_outgoing_cone(cache, cfg.k, tau);
  EnergyReport rep{"outgoing_flux", cfg.p, cfg.k, tau, 0, 0, cs.truncated, cs.partial};
  if (cs.size() < 2) return rep;
  double ps = cfg.p_star(), c = cfg.c_pstar();
  std::vector<double> f(cs.size());
  for (size_t i = 0; i < cs.size(); ++i) {
    double r = cs.r[i];
    const NodeData& q = cs.q[i];
    f[i] = std::pow(r, cfg.p) * q.dv_psi2 + c * std::pow(r, ps + 2) * q.dv_phi2 +
           r * r * q.ang_phi2 + c * std::pow(r, ps) * q.phi2;
  }
  trapezoid(cs.coord, f, rep.value, rep.err_est);
  return rep;
}

EnergyReport ingoing_flux(const CommutedCache& cache, const EnergyConfig& cfg, double tau) {
  const BackgroundParams& par = cache.trajectory().par;
  cfg.validate(par);
  ConeSample cs = sample_ingoing_cone(cache, cfg.k, tau);
  EnergyReport rep{"ingoing_flux", cfg.p, cfg.k, tau, 0, 0, false, cs.partial};
  if (cs.size() < 2) return rep;
  double ps = cfg.p_star(), c = cfg.c_pstar();
  int n = int(cs.size());
  bool hz = cs.horizon_end;
  std::vector<double> reg(n), sing(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double r = cs.r[i], A = cs.A[i], w = cs.w[i];
    const NodeData& q = cs.q[i];
    bool at_h = hz && i == n - 1;
    double s = r - par.M;
    // (r-M)^{-p} (|du psi|^2 + |du phi|^2) du -> (r-M)^{-p} w (...) duhat
    double t1 = at_h ? 0.0 : std::pow(s, -cfg.p) * w * (q.duh_psi2 + q.duh_phi2);
    // (r-M)^2 |snabla phi|^2 / w = A r^2 ang_phi2  (exact regular form)
    double t2 = A * r * r * q.ang_phi2;
    reg[i] = t1 + t2;
    // c (r-M)^{-p*+2} |phi|^2 / w = c A r^2 (r-M)^{-p*} phi2
    if (ps == 0.0)
      reg[i] += c * A * r * r * q.phi2;
    else
      sing[i] = at_h ? 0.0 : c * A * r * r * std::pow(s, -ps) * q.phi2;
  }
  trapezoid(cs.coord, reg, rep.value, rep.err_est);
  if (ps != 0.0) {
    if (hz)
      rep.value += integrate_power_tail(cs.coord, sing, ps);
    else {
      double v2, e2;
      trapezoid(cs.coord, sing, v2, e2);
      rep.value += v2;
      rep.err_est += e2;
    }
  }
  return rep;
}

EnergyReport far_ingoing_flux(const CommutedCache& cache, const EnergyConfig& cfg,
                              double v, double tau1, double tau2) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  cfg.validate(par);
  const GeometryCache& geo = tr.geo;
  int last = tr.rows() - 1;
  int jv = locate(geo.v, v);
  if (std::fabs(geo.v[jv + 1] - v) < std::fabs(geo.v[jv] - v)) ++jv;
  jv = std::min(jv, last);
  EnergyReport rep{"far_ingoing_flux", cfg.p, cfg.k, geo.v[jv], 0, 0, false, false};
  double u1 = gamma_coordinate(tau1, par), u2 = gamma_coordinate(tau2, par);
  double uh_lo = u1 <= 0 ? 0.0 : uhat_of_u(u1, par);
  double u_hi = std::min(u2, geo.v[jv]); // r >= Lambda means u <= v
  if (u_hi <= u1) return rep;
  double uh_hi = u_hi <= 0 ? 0.0 : uhat_of_u(u_hi, par);
  std::vector<double> xs, fs;
  auto push = [&](double uh, const NodeData& q, double r, double w) {
    xs.push_back(uh);
    fs.push_back(w * r * r * q.duh_phi2 +
                 (std::pow(r, cfg.p + 2) * q.ang_phi2 + std::pow(r, cfg.p) * q.phi2) / w);
  };
  int i0 = int(std::ceil(uh_lo / geo.duhat - 1e-9));
  int i1 = int(std::floor(uh_hi / geo.duhat + 1e-9));
  i1 = std::min(i1, tr.nu());
  auto interp = [&](double uh) {
    int il = std::min(int(uh / geo.duhat), tr.nu() - 1);
    double s = (uh - geo.uhat[il]) / geo.duhat;
    NodeData q = lerp(node_data(cache, cfg.k, il, jv), node_data(cache, cfg.k, il + 1, jv), s);
    double r = (1 - s) * geo.r(il, jv) + s * geo.r(il + 1, jv);
    double w = metric_coefficient(par.Lambda - uh, par.M);
    push(uh, q, r, w);
  };
  if (i0 > 0 && geo.uhat[i0] > uh_lo + 1e-12 * geo.duhat) interp(uh_lo);
  for (int i = i0; i <= i1; ++i)
    push(geo.uhat[i], node_data(cache, cfg.k, i, jv), geo.r(i, jv), geo.w[i]);
  if (uh_hi > geo.uhat[i1] + 1e-12 * geo.duhat) interp(uh_hi);
  if (xs.size() >= 2) trapezoid(xs, fs, rep.value, rep.err_est);
  return rep;
}

EnergyReport near_outgoing_flux(const CommutedCache& cache, const EnergyConfig& cfg,
                                double u, double tau1, double tau2) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  cfg.validate(par);
  const GeometryCache& geo = tr.geo;
  double uh = uhat_of_u(u, par);
  int i = int(std::lround(uh / geo.duhat));
  i = std::clamp(i, 0, tr.nu());
  EnergyReport rep{"near_outgoing_flux", cfg.p, cfg.k, u, 0, 0, false, false};
  bool horizon_line = geo.horizon && i == tr.nu();
  double u_line = horizon_line ? 1e300 : u_of_uhat(geo.uhat[i], par);
  double v1 = gamma_coordinate(tau1, par);
  double v2 = std::min(gamma_coordinate(tau2, par), u_line); // r <= Lambda: v <= u
  int last = tr.rows() - 1;
  v2 = std::min(v2, geo.v[last]);
  if (v2 <= v1) return rep;
  std::vector<double> xs, fs;
  auto val = [&](const NodeData& q, double r) {
    return geo.w[i] * geo.w[i] * q.duh_phi2 +
           std::pow(std::max(r - par.M, 0.0), 2 - cfg.p) * (q.ang_phi2 + q.phi2);
  };
  int j0 = locate(geo.v, v1);
  double tf = (v1 - geo.v[j0]) / (geo.v[j0 + 1] - geo.v[j0]);
  int jstart = j0 + (tf > 1e-12 ? 1 : 0);
  if (tf > 1e-12) {
    xs.push_back(v1);
    NodeData q = lerp(node_data(cache, cfg.k, i, j0), node_data(cache, cfg.k, i, j0 + 1), tf);
    fs.push_back(val(q, (1 - tf) * geo.r(i, j0) + tf * geo.r(i, j0 + 1)));
  }
  int jend = locate(geo.v, v2);
  for (int j = jstart; j <= jend; ++j) {
    xs.push_back(geo.v[j]);
    fs.push_back(val(node_data(cache, cfg.k, i, j), geo.r(i, j)));
  }
  if (v2 > geo.v[jend] + 1e-12) {
    double t2 = (v2 - geo.v[jend]) / (geo.v[jend + 1] - geo.v[jend]);
    xs.push_back(v2);
    NodeData q =
        lerp(node_data(cache, cfg.k, i, jend), node_data(cache, cfg.k, i, jend + 1), t2);
    fs.push_back(val(q, (1 - t2) * geo.r(i, jend) + t2 * geo.r(i, jend + 1)));
  }
  if (xs.size() >= 2) trapezoid(xs, fs, rep.value, rep.err_est);
  return rep;
}

EnergyReport far_bulk_density(const CommutedCache& cache, const EnergyConfig& cfg,
                              double tau) {
  const BackgroundParams& par = cache.trajectory().par;
  cfg.validate(par);
  ConeSample cs = sample_outgoing_cone(cache, cfg.k, tau);
  EnergyReport rep{"far_bulk_density", cfg.p, cfg.k, tau, 0, 0, cs.truncated, cs.partial};
  if (cs.size() < 2) return rep;
  double d = par.delta;
  std::vector<double> f(cs.size());
  for (size_t i = 0; i < cs.size(); ++i) {
    double r = cs.r[i], w = cs.w[i];
    const NodeData& q = cs.q[i];
    f[i] = std::pow(r, 1 - d) * (w * w * q.duh_phi2 + q.dv_phi2) + r * q.ang_phi2 +
           std::pow(r, -1 - d) * q.phi2;
    if (cfg.p != 0.0)
      f[i] += std::pow(r, cfg.p - 1) * q.dv_psi2 + std::pow(r, cfg.p + 1) * q.dv_phi2 +
              std::pow(r, cfg.p + 1) * q.ang_phi2 + std::pow(r, cfg.p - 1) * q.phi2;
  }
  trapezoid(cs.coord, f, rep.value, rep.err_est);
  return rep;
}

namespace {

// Shared assembly of the near bulk densities; `nondegenerate` adds the
// trapping-band derivative terms of the tilde variant.
EnergyReport near_bulk(const CommutedCache& cache, const EnergyConfig& cfg, double tau,
                       bool nondegenerate, const char* label) {
  const BackgroundParams& par = cache.trajectory().par;
  ConeSample cs = sample_ingoing_cone(cache, cfg.k, tau);
  EnergyReport rep{label, cfg.p, cfg.k, tau, 0, 0, false, cs.partial};
  int n = int(cs.size());
  if (n < 2) return rep;
  double d = par.delta;
  bool hz = cs.horizon_end;
  // pow(r - M, e) at the pinned horizon node: the analytic limit.
  auto spow = [](double s, double e) {
    if (s > 0) return std::pow(s, e);
    return e > 0 ? 0.0 : (e == 0 ? 1.0 : 0.0); // negative e only multiplies w -> 0
  };
  std::vector<double> reg(n, 0.0), sing1(n, 0.0), sing2(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double r = cs.r[i], A = cs.A[i], w = cs.w[i];
    double s = r - par.M;
    bool at_h = hz && i == n - 1;
    const NodeData& q = cs.q[i];
    if (r <= par.r_m1()) {
      // region A: (r-M)^{1+d}(|du phi|^2 + |dv phi|^2) + (r-M)^3 |snabla phi|^2
      //           + (r-M)^4 |phi|^2, all over w after the chart change
      reg[i] += spow(s, 1 + d) * w * q.duh_phi2 + s * A * r * r * q.ang_phi2 +
                s * s * A * r * r * q.phi2;
      sing1[i] = at_h ? 0.0 : std::pow(s, d - 1) * A * r * r * q.dv_phi2;
      if (cfg.p != 0.0) {
        // nondegenerate p-shifted piece: (r-M)^{1-p}(w |du psi|^2 + ...)
        reg[i] += at_h && cfg.p > 1 ? 0.0
                                    : spow(s, 1 - cfg.p) * w * (q.duh_psi2 + q.duh_phi2);
        sing2[i] = at_h && cfg.p > 1
                       ? 0.0
                       : spow(s, 1 - cfg.p) * A * r * r * (q.ang_phi2 + q.phi2);
      }
    }
    if (r >= par.r_m1() && r <= 3 * par.M) {
      reg[i] += (q.Rphi2 + q.phi2) / w;
      if (nondegenerate)
        reg[i] += (w * w * q.duh_phi2 + q.dv_phi2 + q.ang_phi2) / w;
    }
    if (r >= 3 * par.M && r <= par.Lambda)
      reg[i] += (w * w * q.duh_phi2 + q.dv_phi2 + q.ang_phi2 + q.phi2) / w;
  }
  trapezoid(cs.coord, reg, rep.value, rep.err_est);
  double v2, e2;
  if (hz)
    rep.value += integrate_power_tail(cs.coord, sing1, 1 - d);
  else {
    trapezoid(cs.coord, sing1, v2, e2);
    rep.value += v2;
    rep.err_est += e2;
  }
  if (cfg.p != 0.0) {
    if (hz && cfg.p > 1.0)
      rep.value += integrate_power_tail(cs.coord, sing2, cfg.p - 1);
    else {
      trapezoid(cs.coord, sing2, v2, e2);
      rep.value += v2;
      rep.err_est += e2;
    }
  }
  return rep;
}

} // namespace

EnergyReport near_bulk_density(const CommutedCache& cache, const EnergyConfig& cfg,
                               double tau) {
  cfg.validate(cache.trajectory().par);
  return near_bulk(cache, cfg, tau, false, "near_bulk_density");
}

EnergyReport near_bulk_nondegenerate(const CommutedCache& cache, int k, double tau) {
  EnergyConfig cfg{0.0, k};
  return near_bulk(cache, cfg, tau, true, "near_bulk_nondegenerate");
}

std::string energy_kind_name(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::OutgoingFlux: return "outgoing_flux";
    case EnergyKind::IngoingFlux: return "ingoing_flux";
    case EnergyKind::FarIngoingFlux: return "far_ingoing_flux";
    case EnergyKind::NearOutgoingFlux: return "near_outgoing_flux";
    case EnergyKind::FarBulkDensity: return "far_bulk_density";
    case EnergyKind::NearBulkDensity: return "near_bulk_density";
    case EnergyKind::NearBulkNondegenerate: return "near_bulk_nondegenerate";
  }
  return "?";
}

EnergyReport compute_energy(EnergyKind kind, const EnergyConfig& cfg,
                            const CommutedCache& cache, double tau, double tau1,
                            double tau2) {
  switch (kind) {
    case EnergyKind::OutgoingFlux: return outgoing_flux(cache, cfg, tau);
    case EnergyKind::IngoingFlux: return ingoing_flux(cache, cfg, tau);
    case EnergyKind::FarIngoingFlux: return far_ingoing_flux(cache, cfg, tau, tau1, tau2);
    case EnergyKind::NearOutgoingFlux:
      return near_outgoing_flux(cache, cfg, tau, tau1, tau2);
    case EnergyKind::FarBulkDensity: return far_bulk_density(cache, cfg, tau);
    case EnergyKind::NearBulkDensity: return near_bulk_density(cache, cfg, tau);
    case EnergyKind::NearBulkNondegenerate:
      return near_bulk_nondegenerate(cache, cfg.k, tau);
  }
  throw std::logic_error("compute_energy: unreachable");
}

namespace {

std::vector<double> tau_samples(double tau1, double tau2, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i)
    t[i] = tau1 * std::pow(tau2 / tau1, double(i) / (n - 1));
  return t;
}

} // namespace

double master_energy(const CommutedCache& cache, const EnergyConfig& cfg, double tau1,
                     double tau2, int nsamples) {
  const Trajectory& tr = cache.trajectory();
  const GeometryCache& geo = tr.geo;
  const BackgroundParams& par = tr.par;
  std::vector<double> taus = tau_samples(tau1, tau2, nsamples);
  double sup_flux = 0;
  std::vector<double> bulk(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) {
    double e = outgoing_flux(cache, cfg, taus[i]).value +
               ingoing_flux(cache, cfg, taus[i]).value;
    sup_flux = std::max(sup_flux, e);
    bulk[i] = far_bulk_density(cache, cfg, taus[i]).value +
              near_bulk_density(cache, cfg, taus[i]).value;
  }
  double bulk_int, berr;
  trapezoid(taus, bulk, bulk_int, berr);
  // sup over the fixed-cone flux families, sampled on grid lines
  double v1 = gamma_coordinate(tau1, par);
  int last = tr.rows() - 1;
  double sup_fbar = 0;
  int j1 = locate(geo.v, v1);
  int stride = std::max(1, (last - j1) / nsamples);
  for (int j = j1; j <= last; j += stride)
    sup_fbar = std::max(sup_fbar,
                        far_ingoing_flux(cache, cfg, geo.v[j], tau1, tau2).value);
  double sup_f = 0;
  double uh1 = v1 <= 0 ? 0.0 : uhat_of_u(v1, par);
  int i1 = int(std::ceil(uh1 / geo.duhat - 1e-9));
  int istride = std::max(1, (tr.nu() - i1) / nsamples);
  for (int i = i1; i <= tr.nu(); i += istride) {
    double u = (geo.horizon && i == tr.nu()) ? -1.0 : u_of_uhat(geo.uhat[i], par);
    if (u < 0) { // horizon line: pass a u beyond tau2 so the v-range rules apply
      u = gamma_coordinate(tau2, par) + 1.0;
      EnergyReport r = near_outgoing_flux(cache, cfg, u, tau1, tau2);
      sup_f = std::max(sup_f, r.value);
      continue;
    }
    sup_f = std::max(sup_f, near_outgoing_flux(cache, cfg, u, tau1, tau2).value);
  }
  return sup_flux + sup_fbar + sup_f + bulk_int;
}

double trapping_integral(const CommutedCache& cache, int k, double tau1, double tau2,
                         int nsamples) {
  std::vector<double> taus = tau_samples(tau1, tau2, nsamples);
  std::vector<double> vals(taus.size());
  for (size_t i = 0; i < taus.size(); ++i)
    vals[i] = near_bulk_nondegenerate(cache, k, taus[i]).value;
  double v, e;
  trapezoid(taus, vals, v, e);
  return v;
}

InitialNorm initial_norm(const CommutedCache& cache, int kmax) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  double d = par.delta;
  int k_hi = std::min(kmax, cache.kmax());
  int k_lo = std::max(k_hi - 2, 0);
  int k_sup = std::max(k_hi - 4, 0);
  EnergyConfig chi{1 + d, k_hi}, clo{2 - d, k_lo};
  double e2 = outgoing_flux(cache, clo, 1.0).value + ingoing_flux(cache, clo, 1.0).value +
              outgoing_flux(cache, chi, 1.0).value + ingoing_flux(cache, chi, 1.0).value;
  // pointwise sup terms at tau = 1: |(r-M)^{-2} du psi| = |duhat psi|/(A r^2)
  // (regular) on the ingoing cone, |r^{3/2-d} dv psi| on the outgoing cone
  const GeometryCache& geo = tr.geo;
  const SphereGrid& sg = unit_grid(tr.L);
  int nc = tr.ncoef();
  auto tuple_sup = [&](bool ingoing) {
    double sup = 0;
    double v_tau = gamma_coordinate(1.0, par); // tau = 1 is the initial corner
    int jv = locate(geo.v, v_tau);
    int last = tr.rows() - 1;
    // sup of the summed |f^k| over the cone collocation points
    if (ingoing) {
      for (int i = int(std::ceil(uhat_of_u(std::max(v_tau, 1e-12), par) / geo.duhat));
           i <= tr.nu(); ++i) {
        if (i < 0) continue;
        Vec acc = Vec::Zero(sg.npts() * tr.ncomp);
        for (size_t t = 0; t < cache.tuples().size(); ++t) {
          if (cache.tuples()[t].order() > k_sup) continue;
          const std::vector<Mat>& f = cache.slices(t);
          double hu = geo.duhat;
          Eigen::RowVectorXd duh;
          if (i == 0)
            duh = (-3 * f[jv].row(0) + 4 * f[jv].row(1) - f[jv].row(2)) / (2 * hu);
          else if (i == tr.nu())
            duh = (3 * f[jv].row(i) - 4 * f[jv].row(i - 1) + f[jv].row(i - 2)) / (2 * hu);
          else
            duh = (f[jv].row(i + 1) - f[jv].row(i - 1)) / (2 * hu);
          double fac = 1.0 / (geo.A(i, jv) * geo.r(i, jv) * geo.r(i, jv));
          for (int q = 0; q < tr.ncomp; ++q)
            acc.segment(q * sg.npts(), sg.npts()) +=
                (sg.B * duh.segment(q * nc, nc).transpose() * fac).cwiseAbs();
        }
        sup = std::max(sup, acc.maxCoeff());
      }
    } else {
      for (int j = jv; j <= last; ++j) {
        Vec acc = Vec::Zero(sg.npts() * tr.ncomp);
        for (size_t t = 0; t < cache.tuples().size(); ++t) {
          if (cache.tuples()[t].order() > k_sup) continue;
          const std::vector<Mat>& f = cache.slices(t);
          int j0 = j == 0 ? 0 : (j == last ? last - 2 : j - 1);
          double c0, c1, c2;
          deriv3_weights(geo.v[j0], geo.v[j0 + 1], geo.v[j0 + 2], geo.v[j], c0, c1, c2);
          Eigen::RowVectorXd dv =
              c0 * f[j0].row(0) + c1 * f[j0 + 1].row(0) + c2 * f[j0 + 2].row(0);
          double fac = std::pow(geo.r(0, j), 1.5 - d);
          for (int q = 0; q < tr.ncomp; ++q)
            acc.segment(q * sg.npts(), sg.npts()) +=
                (sg.B * dv.segment(q * nc, nc).transpose() * fac).cwiseAbs();
        }
        sup = std::max(sup, acc.maxCoeff());
      }
    }
    return sup;
  };
  InitialNorm out;
  out.sup_part = std::max(tuple_sup(true), tuple_sup(false));
  out.energy_part = std::sqrt(std::max(e2, 0.0));
  out.value = std::sqrt(out.energy_part * out.energy_part + out.sup_part * out.sup_part);
  return out;
}

} // namespace ern
