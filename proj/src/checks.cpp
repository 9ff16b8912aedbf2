#include "ern/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace ern {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

Eigen::RowVectorXd duh_of(const std::vector<Mat>& f, const GeometryCache& geo, int i,
                          int j) {
  double h = geo.duhat;
  int nu = int(f[j].rows()) - 1;
  if (i == 0) return (-3 * f[j].row(0) + 4 * f[j].row(1) - f[j].row(2)) / (2 * h);
  if (i == nu) return (3 * f[j].row(nu) - 4 * f[j].row(nu - 1) + f[j].row(nu - 2)) / (2 * h);
  return (f[j].row(i + 1) - f[j].row(i - 1)) / (2 * h);
}

Eigen::RowVectorXd dv_of(const std::vector<Mat>& f, const GeometryCache& geo, int i,
                         int j) {
  int last = int(f.size()) - 1;
  int j0 = j == 0 ? 0 : (j == last ? last - 2 : j - 1);
  double c0, c1, c2;
  deriv3_weights(geo.v[j0], geo.v[j0 + 1], geo.v[j0 + 2], geo.v[j], c0, c1, c2);
  return c0 * f[j0].row(i) + c1 * f[j0 + 1].row(i) + c2 * f[j0 + 2].row(i);
}

int nearest_index(const std::vector<double>& x, double v) {
  auto it = std::lower_bound(x.begin(), x.end(), v);
  int j = int(it - x.begin());
  if (j > 0 && (j >= int(x.size()) || x[j] - v > v - x[j - 1])) --j;
  return std::min(j, int(x.size()) - 1);
}

// Evaluates the regular source S (and its coefficient row) at a node from the
// coefficient rows of psi and its derivatives; mirrors the march kernel.
struct SourceEval {
  const NonlinearitySpec& spec;
  const BackgroundParams& par;
  int L, ncomp, nc;
  const SphereGrid* sg = nullptr;
  Mat G[3];
  Mat vphi, vduh, vdv, vg[3], S;
  Eigen::VectorXd wq;

  SourceEval(const NonlinearitySpec& sp, const BackgroundParams& p, int Lband, int ncmp)
      : spec(sp), par(p), L(Lband), ncomp(ncmp), nc(sh_count(Lband)) {
    if (spec.empty()) return;
    sg = &padded_grid(L);
    for (int i = 0; i < 3; ++i) {
      G[i].resize(nc, nc);
      Vec e = Vec::Zero(nc);
      for (int c = 0; c < nc; ++c) {
        e[c] = 1;
        G[i].col(c) = rotation_derivative(i + 1, e);
        e[c] = 0;
      }
    }
    int np = sg->npts();
    vphi.resize(np, ncomp);
    vduh.resize(np, ncomp);
    vdv.resize(np, ncomp);
    for (auto& m : vg) m.resize(np, ncomp);
    S.resize(np, ncomp);
    wq.resize(np);
    for (int it = 0; it < sg->nth; ++it)
      for (int jp = 0; jp < sg->nph; ++jp) wq[it * sg->nph + jp] = sg->wx[it] * kTwoPi / sg->nph;
  }

  // collocation values of S on the padded grid
  const Mat& eval(double r, double A, double w, const Eigen::RowVectorXd& psic,
                  const Eigen::RowVectorXd& duh, const Eigen::RowVectorXd& dv) {
    double D = A * w;
    Eigen::RowVectorXd phic = psic / r;
    Eigen::RowVectorXd duhphi = (duh + A * phic) / r;
    Eigen::RowVectorXd dvphi = (dv - D * phic) / r;
    for (int q = 0; q < ncomp; ++q) {
      auto seg = phic.segment(q * nc, nc).transpose();
      vphi.col(q) = sg->B * seg;
      vduh.col(q) = sg->B * duhphi.segment(q * nc, nc).transpose();
      vdv.col(q) = sg->B * dvphi.segment(q * nc, nc).transpose();
      for (int i = 0; i < 3; ++i) vg[i].col(q) = sg->B * (G[i] * seg);
    }
    S.setZero();
    PointState st;
    st.r = r;
    st.A = A;
    st.w = w;
    st.phi = &vphi;
    st.duhat_phi = &vduh;
    st.dv_phi = &vdv;
    for (int i = 0; i < 3; ++i) st.gamma_phi[i] = &vg[i];
    accumulate_source(spec, st, SourceChart::RegularizedNull, par, S);
    return S;
  }

  Eigen::RowVectorXd coef_row() const {
    Eigen::RowVectorXd out(ncomp * nc);
    for (int q = 0; q < ncomp; ++q)
      out.segment(q * nc, nc) = (sg->Bw * S.col(q)).transpose();
    return out;
  }
};

// Commuted slices of the field w*S (= D N); zero on the horizon line by
// construction, so F / w stays bounded.
class SourceSlices {
 public:
  SourceSlices(const CommutedCache& cache) {
    const Trajectory& tr = cache.trajectory();
    empty_ = tr.spec.empty();
    if (empty_) return;
    SourceEval se(tr.spec, tr.par, tr.L, tr.ncomp);
    int rows = tr.rows(), nu = tr.nu(), ncol = tr.ncol();
    std::vector<Mat> base(rows, Mat(nu + 1, ncol));
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i <= nu; ++i) {
        if (tr.geo.w[i] == 0) {
          base[j].row(i).setZero();
          continue;
        }
        se.eval(tr.geo.r(i, j), tr.geo.A(i, j), tr.geo.w[i], tr.psi[j].row(i),
                duh_of(tr.psi, tr.geo, i, j), dv_of(tr.psi, tr.geo, i, j));
        base[j].row(i) = tr.geo.w[i] * se.coef_row();
      }
    const auto& tuples = cache.tuples();
    fields_.resize(tuples.size());
    std::map<std::string, int> index;
    for (size_t idx = 0; idx < tuples.size(); ++idx) {
      const CommutTuple& tup = tuples[idx];
      index[tup.name()] = int(idx);
      if (tup.order() == 0)
        fields_[idx] = base;
      else if (tup.t > 0)
        fields_[idx] = commute_T(fields_[index.at(CommutTuple{tup.t - 1, tup.gammas}.name())],
                                 tr.geo);
      else
        fields_[idx] = commute_gamma(
            fields_[index.at(
                CommutTuple{0, std::vector<int>(tup.gammas.begin() + 1, tup.gammas.end())}
                    .name())],
            tup.gammas[0], tr.L, tr.ncomp);
    }
  }
  bool empty() const { return empty_; }
  const std::vector<Mat>& slices(int t) const { return fields_[t]; }

 private:
  bool empty_ = true;
  std::vector<std::vector<Mat>> fields_;
};

// upper uhat index of row j inside the butterfly
int row_ihi(const ButterflyIdx& b, int j) { return j <= b.j2 ? b.i2p : b.i2; }

// Integral over the uhat segment [ia,ib] of row j; fn(nd, r, A, w, at_horizon).
using LineFn = std::function<double(const NodeData&, double, double, double, bool)>;

double integral_u(const CommutedCache& cache, int k, int j, int ia, int ib,
                  const LineFn& fn) {
  const Trajectory& tr = cache.trajectory();
  std::vector<double> xs, fs;
  for (int i = ia; i <= ib; ++i) {
    bool at_h = tr.geo.horizon && i == tr.nu();
    xs.push_back(tr.geo.uhat[i]);
    fs.push_back(fn(node_data(cache, k, i, j), tr.geo.r(i, j), tr.geo.A(i, j),
                    tr.geo.w[i], at_h));
  }
  double v = 0, e = 0;
  if (xs.size() >= 2) trapezoid(xs, fs, v, e);
  return v;
}

// Same but the integrand diverges like (uhat_H - uhat)^{-sigma} at a horizon
// endpoint.
double integral_u_tail(const CommutedCache& cache, int k, int j, int ia, int ib,
                       double sigma, const LineFn& fn) {
  const Trajectory& tr = cache.trajectory();
  if (!(tr.geo.horizon && ib == tr.nu()) || sigma <= 0)
    return integral_u(cache, k, j, ia, ib, fn);
  std::vector<double> xs, fs;
  for (int i = ia; i <= ib; ++i) {
    xs.push_back(tr.geo.uhat[i]);
    bool at_h = i == tr.nu();
    fs.push_back(at_h ? 0.0
                      : fn(node_data(cache, k, i, j), tr.geo.r(i, j), tr.geo.A(i, j),
                           tr.geo.w[i], false));
  }
  if (xs.size() < 2) return 0;
  return integrate_power_tail(xs, fs, sigma);
}

double integral_v(const CommutedCache& cache, int k, int i, int ja, int jb,
                  const LineFn& fn) {
  const Trajectory& tr = cache.trajectory();
  std::vector<double> xs, fs;
  bool at_h = tr.geo.horizon && i == tr.nu();
  for (int j = ja; j <= jb; ++j) {
    xs.push_back(tr.geo.v[j]);
    fs.push_back(fn(node_data(cache, k, i, j), tr.geo.r(i, j), tr.geo.A(i, j),
                    tr.geo.w[i], at_h));
  }
  double v = 0, e = 0;
  if (xs.size() >= 2) trapezoid(xs, fs, v, e);
  return v;
}

// Bulk integral over the butterfly: per-row uhat integral (regular part fn,
// optional power-tail part tail with exponent sigma), then trapezoid in v.
double integral_bulk(const CommutedCache& cache, int k, const ButterflyIdx& b,
                     const LineFn& fn, const LineFn* tail = nullptr, double sigma = 0) {
  const Trajectory& tr = cache.trajectory();
  std::vector<double> xs, fs;
  for (int j = b.j1; j <= b.j2p; ++j) {
    double row = integral_u(cache, k, j, b.i1, row_ihi(b, j), fn);
    if (tail) row += integral_u_tail(cache, k, j, b.i1, row_ihi(b, j), sigma, *tail);
    xs.push_back(tr.geo.v[j]);
    fs.push_back(row);
  }
  double v = 0, e = 0;
  if (xs.size() >= 2) trapezoid(xs, fs, v, e);
  return v;
}

// T-energy integrand families
double near_T(const NodeData& q, double, double A, double w, bool) {
  return w * q.duh_phi2 + A * (q.ang_phi2 + q.phi2);
}
double out_T(const NodeData& q, double r, double, double, bool) {
  return r * r * q.dv_phi2 + r * r * q.ang_phi2 + q.phi2;
}
double far_in_T(const NodeData& q, double r, double, double w, bool) {
  return r * r * w * q.duh_phi2 + (r * r * q.ang_phi2 + q.phi2) / w;
}
double near_out_T(const NodeData& q, double, double A, double w, bool) {
  return q.dv_phi2 + A * w * (q.ang_phi2 + q.phi2);
}

double piece_I(const CommutedCache& c, int k, const ButterflyIdx& b) {
  return integral_u(c, k, b.j1, b.i1, b.i2p, near_T);
}
double piece_II(const CommutedCache& c, int k, const ButterflyIdx& b) {
  return integral_v(c, k, b.i1, b.j1, b.j2p, out_T);
}
double piece_III(const CommutedCache& c, int k, const ButterflyIdx& b) {
  return integral_u(c, k, b.j2p, b.i1, b.i2, far_in_T);
}
double piece_IV(const CommutedCache& c, int k, const ButterflyIdx& b) {
  return integral_v(c, k, b.i2, b.j2, b.j2p, out_T);
}
double piece_V(const CommutedCache& c, int k, const ButterflyIdx& b) {
  return integral_u(c, k, b.j2, b.i2, b.i2p, near_T);
}
double piece_VI(const CommutedCache& c, int k, const ButterflyIdx& b) {
  return integral_v(c, k, b.i2p, b.j1, b.j2, near_out_T);
}

CheckResult finish(const std::string& name, double lhs, double rhs) {
  CheckResult res;
  res.name = name;
  res.lhs = lhs;
  res.rhs = rhs;
  if (!std::isfinite(lhs) || !std::isfinite(rhs) || (lhs > 0 && rhs <= 0)) {
    res.violation = true;
    res.constant = std::numeric_limits<double>::infinity();
  } else {
    res.constant = rhs > 0 ? lhs / rhs : 0.0;
  }
  return res;
}

} // namespace

ButterflyIdx make_butterfly(const Trajectory& tr, double tau1, double tau2,
                            double uhat2p, double v2p) {
  const BackgroundParams& par = tr.par;
  ButterflyIdx b;
  int last = tr.rows() - 1;
  double v1 = gamma_coordinate(tau1, par), v2 = gamma_coordinate(tau2, par);
  b.j1 = nearest_index(tr.geo.v, v1);
  b.j2 = nearest_index(tr.geo.v, v2);
  b.j2p = v2p < 0 ? last : nearest_index(tr.geo.v, v2p);
  auto snap_u = [&](double u) {
    double uh = u <= 0 ? 0.0 : uhat_of_u(std::min(u, u_of_uhat(tr.geo.uhat.back() * (1 - 1e-12), par)), par);
    return std::clamp(int(std::lround(uh / tr.geo.duhat)), 0, tr.nu());
  };
  b.i1 = snap_u(v1);
  b.i2 = snap_u(v2);
  b.i2p = uhat2p < 0 ? tr.nu()
                     : std::clamp(int(std::lround(uhat2p / tr.geo.duhat)), 0, tr.nu());
  if (b.j2p > last || !(b.j1 < b.j2 && b.j2 < b.j2p) || !(b.i1 < b.i2 && b.i2 < b.i2p))
    throw std::invalid_argument("butterfly region degenerate or outside the domain");
  return b;
}

ErrorIntegrals error_integrals(const CommutedCache& cache, int k, double p,
                               const ButterflyIdx& b, int stride) {
  const Trajectory& tr = cache.trajectory();
  ErrorIntegrals out;
  if (tr.spec.empty()) return out;
  SourceSlices src(cache);
  const GeometryCache& geo = tr.geo;
  const BackgroundParams& par = tr.par;
  const SphereGrid& sg = unit_grid(tr.L);
  int nc = tr.ncoef(), np = sg.npts();
  Eigen::VectorXd wq(np);
  for (int it = 0; it < sg.nth; ++it)
    for (int jp = 0; jp < sg.nph; ++jp) wq[it * sg.nph + jp] = sg.wx[it] * kTwoPi / sg.nph;

  std::vector<int> jrows, irows;
  for (int j = b.j1; j <= b.j2p; j += stride) jrows.push_back(j);
  if (jrows.back() != b.j2p) jrows.push_back(b.j2p);

  auto cellw = [](const std::vector<double>& coords, size_t idx,
                  const std::vector<int>& nodes, auto val) {
    double lo = idx == 0 ? val(nodes[0]) : 0.5 * (val(nodes[idx - 1]) + val(nodes[idx]));
    double hi = idx + 1 == nodes.size() ? val(nodes[idx])
                                        : 0.5 * (val(nodes[idx]) + val(nodes[idx + 1]));
    (void)coords;
    return hi - lo;
  };

  Vec pa(np), pb(np), pc(np);
  for (size_t jj = 0; jj < jrows.size(); ++jj) {
    int j = jrows[jj];
    auto vcoord = [&](int jn) { return geo.v[jn]; };
    double dv_w = cellw(geo.v, jj, jrows, vcoord);
    int ihi = row_ihi(b, j);
    std::vector<int> inodes;
    for (int i = b.i1; i <= ihi; i += stride) inodes.push_back(i);
    if (inodes.back() != ihi) inodes.push_back(ihi);
    for (size_t ii = 0; ii < inodes.size(); ++ii) {
      int i = inodes[ii];
      auto ucoord = [&](int in) { return geo.uhat[in]; };
      double du_w = cellw(geo.uhat, ii, inodes, ucoord);
      double cw = du_w * dv_w;
      double r = geo.r(i, j), A = geo.A(i, j), w = geo.w[i];
      bool at_h = geo.horizon && i == tr.nu();
      bool in_band = r >= par.r_m2() && r <= 4 * par.M;
      for (size_t t = 0; t < cache.tuples().size(); ++t) {
        if (cache.tuples()[t].order() > k) continue;
        const std::vector<Mat>& f = cache.slices(t);
        Eigen::RowVectorXd psi = f[j].row(i);
        Eigen::RowVectorXd duh = duh_of(f, geo, i, j);
        Eigen::RowVectorXd dvr = dv_of(f, geo, i, j);
        Eigen::RowVectorXd phi = psi / r;
        Eigen::RowVectorXd duhphi = (duh + A * phi) / r;
        Eigen::RowVectorXd dvphi = (dvr - A * w * phi) / r;
        // S^t = F^t / w with the nearest regular node at the horizon
        Eigen::RowVectorXd Srow;
        if (at_h)
          Srow = src.slices(int(t))[j].row(i - 1) / geo.w[i - 1];
        else
          Srow = src.slices(int(t))[j].row(i) / w;
        Eigen::RowVectorXd Frow = at_h ? Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(psi.size()))
                                       : Eigen::RowVectorXd(w * Srow);
        for (int q = 0; q < tr.ncomp; ++q) {
          pc = (sg.B * Srow.segment(q * nc, nc).transpose()).cwiseAbs();
          Vec Fabs = (sg.B * Frow.segment(q * nc, nc).transpose()).cwiseAbs();
          // E_T: r^2 (w|duh phi| + |dv phi|) |S|
          pa = (sg.B * duhphi.segment(q * nc, nc).transpose()).cwiseAbs();
          pb = (sg.B * dvphi.segment(q * nc, nc).transpose()).cwiseAbs();
          out.e_T += cw * r * r * wq.dot(((w * pa + pb).cwiseProduct(pc)));
          // E_Z: r A |phi| |F|
          Vec phiabs = (sg.B * phi.segment(q * nc, nc).transpose()).cwiseAbs();
          out.e_Z += cw * r * A * wq.dot(phiabs.cwiseProduct(Fabs));
          // E_trap: |phi||F| / (A w^2) on the band
          if (in_band && !at_h)
            out.e_trap += cw / (A * w * w) * wq.dot(phiabs.cwiseProduct(Fabs));
          if (r <= par.Lambda) {
            // (r-M)^{-p} r^2 |duh psi| |F|
            Vec duhabs = (sg.B * duh.segment(q * nc, nc).transpose()).cwiseAbs();
            double wt = at_h ? 0.0 : std::pow(r - par.M, -p) * r * r;
            out.e_near += cw * wt * wq.dot(duhabs.cwiseProduct(Fabs));
          }
          if (r >= par.Lambda) {
            Vec dvabs = (sg.B * dvr.segment(q * nc, nc).transpose()).cwiseAbs();
            out.e_far += cw * std::pow(r, p + 1) / (A * w * w) *
                         wq.dot(dvabs.cwiseProduct(Fabs));
          }
        }
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> source_class_magnitudes(
    const Trajectory& tr, const ButterflyIdx& b, int stride) {
  std::vector<std::pair<std::string, double>> out;
  if (tr.spec.empty()) return out;
  auto classes = classify_for_diagnostics(tr.spec);
  // distinct class labels in order of first appearance
  std::vector<StructClass> labels;
  for (const auto& cl : classes)
    for (StructClass c : cl)
      if (std::find(labels.begin(), labels.end(), c) == labels.end()) labels.push_back(c);
  const GeometryCache& geo = tr.geo;
  for (StructClass lab : labels) {
    NonlinearitySpec sub;
    sub.ncomp = tr.spec.ncomp;
    for (size_t t = 0; t < tr.spec.terms.size(); ++t)
      if (std::find(classes[t].begin(), classes[t].end(), lab) != classes[t].end())
        sub.terms.push_back(tr.spec.terms[t]);
    SourceEval se(sub, tr.par, tr.L, tr.ncomp);
    double total = 0;
    for (int j = b.j1; j <= b.j2p; j += stride) {
      double dvw = stride * (j + 1 <= b.j2p ? geo.v[std::min(j + 1, b.j2p)] - geo.v[j]
                                            : geo.v[j] - geo.v[j - 1]);
      int ihi = row_ihi(b, j);
      for (int i = b.i1; i <= ihi; i += stride) {
        if (geo.w[i] == 0) continue;
        double duw = stride * geo.duhat;
        double r = geo.r(i, j), A = geo.A(i, j), w = geo.w[i];
        const Mat& S = se.eval(r, A, w, tr.psi[j].row(i), duh_of(tr.psi, geo, i, j),
                               dv_of(tr.psi, geo, i, j));
        double ang = 0;
        for (int q = 0; q < tr.ncomp; ++q)
          ang += se.wq.dot(S.col(q).cwiseAbs());
        total += duw * dvw * r * r * w * ang; // || D N ||_{L1} style magnitude
      }
    }
    out.push_back({struct_class_name(lab), total});
  }
  return out;
}

CheckResult check_t_energy(const CommutedCache& cache, int k, const ButterflyIdx& b) {
  double lhs = piece_III(cache, k, b) + piece_IV(cache, k, b) + piece_V(cache, k, b) +
               piece_VI(cache, k, b);
  ErrorIntegrals e = error_integrals(cache, k, 0.0, b);
  double rhs = piece_I(cache, k, b) + piece_II(cache, k, b) + e.e_T;
  return finish("TEnergy", lhs, rhs);
}

namespace {

double morawetz_lhs(const CommutedCache& cache, int k, const ButterflyIdx& b) {
  const BackgroundParams& par = cache.trajectory().par;
  double eta = par.delta;
  double M = par.M;
  LineFn reg = [&par, eta, M](const NodeData& q, double r, double A, double w, bool at_h) {
    double val = 0;
    double s = r - M;
    if (r <= par.r_m1()) {
      val += (at_h ? 0.0 : std::pow(s, 1 + eta) * w * q.duh_phi2) +
             s * A * r * r * q.ang_phi2 + s * s * A * r * r * q.phi2;
    }
    if (r >= par.r_m1() && r <= 3 * M) val += (q.Rphi2 + q.phi2) / w;
    if (r >= 3 * M)
      val += (std::pow(r, 1 - eta) * (w * w * q.duh_phi2 + q.dv_phi2) + r * q.ang_phi2 +
              std::pow(r, -1 - eta) * q.phi2) /
             w;
    return val;
  };
  LineFn sing = [&par, eta, M](const NodeData& q, double r, double A, double, bool) {
    if (r > par.r_m1()) return 0.0;
    return std::pow(r - M, eta - 1) * A * r * r * q.dv_phi2;
  };
  return integral_bulk(cache, k, b, reg, &sing, 1 - eta);
}

double morawetz_rhs(const CommutedCache& cache, int k, const ButterflyIdx& b) {
  ErrorIntegrals e = error_integrals(cache, k, 0.0, b);
  return piece_I(cache, k, b) + piece_II(cache, k, b) + e.e_T + e.e_Z;
}

} // namespace

CheckResult check_morawetz(const CommutedCache& cache, int k, const ButterflyIdx& b) {
  return finish("Morawetz", morawetz_lhs(cache, k, b), morawetz_rhs(cache, k, b));
}

CheckResult check_trap_removal(const CommutedCache& cache, int k, const ButterflyIdx& b) {
  if (cache.kmax() < k + 1)
    throw std::invalid_argument("trap removal needs commuted fields at order k+1");
  const BackgroundParams& par = cache.trajectory().par;
  LineFn band = [&par](const NodeData& q, double r, double, double w, bool) {
    if (r < par.r_m1() || r > 3 * par.M) return 0.0;
    return w * q.duh_phi2 + (q.dv_phi2 + q.ang_phi2) / w;
  };
  double lhs = integral_bulk(cache, k, b, band);
  ErrorIntegrals e = error_integrals(cache, k, 0.0, b);
  double rhs = morawetz_rhs(cache, k + 1, b) + e.e_trap;
  return finish("TrapRemoval", lhs, rhs);
}

CheckResult check_r_minus_p(const CommutedCache& cache, const EnergyConfig& cfg,
                            const ButterflyIdx& b) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  cfg.validate(par);
  double p = cfg.p, ps = cfg.p_star(), c = cfg.c_pstar(), M = par.M;
  int k = cfg.k;
  // flux V: (r-M)^{-p}(|du psi|^2+|du phi|^2) + c (r-M)^{2-p*}|phi|^2, du
  LineFn fluxV_reg = [p, M](const NodeData& q, double r, double, double w, bool at_h) {
    return at_h ? 0.0 : std::pow(r - M, -p) * w * (q.duh_psi2 + q.duh_phi2);
  };
  LineFn fluxV_zero = [c, ps, M](const NodeData& q, double r, double A, double, bool at_h) {
    return at_h ? 0.0 : c * A * r * r * std::pow(r - M, -ps) * q.phi2;
  };
  auto fluxV = [&](int j, int ia, int ib) {
    double v = integral_u(cache, k, j, ia, ib, fluxV_reg);
    if (ps > 0)
      v += integral_u_tail(cache, k, j, ia, ib, ps, fluxV_zero);
    else
      v += integral_u(cache, k, j, ia, ib,
                      [c](const NodeData& q, double r, double A, double, bool) {
                        return c * A * r * r * q.phi2;
                      });
    return v;
  };
  double lhs = fluxV(b.j2, b.i2, b.i2p);
  // flux VI: (r-M)^{2-p}(|snabla phi|^2 + |phi|^2), dv
  lhs += integral_v(cache, k, b.i2p, b.j1, b.j2,
                    [p, M](const NodeData& q, double r, double, double, bool) {
                      return std::pow(std::max(r - M, 0.0), 2 - p) *
                             (q.ang_phi2 + q.phi2);
                    });
  // bulk over A
  LineFn bulk_reg = [&par, p, M](const NodeData& q, double r, double A, double w,
                                 bool at_h) {
    if (r > par.r_m1()) return 0.0;
    double s = r - M;
    double val = at_h && p >= 1 ? 0.0 : std::pow(s, 1 - p) * w * (q.duh_psi2 + q.duh_phi2);
    if (p <= 1)
      val += (s > 0 ? std::pow(s, 1 - p) : (p == 1 ? 1.0 : 0.0)) * A * r * r *
             (q.ang_phi2 + q.phi2);
    return val;
  };
  LineFn bulk_sing = [&par, p, M](const NodeData& q, double r, double A, double, bool) {
    if (r > par.r_m1() || p <= 1) return 0.0;
    return std::pow(r - M, 1 - p) * A * r * r * (q.ang_phi2 + q.phi2);
  };
  lhs += integral_bulk(cache, k, b, bulk_reg, &bulk_sing, p - 1);
  ErrorIntegrals e = error_integrals(cache, k, p, b);
  double rhs = fluxV(b.j1, b.i1, b.i2p) + morawetz_rhs(cache, k, b) + e.e_near;
  CheckResult res = finish("RMinusP", lhs, rhs);
  res.notes = "p=" + std::to_string(p);
  return res;
}

CheckResult check_r_p(const CommutedCache& cache, const EnergyConfig& cfg,
                      const ButterflyIdx& b) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  cfg.validate(par);
  double p = cfg.p, ps = cfg.p_star(), c = cfg.c_pstar();
  int k = cfg.k;
  auto fluxIV = [&](int i, int ja, int jb) {
    return integral_v(cache, k, i, ja, jb,
                      [p, ps, c](const NodeData& q, double r, double, double, bool) {
                        return std::pow(r, p) * q.dv_psi2 +
                               c * std::pow(r, ps + 2) * q.dv_phi2 +
                               c * std::pow(r, ps) * q.phi2;
                      });
  };
  double lhs = fluxIV(b.i2, b.j2, b.j2p);
  lhs += integral_u(cache, k, b.j2p, b.i1, b.i2,
                    [p](const NodeData& q, double r, double, double w, bool) {
                      return (std::pow(r, p + 2) * q.ang_phi2 + std::pow(r, p) * q.phi2) /
                             w;
                    });
  LineFn bulk = [&par, p](const NodeData& q, double r, double, double w, bool) {
    if (r < par.Lambda) return 0.0;
    return (std::pow(r, p - 1) * (q.dv_psi2 + q.phi2) +
            std::pow(r, p + 1) * (q.dv_phi2 + q.ang_phi2)) /
           w;
  };
  lhs += integral_bulk(cache, k, b, bulk);
  ErrorIntegrals e = error_integrals(cache, k, p, b);
  double rhs = integral_v(cache, k, b.i1, b.j1, b.j2p,
                          [p](const NodeData& q, double r, double, double, bool) {
                            return std::pow(r, p) * q.dv_psi2;
                          }) +
               morawetz_rhs(cache, k, b) + e.e_far;
  CheckResult res = finish("RP", lhs, rhs);
  res.notes = "p=" + std::to_string(p);
  return res;
}

CheckResult check_multiplier_identity(const Trajectory& tr, FieldName X, int i1, int i2,
                                      int j1, int j2) {
  if (X != FieldName::T && X != FieldName::R)
    throw std::invalid_argument("multiplier identity supports X in {T, R}");
  if (!(0 <= i1 && i1 < i2 && i2 <= tr.nu() && 0 <= j1 && j1 < j2 && j2 < tr.rows()))
    throw std::invalid_argument("multiplier rectangle outside the domain");
  const GeometryCache& geo = tr.geo;
  const BackgroundParams& par = tr.par;
  double sgn_u = X == FieldName::T ? 1.0 : -1.0; // X^uhat = +- w/2, X^v = 1/2
  int nc = tr.ncoef(), ncol = tr.ncol();
  Eigen::RowVectorXd lap(ncol);
  for (int q = 0; q < tr.ncomp; ++q)
    for (int cidx = 0; cidx < nc; ++cidx) {
      int l = int(std::floor(std::sqrt(double(cidx) + 0.5)));
      lap[q * nc + cidx] = -double(l) * (l + 1);
    }
  SourceEval se(tr.spec, par, tr.L, tr.ncomp);
  bool nonlinear = !tr.spec.empty();

  // boundary: int X^uhat [ |duh psi|^2 ]_{v1}^{v2} duh  +  X^v int [ |dv psi|^2 ]_{u1}^{u2} dv
  std::vector<double> xs, fs;
  for (int i = i1; i <= i2; ++i) {
    double d2 = duh_of(tr.psi, geo, i, j2).squaredNorm();
    double d1 = duh_of(tr.psi, geo, i, j1).squaredNorm();
    xs.push_back(geo.uhat[i]);
    fs.push_back(sgn_u * 0.5 * geo.w[i] * 0.5 * (d2 - d1));
  }
  double bnd_u, err;
  trapezoid(xs, fs, bnd_u, err);
  xs.clear();
  fs.clear();
  for (int j = j1; j <= j2; ++j) {
    double d2 = dv_of(tr.psi, geo, i2, j).squaredNorm();
    double d1 = dv_of(tr.psi, geo, i1, j).squaredNorm();
    xs.push_back(geo.v[j]);
    fs.push_back(0.5 * 0.5 * (d2 - d1));
  }
  double bnd_v;
  trapezoid(xs, fs, bnd_v, err);
  double lhs = bnd_u + bnd_v;

  // bulk: iint G . (X^uhat duh psi + X^v dv psi), G the wave-equation rhs
  std::vector<double> rowx, rowf;
  std::vector<double> colx, colf;
  for (int j = j1; j <= j2; ++j) {
    rowx.clear();
    rowf.clear();
    for (int i = i1; i <= i2; ++i) {
      double r = geo.r(i, j), A = geo.A(i, j), w = geo.w[i];
      Eigen::RowVectorXd psi = tr.psi[j].row(i);
      Eigen::RowVectorXd duh = duh_of(tr.psi, geo, i, j);
      Eigen::RowVectorXd dv = dv_of(tr.psi, geo, i, j);
      Eigen::RowVectorXd G =
          (-A * metric_coefficient_deriv(r, par.M) / r) * psi +
          (A / (r * r)) * psi.cwiseProduct(lap);
      if (nonlinear) {
        se.eval(r, A, w, psi, duh, dv);
        G -= r * se.coef_row();
      }
      double integrand = G.dot((sgn_u * 0.5 * w) * duh + 0.5 * dv);
      rowx.push_back(geo.uhat[i]);
      rowf.push_back(integrand);
    }
    double rowval;
    trapezoid(rowx, rowf, rowval, err);
    colx.push_back(geo.v[j]);
    colf.push_back(rowval);
  }
  double rhs;
  trapezoid(colx, colf, rhs, err);

  CheckResult res;
  res.name = X == FieldName::T ? "MultiplierIdentity(T)" : "MultiplierIdentity(R)";
  res.lhs = std::fabs(lhs - rhs);
  res.rhs = std::fabs(bnd_u) + std::fabs(bnd_v) + std::fabs(rhs);
  res.constant = res.rhs > 0 ? res.lhs / res.rhs : 0.0;
  res.violation = !std::isfinite(res.lhs);
  res.notes = "residual";
  return res;
}

Trajectory synthetic_trajectory(const BackgroundParams& par, const GridSpec& grid,
                                int L, int ncomp, uint64_t seed, int npulses) {
  if (grid.reaches_horizon(par))
    throw std::invalid_argument("synthetic fields require a non-horizon grid");
  Trajectory tr;
  tr.par = par;
  tr.grid = grid;
  tr.L = L;
  tr.ncomp = ncomp;
  tr.geo = GeometryCache::build(par, grid);
  int nu = grid.nu, ncol = ncomp * sh_count(L);
  tr.psi.assign(grid.nv + 1, Mat::Zero(nu + 1, ncol));
  CounterRng rng(seed);
  double span = tr.geo.uhat.back();
  double vmax = tr.geo.v.back();
  for (int p = 0; p < npulses; ++p) {
    int l = int(rng.uniform(0, L + 1 - 1e-9));
    int m = int(rng.uniform(-l, l + 1 - 1e-9));
    int comp = int(rng.uniform(0, ncomp - 1e-9));
    int c = comp * sh_count(L) + sh_index(l, std::clamp(m, -l, l));
    double amp = rng.sym();
    double cu = rng.uniform(0.1, 0.9) * span, su = rng.uniform(0.08, 0.35) * span;
    double cv = rng.uniform(0.1, 0.9) * vmax, sv = rng.uniform(0.08, 0.35) * vmax;
    for (int j = 0; j <= grid.nv; ++j) {
      double gv = std::exp(-0.5 * std::pow((tr.geo.v[j] - cv) / sv, 2));
      for (int i = 0; i <= nu; ++i) {
        double gu = std::exp(-0.5 * std::pow((tr.geo.uhat[i] - cu) / su, 2));
        tr.psi[j](i, c) += amp * gu * gv;
      }
    }
  }
  return tr;
}

std::vector<CheckResult> check_hardy_near(const CommutedCache& cache, double p, int j,
                                          const ButterflyIdx& b) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  int k = cache.kmax();
  double M = par.M;
  std::vector<CheckResult> out;
  auto in_A = [&](double r) { return r <= par.r_m1(); };
  auto in_ring = [&](double r) { return r > par.r_m2() && r <= par.r_m1(); };
  if (p < 1) {
    double l1 = 0, r1a = 0, r1b = 0, l2 = 0, r2 = 0;
    l1 = integral_u(cache, k, j, b.i1, row_ihi(b, j),
                    [&](const NodeData& q, double r, double, double w, bool) {
                      return in_A(r) ? std::pow(r - M, 2 - p) * q.phi2 / w : 0.0;
                    });
    r1a = integral_u(cache, k, j, b.i1, row_ihi(b, j),
                     [&](const NodeData& q, double r, double, double w, bool) {
                       return in_A(r) ? std::pow(r - M, -p) * q.dv_psi2 / w : 0.0;
                     });
    r1b = integral_u(cache, k, j, b.i1, row_ihi(b, j),
                     [&](const NodeData& q, double r, double, double w, bool) {
                       return in_ring(r) ? q.phi2 / w : 0.0;
                     });
    out.push_back(finish("HardyNearCone0", (p - 1) * (p - 1) * l1, r1a + r1b));
    l2 = integral_u(cache, k, j, b.i1, row_ihi(b, j),
                    [&](const NodeData& q, double r, double, double w, bool) {
                      return in_A(r) ? std::pow(r - M, -p) * w * q.duh_phi2 : 0.0;
                    });
    r2 = integral_u(cache, k, j, b.i1, row_ihi(b, j),
                    [&](const NodeData& q, double r, double, double w, bool) {
                      return in_A(r) ? std::pow(r - M, -p) * w * q.duh_psi2 +
                                           std::pow(r - M, 2 - p) * q.phi2 / w
                                     : 0.0;
                    });
    out.push_back(finish("HardyNearCone1", l2, r2));
  }
  if (p < 2) {
    LineFn bl = [&](const NodeData& q, double r, double, double w, bool) {
      return in_A(r) ? std::pow(r - M, 3 - p) * q.phi2 / w : 0.0;
    };
    LineFn br1 = [&](const NodeData& q, double r, double, double w, bool) {
      return in_A(r) ? std::pow(r - M, 1 - p) * q.dv_psi2 / w : 0.0;
    };
    LineFn br2 = [&](const NodeData& q, double r, double, double w, bool) {
      return in_ring(r) ? q.phi2 / w : 0.0;
    };
    out.push_back(finish("HardyNearBulk0",
                         (p - 2) * (p - 2) * integral_bulk(cache, k, b, bl),
                         integral_bulk(cache, k, b, br1) + integral_bulk(cache, k, b, br2)));
    LineFn bl2 = [&](const NodeData& q, double r, double, double w, bool) {
      return in_A(r) ? std::pow(r - M, 1 - p) * w * q.duh_phi2 : 0.0;
    };
    LineFn br3 = [&](const NodeData& q, double r, double, double w, bool) {
      return in_A(r) ? std::pow(r - M, 1 - p) * w * q.duh_psi2 +
                           std::pow(r - M, 3 - p) * q.phi2 / w
                     : 0.0;
    };
    out.push_back(finish("HardyNearBulk1", integral_bulk(cache, k, b, bl2),
                         integral_bulk(cache, k, b, br3)));
  }
  return out;
}

std::vector<CheckResult> check_hardy_far(const CommutedCache& cache, double p, int i,
                                         const ButterflyIdx& b) {
  const Trajectory& tr = cache.trajectory();
  const BackgroundParams& par = tr.par;
  int k = cache.kmax();
  double L0 = par.Lambda;
  std::vector<CheckResult> out;
  int jb = i <= b.i2 ? b.j2p : b.j2;
  auto far = [&](double r) { return r >= L0; };
  auto ring = [&](double r) { return r >= L0 && r <= 2 * L0; };
  if (p < 1) {
    double l1 = integral_v(cache, k, i, b.j1, jb,
                           [&](const NodeData& q, double r, double, double, bool) {
                             return far(r) ? std::pow(r, p) * q.phi2 : 0.0;
                           });
    double r1 = integral_v(cache, k, i, b.j1, jb,
                           [&](const NodeData& q, double r, double, double, bool) {
                             return far(r) ? std::pow(r, p) * q.dv_psi2 : 0.0;
                           }) +
                integral_v(cache, k, i, b.j1, jb,
                           [&](const NodeData& q, double r, double, double, bool) {
                             return ring(r) ? q.phi2 : 0.0;
                           });
    out.push_back(finish("HardyFarCone0", (p - 1) * (p - 1) * l1, r1));
    double l2 = integral_v(cache, k, i, b.j1, jb,
                           [&](const NodeData& q, double r, double, double, bool) {
                             return far(r) ? std::pow(r, p + 2) * q.dv_phi2 : 0.0;
                           });
    double r2 = integral_v(cache, k, i, b.j1, jb,
                           [&](const NodeData& q, double r, double, double, bool) {
                             return far(r) ? std::pow(r, p) * (q.dv_psi2 + q.phi2) : 0.0;
                           });
    out.push_back(finish("HardyFarCone1", l2, r2));
  }
  if (p < 2) {
    LineFn bl = [&](const NodeData& q, double r, double, double w, bool) {
      return far(r) ? std::pow(r, p - 1) * q.phi2 / w : 0.0;
    };
    LineFn br1 = [&](const NodeData& q, double r, double, double w, bool) {
      return far(r) ? std::pow(r, p - 1) * q.dv_psi2 / w : 0.0;
    };
    LineFn br2 = [&](const NodeData& q, double r, double, double w, bool) {
      return ring(r) ? q.phi2 / w : 0.0;
    };
    out.push_back(finish("HardyFarBulk0",
                         (p - 2) * (p - 2) * integral_bulk(cache, k, b, bl),
                         integral_bulk(cache, k, b, br1) + integral_bulk(cache, k, b, br2)));
    LineFn bl2 = [&](const NodeData& q, double r, double, double w, bool) {
      return far(r) ? std::pow(r, p + 1) * q.dv_phi2 / w : 0.0;
    };
    LineFn br3 = [&](const NodeData& q, double r, double, double w, bool) {
      return far(r) ? std::pow(r, p - 1) * (q.dv_psi2 + q.phi2) / w : 0.0;
    };
    out.push_back(finish("HardyFarBulk1", integral_bulk(cache, k, b, bl2),
                         integral_bulk(cache, k, b, br3)));
  }
  return out;
}

CheckResult check_interpolation(const std::vector<double>& w,
                                const std::vector<double>& mu, double p1, double p2,
                                double theta) {
  if (w.size() != mu.size()) throw std::invalid_argument("interpolation: size mismatch");
  if (!(theta >= 0 && theta <= 1)) throw std::invalid_argument("interpolation: theta in [0,1]");
  double p = theta * p1 + (1 - theta) * p2;
  double ip = 0, i1 = 0, i2 = 0;
  for (size_t n = 0; n < w.size(); ++n) {
    ip += std::pow(w[n], p) * mu[n];
    i1 += std::pow(w[n], p1) * mu[n];
    i2 += std::pow(w[n], p2) * mu[n];
  }
  double rhs = std::pow(i1, theta) * std::pow(i2, 1 - theta);
  CheckResult res = finish("Interpolation", ip, rhs);
  // Hoelder admits no constant: flag any excess beyond roundoff
  if (ip > rhs * (1 + 1e-12)) res.violation = true;
  return res;
}

} // namespace ern
