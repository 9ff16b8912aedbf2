#include "ern/evolution.hpp"

#include <cmath>
#include <stdexcept>

namespace ern {

namespace {

double pulse_shape(InitialPulse::Shape s, double x) {
  switch (s) {
    case InitialPulse::Shape::Gaussian: return std::exp(-0.5 * x * x);
    case InitialPulse::Shape::Bump: {
      if (std::fabs(x) >= 1) return 0;
      double y = 1 - x * x;
      return y * y * y * y;
    }
    case InitialPulse::Shape::Ramp: return 0; // handled separately
  }
  return 0;
}

// phi profile of a pulse evaluated on its own leg.
double pulse_phi(const InitialPulse& p, const BackgroundParams& par, double leg_r,
                 double leg_v, bool outgoing) {
  if (p.shape == InitialPulse::Shape::Ramp) {
    // Linear growth off the horizon, cut off smoothly beyond r = M + 2*width;
    // gives a clean nonzero slope d_uhat psi at the horizon corner.
    if (outgoing) return 0;
    double s = leg_r - par.M;
    CutoffProfile cut{par.M - 1.0, par.M - 1.0, par.M + p.width, par.M + 2.0 * p.width, 4};
    return p.amplitude * s * cut.eval(leg_r);
  }
  double x = outgoing ? (leg_v - p.center) / p.width
                      : (leg_r - par.M - p.center) / p.width;
  return p.amplitude * pulse_shape(p.shape, x);
}

} // namespace

InitialData build_initial_data(const std::vector<InitialPulse>& pulses,
                               const BackgroundParams& par, const GeometryCache& geo,
                               int L, int ncomp) {
  InitialData data;
  data.L = L;
  data.ncomp = ncomp;
  int nc = sh_count(L);
  int nu = int(geo.uhat.size()) - 1, nv = int(geo.v.size()) - 1;
  data.outgoing = Mat::Zero(nv + 1, ncomp * nc);
  data.ingoing = Mat::Zero(nu + 1, ncomp * nc);
  for (const InitialPulse& p : pulses) {
    if (p.l > L || std::abs(p.m) > p.l || p.comp < 0 || p.comp >= ncomp)
      throw std::invalid_argument("initial data: pulse mode outside the run's bands");
    int c = p.comp * nc + sh_index(p.l, p.m);
    bool outgoing = p.leg == InitialPulse::Leg::Outgoing;
    // Corner phi value, extended as a constant-phi profile along the other
    // leg so the two legs agree exactly at the bifurcation corner.
    double phi0 = outgoing ? pulse_phi(p, par, geo.r(0, 0), 0.0, true)
                           : pulse_phi(p, par, geo.r(0, 0), 0.0, false);
    for (int j = 0; j <= nv; ++j) {
      double r = geo.r(0, j);
      double phi = outgoing ? pulse_phi(p, par, r, geo.v[j], true) : phi0;
      data.outgoing(j, c) += r * phi;
    }
    for (int i = 0; i <= nu; ++i) {
      double r = geo.r(i, 0);
      double phi = outgoing ? phi0 : pulse_phi(p, par, r, 0.0, false);
      data.ingoing(i, c) += r * phi;
    }
  }
  double mismatch = (data.outgoing.row(0) - data.ingoing.row(0)).cwiseAbs().maxCoeff();
  if (mismatch > 0)
    throw std::runtime_error("initial data: corner mismatch");
  return data;
}

namespace {

struct Kernel {
  const BackgroundParams& par;
  const NonlinearitySpec& spec;
  int L, ncomp, ncoef, ncol;
  Eigen::RowVectorXd lap; // -l(l+1) per column
  bool nonlinear;
  const SphereGrid* sg = nullptr;
  Mat G[3];          // rotation operators on coefficients
  Mat vphi, vduh, vdv, vg[3], S; // collocation work, npts x ncomp

  Kernel(const BackgroundParams& p, const NonlinearitySpec& sp, int Lband, int nc)
      : par(p), spec(sp), L(Lband), ncomp(nc), ncoef(sh_count(Lband)),
        ncol(nc * sh_count(Lband)), nonlinear(!sp.empty()) {
    lap.resize(ncol);
    for (int q = 0; q < ncomp; ++q)
      for (int l = 0; l <= L; ++l)
        for (int m = -l; m <= l; ++m)
          lap[q * ncoef + sh_index(l, m)] = -double(l) * (l + 1);
    if (nonlinear) {
      sg = &padded_grid(L);
      for (int i = 0; i < 3; ++i) {
        G[i].resize(ncoef, ncoef);
        Vec e = Vec::Zero(ncoef);
        for (int c = 0; c < ncoef; ++c) {
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
    }
  }

  // dP and dQ are the cell averages of A D'(r)/r and A/r^2 (exact radial
  // integrals divided by the uhat width); r, A, w only feed the source.
  void rhs(double r, double A, double w, double dP, double dQ,
           const Eigen::RowVectorXd& psic, const Eigen::RowVectorXd& duh,
           const Eigen::RowVectorXd& dv, Eigen::RowVectorXd& out) {
    double D = A * w;
    out = -dP * psic + dQ * psic.cwiseProduct(lap);
    if (!nonlinear) return;
    Eigen::RowVectorXd phic = psic / r;
    Eigen::RowVectorXd duhphi = (duh + A * phic) / r;
    Eigen::RowVectorXd dvphi = (dv - D * phic) / r;
    for (int q = 0; q < ncomp; ++q) {
      auto seg = phic.segment(q * ncoef, ncoef).transpose();
      vphi.col(q) = sg->B * seg;
      vduh.col(q) = sg->B * duhphi.segment(q * ncoef, ncoef).transpose();
      vdv.col(q) = sg->B * dvphi.segment(q * ncoef, ncoef).transpose();
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
    for (int q = 0; q < ncomp; ++q)
      out.segment(q * ncoef, ncoef) -= r * (sg->Bw * S.col(q)).transpose();
  }
};

} // namespace

BlowupSignal detect_blowup(const Trajectory& tr, int j, const Thresholds& thr) {
  BlowupSignal sig;
  const Mat& row = tr.psi[j];
  if (!row.allFinite()) {
    for (int i = 0; i < row.rows(); ++i)
      if (!row.row(i).allFinite()) {
        sig = {true, i, j, tr.geo.v[j], "non-finite value"};
        return sig;
      }
  }
  int nc = tr.ncoef();
  const double l2sup = (tr.L + 1) / std::sqrt(4.0 * 3.14159265358979323846);
  double coefmax = row.cwiseAbs().maxCoeff();
  if (coefmax * std::sqrt(double(nc)) * l2sup >= thr.theta1) {
    const SphereGrid& g = unit_grid(tr.L);
    for (int i = 0; i < row.rows(); ++i)
      for (int q = 0; q < tr.ncomp; ++q) {
        Vec vals = g.B * row.row(i).segment(q * nc, nc).transpose();
        if (vals.cwiseAbs().maxCoeff() > thr.theta1)
          return {true, i, j, tr.geo.v[j], "sup|psi| threshold"};
      }
  }
  if (tr.geo.horizon && row.rows() >= 3) {
    int nu = int(row.rows()) - 1;
    double h = tr.geo.duhat;
    // Y phi = -d_uhat phi on the horizon (A = 1), one-sided O(h^2) stencil.
    Eigen::RowVectorXd phiN = row.row(nu) / tr.par.M;
    Eigen::RowVectorXd phi1 = row.row(nu - 1) / tr.geo.r(nu - 1, j);
    Eigen::RowVectorXd phi2 = row.row(nu - 2) / tr.geo.r(nu - 2, j);
    Eigen::RowVectorXd yphi = -(3 * phiN - 4 * phi1 + phi2) / (2 * h);
    if (yphi.cwiseAbs().maxCoeff() * std::sqrt(double(nc)) * l2sup >= thr.theta2) {
      const SphereGrid& g = unit_grid(tr.L);
      for (int q = 0; q < tr.ncomp; ++q) {
        Vec vals = g.B * yphi.segment(q * nc, nc).transpose();
        if (vals.cwiseAbs().maxCoeff() > thr.theta2)
          return {true, nu, j, tr.geo.v[j], "horizon |Y phi| threshold"};
      }
    }
  }
  return sig;
}

Trajectory evolve(const InitialData& data, const NonlinearitySpec& spec,
                  const BackgroundParams& par, const GridSpec& grid,
                  const Thresholds& thr, int correctors) {
  par.validate();
  auto rep = validate(spec, par);
  if (!rep.ok) throw std::invalid_argument("nonlinearity spec invalid: " + rep.violations[0]);

  Trajectory tr;
  tr.par = par;
  tr.grid = grid;
  tr.spec = spec;
  tr.L = data.L;
  tr.ncomp = data.ncomp;
  tr.geo = GeometryCache::build(par, grid);

  int nu = grid.nu, nv = grid.nv, ncol = tr.ncol();
  if (data.outgoing.rows() != nv + 1 || data.ingoing.rows() != nu + 1 ||
      data.outgoing.cols() != ncol)
    throw std::invalid_argument("evolve: initial data does not match the grid");

  Kernel ker(par, spec, tr.L, tr.ncomp);
  const double hu = tr.geo.duhat;
  const double M = par.M;
  // antiderivatives of D'/r and 1/r^2, and their (r - M)-weighted moments
  auto P = [M](double r) { return -M / (r * r) + (2.0 / 3.0) * M * M / (r * r * r); };
  auto PP = [M](double r) {
    return 2 * M * (-1 / r + M / (r * r) - M * M / (3 * r * r * r));
  };
  auto Qb = [M](double r) { return std::log(r) + M / r; };

  /* The cell touching the horizon needs care: its radial span [M, R] widens
   * like v while the grid sees it as one uhat cell, so a corner average of
   * psi is not a usable cell value once R - M is large.  Instead integrate
   * the potential terms against a linear-in-r model of psi through the
   * horizon value and the outer node value.  The regular static l = 0 field
   * is psi = c r + d, which the model reproduces exactly, so the quadrature
   * is faithful in the quasi-stationary near region and reduces to the usual
   * cell rule while the strip is thin.  The integrals are linear in psi_H, so
   * the midpoint update solves in closed form; a fixed-point pass would
   * diverge for high l once the strip is wide.
   *
   * eta = d_uhat psi on the horizon is transported separately (restricted
   * wave equation, d_v eta = M^{-2} lap psi - M S) purely for the blowup
   * monitor: the one-sided stencil in detect_blowup goes quiet once the
   * neighbouring nodes drift off the horizon.
   */
  bool hz = tr.geo.horizon && nu >= 3;
  Eigen::RowVectorXd etaH, rateH;
  if (hz) {
    const Mat& d0 = data.ingoing;
    etaH = (3 * d0.row(nu) - 4 * d0.row(nu - 1) + d0.row(nu - 2)) / (2 * hu);
  }

  tr.psi.push_back(data.ingoing);
  Eigen::RowVectorXd duh(ncol), dvv(ncol), psic(ncol), rhs(ncol), N(ncol);
  auto horizon_rate = [&](const Eigen::RowVectorXd& psiH, const Eigen::RowVectorXd& dvH,
                          const Eigen::RowVectorXd& eta) {
    ker.rhs(M, 1.0, 0.0, 0.0, 0.0, psiH, eta, dvH, rhs); // only -M S survives
    return Eigen::RowVectorXd(psiH.cwiseProduct(ker.lap) / (M * M) + rhs);
  };
  const double l2sup = (tr.L + 1) / std::sqrt(4.0 * 3.14159265358979323846);
  for (int j = 1; j <= nv; ++j) {
    double hv = tr.geo.v[j] - tr.geo.v[j - 1];
    const Mat& prev = tr.psi[j - 1];
    Mat cur(nu + 1, ncol);
    cur.row(0) = data.outgoing.row(j);
    for (int i = 1; i <= nu; ++i) {
      double rc = 0.25 * (tr.geo.r(i, j) + tr.geo.r(i, j - 1) + tr.geo.r(i - 1, j) +
                          tr.geo.r(i - 1, j - 1));
      double Ac = 0.25 * (tr.geo.A(i, j) + tr.geo.A(i, j - 1) + tr.geo.A(i - 1, j) +
                          tr.geo.A(i - 1, j - 1));
      double wc = metric_coefficient(par.Lambda - 0.5 * (tr.geo.uhat[i] + tr.geo.uhat[i - 1]),
                                     par.M);
      // exact uhat integrals of the A-weighted coefficients across the cell:
      // d_uhat r = -A turns int A f(r) duhat into int f(r) dr, which keeps the
      // update consistent even when one cell spans a wide radial range (the
      // near-horizon layer of the chart thins like M^2/v)
      double ra = 0.5 * (tr.geo.r(i - 1, j) + tr.geo.r(i - 1, j - 1));
      double rb = 0.5 * (tr.geo.r(i, j) + tr.geo.r(i, j - 1));
      double dP = (P(ra) - P(rb)) / hu;
      double dQ = (1 / rb - 1 / ra) / hu;
      auto Sc = prev.row(i - 1);
      auto Ec = cur.row(i - 1);
      auto Wc = prev.row(i);
      if (hz && i == nu) {
        double R = ra;
        double aP = P(R) - P(M), aPP = PP(R) - PP(M);
        double aQ = 1 / M - 1 / R, aQb = Qb(R) - Qb(M);
        double s = R - M;
        Eigen::RowVectorXd psiR = 0.5 * (prev.row(nu - 1) + cur.row(nu - 1));
        // strip integral = cvec . psi_H + rpart with psi_H at the v midpoint
        Eigen::RowVectorXd cvec =
            hv * (-(aP - aPP / s) + (aQ - aQb / s) * ker.lap.array()).matrix();
        Eigen::RowVectorXd rpart =
            hv * (-(aPP / s) * psiR + (aQb / s) * psiR.cwiseProduct(ker.lap));
        auto solve_row = [&]() {
          N = (Wc + Ec - Sc + rpart + 0.5 * cvec.cwiseProduct(Wc) + hu * hv * rhs)
                  .array() /
              (1.0 - 0.5 * cvec.array());
        };
        duh = (Wc - Sc) / hu;
        dvv = (Ec - Sc) / hv;
        psic = 0.5 * (Wc + Ec);
        ker.rhs(rc, Ac, wc, 0.0, 0.0, psic, duh, dvv, rhs); // source only
        solve_row();
        for (int pass = 0; pass < correctors; ++pass) {
          duh = ((N + Wc) - (Ec + Sc)) / (2 * hu);
          dvv = ((N + Ec) - (Wc + Sc)) / (2 * hv);
          psic = 0.25 * (N + Wc + Ec + Sc);
          ker.rhs(rc, Ac, wc, 0.0, 0.0, psic, duh, dvv, rhs);
          solve_row();
        }
        cur.row(i) = N;
        Eigen::RowVectorXd dvH = (N - Wc) / hv;
        if (j == 1) rateH = horizon_rate(Wc, dvH, etaH);
        Eigen::RowVectorXd rate1 = horizon_rate(N, dvH, etaH + hv * rateH);
        etaH += 0.5 * hv * (rateH + rate1);
        rateH = rate1;
        continue;
      }
      // predictor: one-sided center estimates
      duh = (Wc - Sc) / hu;
      dvv = (Ec - Sc) / hv;
      psic = 0.5 * (Wc + Ec);
      ker.rhs(rc, Ac, wc, dP, dQ, psic, duh, dvv, rhs);
      N = Wc + Ec - Sc + hu * hv * rhs;
      for (int pass = 0; pass < correctors; ++pass) {
        duh = ((N + Wc) - (Ec + Sc)) / (2 * hu);
        dvv = ((N + Ec) - (Wc + Sc)) / (2 * hv);
        psic = 0.25 * (N + Wc + Ec + Sc);
        ker.rhs(rc, Ac, wc, dP, dQ, psic, duh, dvv, rhs);
        N = Wc + Ec - Sc + hu * hv * rhs;
      }
      cur.row(i) = N;
    }
    tr.psi.push_back(std::move(cur));
    BlowupSignal sig = detect_blowup(tr, j, thr);
    if (!sig.fired && hz) {
      // transported horizon |Y phi| against theta2 (the one-sided stencil in
      // detect_blowup goes quiet once the neighbouring nodes drift off)
      Eigen::RowVectorXd yphi = -(etaH + tr.psi[j].row(nu) / M) / M;
      int nc = tr.ncoef();
      if (yphi.cwiseAbs().maxCoeff() * std::sqrt(double(nc)) * l2sup >= thr.theta2) {
        const SphereGrid& g = unit_grid(tr.L);
        for (int q = 0; q < tr.ncomp && !sig.fired; ++q) {
          Vec vals = g.B * yphi.segment(q * nc, nc).transpose();
          if (vals.cwiseAbs().maxCoeff() > thr.theta2)
            sig = {true, nu, j, tr.geo.v[j], "horizon |Y phi| threshold"};
        }
      }
    }
    if (sig.fired) {
      tr.blowup = sig;
      break;
    }
  }
  return tr;
}

} // namespace ern
