// End-to-end acceptance: one PASS/FAIL line per criterion, exit code = number
// of failures.  Each criterion states the quantitative target it checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ern/driver.hpp"

using namespace ern;

namespace {

int failures = 0;

void report(int crit, bool ok, const std::string& detail) {
  printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", crit, detail.c_str());
  fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BackgroundParams params() { return BackgroundParams{}; }

GridSpec grid_spec(int nu, int nv, double dv0) {
  GridSpec g;
  g.nu = nu;
  g.nv = nv;
  g.dv0 = dv0;
  return g;
}

InitialPulse gaussian_pulse(double amp = 1.0) {
  InitialPulse p;
  p.leg = InitialPulse::Leg::Outgoing;
  p.shape = InitialPulse::Shape::Gaussian;
  p.amplitude = amp;
  p.center = 10.0;
  p.width = 2.0;
  return p;
}

InitialPulse ingoing_gaussian(double amp, double center, double width) {
  InitialPulse p;
  p.leg = InitialPulse::Leg::Ingoing;
  p.shape = InitialPulse::Shape::Gaussian;
  p.amplitude = amp;
  p.center = center;
  p.width = width;
  return p;
}

InitialPulse ramp_pulse(double amp) {
  InitialPulse p;
  p.leg = InitialPulse::Leg::Ingoing;
  p.shape = InitialPulse::Shape::Ramp;
  p.amplitude = amp;
  p.width = 2.0;
  return p;
}

Trajectory run(const GridSpec& grid, const std::vector<InitialPulse>& pulses,
               const NonlinearitySpec& spec = {}, Thresholds thr = {}) {
  BackgroundParams par = params();
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialData data = build_initial_data(pulses, par, geo, 0, 1);
  return evolve(data, spec, par, grid, thr, 2);
}

double energy00(const Trajectory& tr, double tau) {
  CommutedCache cache(tr, 0);
  EnergyConfig ec{0.0, 0};
  return outgoing_flux(cache, ec, tau).value + ingoing_flux(cache, ec, tau).value;
}

double richardson(const double f[3]) {
  double d1 = std::fabs(f[0] - f[1]), d2 = std::fabs(f[1] - f[2]);
  return (d1 > 0 && d2 > 0) ? std::log2(d1 / d2) : 0.0;
}

std::vector<double> geometric_taus(double lo, double hi) {
  std::vector<double> t;
  for (double x = lo; x <= hi * 1.0001; x *= std::sqrt(2.0)) t.push_back(x);
  return t;
}

double fitted_exponent(const Series& s, double lo, double hi) {
  std::vector<double> x, y;
  for (size_t i = 0; i < s.size(); ++i)
    if (s.x[i] >= lo && s.x[i] <= hi) {
      x.push_back(s.x[i]);
      y.push_back(s.y[i]);
    }
  return fit_rate(x, y).exponent;
}

// ---- criterion 1: Richardson convergence -------------------------------

void criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  // ingoing gaussian: the tau = 50 slice sup sits in the well-resolved
  // mid-field, away from the late-v chart compression at the horizon
  InitialPulse pulse = ingoing_gaussian(1.0, 4.0, 2.0);
  double sup50[3], e20[3];
  for (int lev = 0; lev < 3; ++lev) {
    int f = 1 << lev;
    Trajectory tr = run(grid_spec(150 * f, 120 * f, 0.25 / f), {pulse});
    sup50[lev] = sup_phi_on_slice(tr, 50.0);
  }
  // the energy study runs on a chart truncated short of the horizon: the
  // ingoing-flux integrand has an unresolvable boundary layer once interior
  // nodes drift off the horizon, and the truncated chart has none
  for (int lev = 0; lev < 3; ++lev) {
    int f = 2 << lev;
    GridSpec g = grid_spec(150 * f, 120 * f, 0.25 / f);
    g.uhat_max = params().uhat_H() - 0.5;
    Trajectory tr = run(g, {pulse});
    e20[lev] = energy00(tr, 20.0);
  }
  double o_sup = richardson(sup50), o_e = richardson(e20);
  double dt = seconds_since(t0);
  bool ok = o_sup >= 1.8 && o_sup <= 2.2 && o_e >= 1.8 && o_e <= 2.2 && dt <= 300;
  char buf[256];
  snprintf(buf, sizeof buf,
           "Richardson orders: sup|phi|(tau=50) %.3f, energy(tau=20) %.3f "
           "(target [1.8, 2.2]), %.0fs",
           o_sup, o_e, dt);
  report(1, ok, buf);
}

// ---- criteria 2 and 3: Aretakis conservation and instability -----------

void criterion23() {
  // linear spherical ramp data: nonzero Aretakis charge from the start
  double drift[3] = {0, 0, 0};
  Trajectory ref;
  for (int lev = 0; lev < 3; ++lev) {
    int f = 1 << lev;
    Trajectory tr = run(grid_spec(250 * f, 400 * f, 0.5 / f), {ramp_pulse(0.5)});
    Series H = horizon_series(tr, HorizonField::AretakisH, 0, 0);
    double h0 = H.y.front(), d = 0;
    for (double y : H.y) d = std::max(d, std::fabs(y - h0));
    drift[lev] = d / std::fabs(h0);
    if (lev == 2) ref = std::move(tr);
  }
  double order1 = std::log2(drift[0] / drift[1]);
  double order2 = std::log2(drift[1] / drift[2]);
  // the horizon transport conserves the discrete charge; when every level is
  // already at roundoff the refinement-order ratio carries no information
  bool exact = drift[0] <= 1e-12 && drift[1] <= 1e-12 && drift[2] <= 1e-12;
  bool ok2 = drift[2] <= 1e-6 && (exact || (order1 >= 1.8 && order2 >= 1.8));
  char buf[320];
  if (exact)
    snprintf(buf, sizeof buf,
             "Aretakis charge drift %.2e at reference (target <= 1e-6), "
             "conserved to roundoff at all three levels",
             drift[2]);
  else
    snprintf(buf, sizeof buf,
             "Aretakis charge drift %.2e at reference (target <= 1e-6), "
             "refinement orders %.2f / %.2f (target >= 1.8)",
             drift[2], order1, order2);
  report(2, ok2, buf);

  Series Yp = horizon_series(ref, HorizonField::YPsi, 0, 0);
  Series YYp = horizon_series(ref, HorizonField::YYPsi, 0, 0);
  double vmax = Yp.x.back();
  double lo = 0, hi = 0, n = 0;
  std::vector<double> xs, ys;
  for (size_t i = 0; i < Yp.size(); ++i)
    if (Yp.x[i] >= 0.5 * vmax) {
      double a = std::fabs(Yp.y[i]);
      lo = (n == 0) ? a : std::min(lo, a);
      hi = std::max(hi, a);
      ++n;
      xs.push_back(YYp.x[i]);
      ys.push_back(std::fabs(YYp.y[i]));
    }
  double tail_var = (hi - lo) / hi;
  double growth = fit_rate(xs, ys).exponent;
  bool ok3 = hi > 0 && tail_var <= 0.05 && std::fabs(growth - 1.0) <= 0.1;
  snprintf(buf, sizeof buf,
           "Y psi tail variation %.3f over last dyad (target <= 0.05), "
           "Y^2 psi growth exponent %.3f (target 1.0 +- 0.1)",
           tail_var, growth);
  report(3, ok3, buf);
}

// ---- criterion 4: decay-rate upper bounds ------------------------------

void criterion4() {
  BackgroundParams par = params();
  Trajectory tr = run(grid_spec(400, 460, 0.25), {gaussian_pulse()});
  CommutedCache cache(tr, 0);
  std::vector<double> taus = geometric_taus(20, 200);
  Series e;
  e.name = "energy";
  for (double t : taus) {
    EnergyConfig ec{0.0, 0};
    e.x.push_back(t);
    e.y.push_back(outgoing_flux(cache, ec, t).value + ingoing_flux(cache, ec, t).value);
  }
  double ex_e = fitted_exponent(e, 20, 200);
  double q1 = 1.5 - par.delta, q2 = 2.0;
  double ex_q1 = fitted_exponent(weighted_sup_series(tr, q1, taus), 20, 200);
  double ex_q2 = fitted_exponent(weighted_sup_series(tr, q2, taus), 20, 200);
  bool ok = ex_e <= -2 + par.delta + 0.3 && ex_q1 <= 0.05 &&
            ex_q2 <= 0.5 + par.delta / 2 + 0.1;
  char buf[256];
  snprintf(buf, sizeof buf,
           "exponents: energy %.3f (<= %.3f), weighted sup q=3/2-delta %.3f "
           "(<= 0.05), q=2 %.3f (<= %.3f)",
           ex_e, -2 + par.delta + 0.3, ex_q1, ex_q2, 0.5 + par.delta / 2 + 0.1);
  report(4, ok, buf);
}

// ---- criterion 5: global existence vs finite-time blowup ---------------

void criterion5() {
  auto t0 = std::chrono::steady_clock::now();
  BackgroundParams par = params();
  // small-data null-form run out to tau = 500 (v ~ 255)
  Trajectory wm = run(grid_spec(300, 1040, 0.25), {gaussian_pulse(0.05)},
                      wave_map_spec(par));
  bool no_blowup = !wm.blowup.fired && wm.rows() == wm.grid.nv + 1;
  std::vector<double> taus = geometric_taus(30, 480);
  Series sup = sup_phi_series(wm, taus);
  bool monotone = true;
  for (size_t i = 1; i < sup.size(); ++i)
    if (sup.y[i] > sup.y[i - 1] * (1 + 1e-9)) monotone = false;

  // focusing horizon polynomial: the l = 0 restriction of the wave equation
  // to the horizon closes into the Riccati ODE y' = y^2 + phi^2 - phi'/M in
  // pointwise variables (y = Y phi); integrate it by RK4 from just after the
  // start, driving the zeroth-order terms with the measured horizon phi, and
  // compare the detected blowup time against the ODE blowup time.
  double amp = 0.25;
  Thresholds thr{1e7, 1e4};
  Trajectory ar = run(grid_spec(800, 3200, 0.01), {ramp_pulse(amp)},
                      aretakis_spec(par, 1, 0.5), thr);
  bool fired = ar.blowup.fired;
  double rel = 1e9;
  if (fired) {
    Series Yphi = horizon_series(ar, HorizonField::YPhi, 0, 0);
    Series Phi = horizon_series(ar, HorizonField::Phi, 0, 0);
    double unit = 1.0 / std::sqrt(4.0 * 3.14159265358979323846); // Y00
    size_t i0 = std::min<size_t>(4, Yphi.size() - 1);
    double v0 = Yphi.x[i0], y = unit * Yphi.y[i0];
    auto drive = [&](double v) {
      size_t n = Phi.size(), k = 0;
      if (v >= Phi.x[n - 1]) {
        double ph = unit * Phi.y[n - 1];
        return ph * ph;
      }
      while (k + 2 < n && Phi.x[k + 1] < v) ++k;
      double t = (v - Phi.x[k]) / (Phi.x[k + 1] - Phi.x[k]);
      double ph = unit * ((1 - t) * Phi.y[k] + t * Phi.y[k + 1]);
      double dph = unit * (Phi.y[k + 1] - Phi.y[k]) / (Phi.x[k + 1] - Phi.x[k]);
      return ph * ph - dph / par.M;
    };
    double v = v0, h = 1e-4;
    while (y < thr.theta2 && v < 100) {
      auto f = [&](double vv, double z) { return drive(vv) + z * z; };
      double k1 = f(v, y), k2 = f(v + 0.5 * h, y + 0.5 * h * k1),
             k3 = f(v + 0.5 * h, y + 0.5 * h * k2), k4 = f(v + h, y + h * k3);
      y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      v += h;
    }
    rel = std::fabs(ar.blowup.v - v) / v;
  }
  double dt = seconds_since(t0);
  bool ok = no_blowup && monotone && fired && rel <= 0.05 && dt <= 600;
  char buf[320];
  snprintf(buf, sizeof buf,
           "null-form run to tau=500: %s, sup|phi| monotone after pulse: %s; "
           "focusing blowup %s, Riccati mismatch %.3f (target <= 0.05), %.0fs",
           no_blowup ? "completed" : "FAILED", monotone ? "yes" : "no",
           fired ? "detected" : "MISSING", rel, dt);
  report(5, ok, buf);
}

// ---- criterion 6: identity and inequality suites -----------------------

void criterion6() {
  auto t0 = std::chrono::steady_clock::now();
  BackgroundParams par = params();
  // multiplier identity residual order under refinement
  double resid[2][3];
  for (int lev = 0; lev < 3; ++lev) {
    int f = 1 << lev;
    Trajectory tr = run(grid_spec(60 * f, 100 * f, 0.4 / f), {gaussian_pulse()});
    resid[0][lev] =
        check_multiplier_identity(tr, FieldName::T, 10 * f, 50 * f, 10 * f, 90 * f).lhs;
    resid[1][lev] =
        check_multiplier_identity(tr, FieldName::R, 10 * f, 50 * f, 10 * f, 90 * f).lhs;
  }
  double ord_T = std::min(std::log2(resid[0][0] / resid[0][1]),
                          std::log2(resid[0][1] / resid[0][2]));
  double ord_R = std::min(std::log2(resid[1][0] / resid[1][1]),
                          std::log2(resid[1][1] / resid[1][2]));

  // randomized Hardy + interpolation suites, 100 seeds, zero violations
  GridSpec open = grid_spec(90, 110, 0.4);
  open.uhat_max = par.uhat_H() - 0.05;
  int violations = 0;
  for (int s = 0; s < 100; ++s) {
    Trajectory tr = synthetic_trajectory(par, open, 1, 1, uint64_t(1000 + s));
    CommutedCache cache(tr, 0);
    ButterflyIdx b = make_butterfly(tr, 4.0, 14.0);
    int jmid = (b.j1 + b.j2) / 2, imid = (b.i1 + b.i2) / 2;
    for (double p : {0.3, 0.5, 0.9, 1.5}) {
      for (const CheckResult& c : check_hardy_near(cache, p, jmid, b))
        violations += c.violation;
      for (const CheckResult& c : check_hardy_far(cache, p, imid, b))
        violations += c.violation;
    }
    CounterRng rng{uint64_t(5000 + s), 0};
    std::vector<double> w(48), mu(48);
    for (double& x : w) x = 0.05 + rng.next_double();
    for (double& x : mu) x = rng.next_double();
    violations += check_interpolation(w, mu, 0.3, 1.7, 0.1 + 0.8 * rng.next_double())
                      .violation;
  }

  // inequality checkers on the linear and small-data nonlinear reference runs
  int bad_constants = 0;
  for (int pass = 0; pass < 2; ++pass) {
    NonlinearitySpec spec = pass == 0 ? NonlinearitySpec{} : wave_map_spec(par);
    double amp = pass == 0 ? 1.0 : 0.1;
    Trajectory tr = run(grid_spec(100, 180, 0.35), {gaussian_pulse(amp)}, spec);
    CommutedCache cache(tr, 1);
    ButterflyIdx b = make_butterfly(tr, 6.0, 20.0);
    std::vector<CheckResult> results = {check_t_energy(cache, 0, b),
                                        check_morawetz(cache, 0, b),
                                        check_trap_removal(cache, 0, b)};
    for (double p : {par.delta, 1.0, 2 - par.delta}) {
      EnergyConfig ec{p, 0};
      results.push_back(check_r_minus_p(cache, ec, b));
      results.push_back(check_r_p(cache, ec, b));
    }
    for (const CheckResult& c : results)
      if (c.violation || !std::isfinite(c.constant)) ++bad_constants;
  }
  double dt = seconds_since(t0);
  bool ok = ord_T >= 1.8 && ord_R >= 1.8 && violations == 0 && bad_constants == 0 &&
            dt <= 300;
  char buf[320];
  snprintf(buf, sizeof buf,
           "multiplier residual orders T %.2f, R %.2f (>= 1.8); Hardy/interpolation "
           "violations %d/100 seeds; checker failures %d; %.0fs",
           ord_T, ord_R, violations, bad_constants, dt);
  report(6, ok, buf);
}

// ---- criterion 7: near-region L^2_v L^infty tail -----------------------

void criterion7() {
  BackgroundParams par = params();
  Trajectory tr = run(grid_spec(400, 460, 0.25), {ingoing_gaussian(0.1, 5.0, 2.0)},
                      wave_map_spec(par));
  std::vector<double> taus = geometric_taus(10, 220);
  Series near = linfty_near_series(tr, taus);
  Series tail = tail_integral(near, 2);
  double ex = fitted_exponent(tail, 20, 200);
  double target = -2 + 1.5 * par.delta + 0.3;
  bool ok = !tr.blowup.fired && ex <= target;
  char buf[256];
  snprintf(buf, sizeof buf, "near-region tail exponent %.3f (target <= %.3f)", ex,
           target);
  report(7, ok, buf);
}

// ---- criterion 8: determinism and format stability ---------------------

void criterion8() {
  const char* cfg_text = R"({
    "grid": {"nu": 60, "nv": 80, "dv0": 0.4},
    "initial_data": {"L": 0, "ncomp": 1,
      "pulses": [{"leg": "outgoing", "shape": "gaussian",
                  "amplitude": 1.0, "center": 10.0, "width": 2.0}]},
    "out_dir": "acceptance_out"
  })";
  RunConfig a = parse_config(cfg_text);
  RunConfig b = parse_config(cfg_text);
  bool same_id = a.run_id == b.run_id;
  Trajectory ta = run_evolution(a), tb = run_evolution(b);
  bool same_manifest = manifest_hash(a, ta) == manifest_hash(b, tb);
  bool headers = std::string(kSeriesHeader) == "run_id,kind,p,k,tau,value,err_est,flags" &&
                 std::string(kRatesHeader) ==
                     "run_id,kind,p,k,window_lo,window_hi,exponent,stderr";
  bool ok = same_id && same_manifest && headers;
  char buf[256];
  snprintf(buf, sizeof buf,
           "config id stable: %s, manifest hash stable: %s, CSV schemas golden: %s",
           same_id ? "yes" : "no", same_manifest ? "yes" : "no",
           headers ? "yes" : "no");
  report(8, ok, buf);
}

} // namespace

int main() {
  criterion1();
  criterion23();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  printf("%d of 8 criteria passed\n", 8 - failures);
  return failures;
}
