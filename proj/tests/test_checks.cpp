#include <doctest.h>

#include <cmath>

#include "ern/checks.hpp"

using namespace ern;

namespace {

BackgroundParams params() { return BackgroundParams{}; }

GridSpec horizon_grid(int nu = 80, int nv = 140, double dv0 = 0.4) {
  GridSpec g;
  g.nu = nu;
  g.nv = nv;
  g.dv0 = dv0;
  return g;
}

GridSpec open_grid(const BackgroundParams& par, int nu = 80, int nv = 120) {
  GridSpec g = horizon_grid(nu, nv);
  g.uhat_max = par.uhat_H() - 0.05; // stop just short of the horizon
  return g;
}

Trajectory linear_run(const BackgroundParams& par, const GridSpec& grid, double amp = 1.0,
                      const NonlinearitySpec& spec = {}) {
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p;
  p.amplitude = amp;
  p.center = 10.0;
  p.width = 2.0;
  InitialData data = build_initial_data({p}, par, geo, 0, 1);
  return evolve(data, spec, par, grid, {}, 2);
}

} // namespace

TEST_CASE("butterfly region snapping") {
  BackgroundParams par = params();
  Trajectory tr = linear_run(par, horizon_grid());
  ButterflyIdx b = make_butterfly(tr, 6.0, 20.0);
  CHECK(b.i1 < b.i2);
  CHECK(b.i2 < b.i2p);
  CHECK(b.j1 < b.j2);
  CHECK(b.j2 < b.j2p);
  CHECK(b.i2p <= tr.nu());
  CHECK(b.j2p < tr.rows());
  // a collapsed pair of cones is rejected
  CHECK_THROWS(make_butterfly(tr, 6.0, 6.0));
}

TEST_CASE("multiplier identity: small residual, second-order convergence") {
  BackgroundParams par = params();
  double resid[2][3];
  for (int lev = 0; lev < 3; ++lev) {
    int f = 1 << lev;
    Trajectory tr = linear_run(par, horizon_grid(60 * f, 100 * f, 0.4 / f));
    int idx = 0;
    for (FieldName X : {FieldName::T, FieldName::R}) {
      CheckResult c =
          check_multiplier_identity(tr, X, 10 * f, 50 * f, 10 * f, 90 * f);
      CHECK(!c.violation);
      CHECK(c.rhs > 0);
      CHECK(c.lhs < 0.05 * c.rhs); // the discrete identity nearly closes
      resid[idx++][lev] = c.lhs;
    }
  }
  for (int idx = 0; idx < 2; ++idx) {
    double order = std::log2(resid[idx][0] / resid[idx][1]);
    double order2 = std::log2(resid[idx][1] / resid[idx][2]);
    CHECK(order > 1.5);
    CHECK(order2 > 1.5);
  }
}

TEST_CASE("energy inequalities hold with finite constants on a linear run") {
  BackgroundParams par = params();
  Trajectory tr = linear_run(par, horizon_grid(100, 180, 0.35));
  CommutedCache cache(tr, 1);
  ButterflyIdx b = make_butterfly(tr, 6.0, 20.0);
  for (const CheckResult& c :
       {check_t_energy(cache, 0, b), check_morawetz(cache, 0, b),
        check_trap_removal(cache, 0, b)}) {
    CHECK(!c.violation);
    CHECK(c.rhs > 0);
    CHECK(std::isfinite(c.constant));
    CHECK(c.constant > 0);
  }
  for (double p : {par.delta, 1.0, 2 - par.delta}) {
    EnergyConfig ec{p, 0};
    CheckResult cm = check_r_minus_p(cache, ec, b);
    CHECK(!cm.violation);
    CHECK(std::isfinite(cm.constant));
    CheckResult cp = check_r_p(cache, ec, b);
    CHECK(!cp.violation);
    CHECK(std::isfinite(cp.constant));
  }
  // linear run: every nonlinear error integral vanishes identically
  ErrorIntegrals e = error_integrals(cache, 0, 1.0, b);
  CHECK(e.e_T == 0.0);
  CHECK(e.e_Z == 0.0);
  CHECK(e.e_trap == 0.0);
  CHECK(e.e_near == 0.0);
  CHECK(e.e_far == 0.0);
}

TEST_CASE("nonlinear runs feed the error integrals and class magnitudes") {
  BackgroundParams par = params();
  NonlinearitySpec wm = wave_map_spec(par);
  Trajectory tr = linear_run(par, horizon_grid(80, 140), 0.1, wm);
  REQUIRE(!tr.blowup.fired);
  CommutedCache cache(tr, 0);
  ButterflyIdx b = make_butterfly(tr, 6.0, 18.0);
  ErrorIntegrals e = error_integrals(cache, 0, 1.0, b);
  CHECK(e.e_T > 0);
  CHECK(e.e_Z > 0);
  CHECK(std::isfinite(e.e_near));
  CHECK(std::isfinite(e.e_far));
  auto mags = source_class_magnitudes(tr, b);
  CHECK(!mags.empty());
  double total = 0;
  for (auto& [name, mag] : mags) {
    CHECK(!name.empty());
    CHECK(mag >= 0);
    total += mag;
  }
  CHECK(total > 0);
  // the inequalities still close for small data
  CheckResult c = check_t_energy(cache, 0, b);
  CHECK(!c.violation);
  CHECK(std::isfinite(c.constant));
}

TEST_CASE("synthetic fields are deterministic per seed") {
  BackgroundParams par = params();
  GridSpec grid = open_grid(par, 50, 60);
  Trajectory a = synthetic_trajectory(par, grid, 2, 1, 42);
  Trajectory b = synthetic_trajectory(par, grid, 2, 1, 42);
  Trajectory c = synthetic_trajectory(par, grid, 2, 1, 43);
  REQUIRE(a.rows() == b.rows());
  double same = 0, diff = 0;
  for (int j = 0; j < a.rows(); ++j) {
    same = std::max(same, (a.psi[size_t(j)] - b.psi[size_t(j)]).cwiseAbs().maxCoeff());
    diff = std::max(diff, (a.psi[size_t(j)] - c.psi[size_t(j)]).cwiseAbs().maxCoeff());
    CHECK(std::isfinite(a.psi[size_t(j)].cwiseAbs().maxCoeff()));
  }
  CHECK(same == 0.0);
  CHECK(diff > 0.0);
}

TEST_CASE("hardy suites hold on random smooth fields") {
  BackgroundParams par = params();
  GridSpec grid = open_grid(par, 90, 110);
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
    Trajectory tr = synthetic_trajectory(par, grid, 1, 1, seed);
    CommutedCache cache(tr, 0);
    ButterflyIdx b = make_butterfly(tr, 4.0, 14.0);
    int jmid = (b.j1 + b.j2) / 2, imid = (b.i1 + b.i2) / 2;
    for (double p : {0.3, 0.5, 0.9, 1.5}) {
      auto near = check_hardy_near(cache, p, jmid, b);
      auto far = check_hardy_far(cache, p, imid, b);
      CHECK(!near.empty());
      CHECK(!far.empty());
      for (const CheckResult& c : near) {
        INFO(c.name, " p=", p, " seed=", seed);
        CHECK(!c.violation);
        CHECK(std::isfinite(c.lhs));
        CHECK(std::isfinite(c.rhs));
      }
      for (const CheckResult& c : far) {
        INFO(c.name, " p=", p, " seed=", seed);
        CHECK(!c.violation);
      }
    }
    // cone-form count depends on p: the p < 1 forms drop out at p = 1.5
    CHECK(check_hardy_near(cache, 0.5, jmid, b).size() >
          check_hardy_near(cache, 1.5, jmid, b).size());
  }
}

TEST_CASE("interpolation inequality: equality case and random suite") {
  std::vector<double> w1(40, 1.0), mu(40);
  CounterRng rng{7, 0};
  for (double& x : mu) x = rng.next_double();
  CheckResult eq = check_interpolation(w1, mu, 0.5, 1.5, 0.5);
  CHECK(!eq.violation);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12)); // w = 1: equality
  for (int s = 0; s < 50; ++s) {
    std::vector<double> w(40);
    CounterRng r{uint64_t(100 + s), 0};
    for (double& x : w) x = 0.01 + r.next_double();
    double theta = 0.05 + 0.9 * r.next_double();
    CheckResult c = check_interpolation(w, mu, 0.3, 1.8, theta);
    INFO("seed ", s);
    CHECK(!c.violation);
    CHECK(c.lhs <= c.rhs * (1 + 1e-12));
  }
}
