#include <doctest.h>

#include <cmath>

#include "ern/evolution.hpp"

using namespace ern;

namespace {

BackgroundParams params() { return BackgroundParams{}; }

GridSpec small_grid(int nu = 80, int nv = 120, double dv0 = 0.4) {
  GridSpec g;
  g.nu = nu;
  g.nv = nv;
  g.dv0 = dv0;
  return g;
}

InitialPulse outgoing_pulse(double amp = 1.0) {
  InitialPulse p;
  p.leg = InitialPulse::Leg::Outgoing;
  p.shape = InitialPulse::Shape::Gaussian;
  p.amplitude = amp;
  p.center = 10.0;
  p.width = 2.0;
  return p;
}

} // namespace

TEST_CASE("initial data: outgoing gaussian profile and corner matching") {
  BackgroundParams par = params();
  GridSpec grid = small_grid();
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p = outgoing_pulse(0.7);
  InitialData data = build_initial_data({p}, par, geo, 0, 1);
  REQUIRE(data.outgoing.rows() == grid.nv + 1);
  REQUIRE(data.ingoing.rows() == grid.nu + 1);
  for (int j = 0; j <= grid.nv; j += 13) {
    double x = (geo.v[size_t(j)] - p.center) / p.width;
    double expect = geo.r(0, j) * 0.7 * std::exp(-0.5 * x * x);
    CHECK(data.outgoing(j, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(data.outgoing(0, 0) == doctest::Approx(data.ingoing(0, 0)));
  // the ingoing leg carries the constant-phi extension of the corner value
  double phi0 = data.outgoing(0, 0) / geo.r(0, 0);
  for (int i = 0; i <= grid.nu; i += 17)
    CHECK(data.ingoing(i, 0) == doctest::Approx(geo.r(i, 0) * phi0).epsilon(1e-12));
}

TEST_CASE("initial data rejects out-of-band pulses") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(20, 20);
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p = outgoing_pulse();
  p.l = 2;
  CHECK_THROWS(build_initial_data({p}, par, geo, 1, 1));
}

TEST_CASE("zero data stays zero") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(40, 60);
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialData data = build_initial_data({}, par, geo, 1, 1);
  Trajectory tr = evolve(data, {}, par, grid);
  REQUIRE(tr.rows() == grid.nv + 1);
  double m = 0;
  for (const Mat& s : tr.psi) m = std::max(m, s.cwiseAbs().maxCoeff());
  CHECK(m == 0.0);
  CHECK(!tr.blowup.fired);
}

TEST_CASE("linear evolution is deterministic and bounded") {
  BackgroundParams par = params();
  GridSpec grid = small_grid();
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialData data = build_initial_data({outgoing_pulse()}, par, geo, 0, 1);
  Trajectory a = evolve(data, {}, par, grid, {}, 2);
  Trajectory b = evolve(data, {}, par, grid, {}, 2);
  REQUIRE(a.rows() == b.rows());
  for (int j = 0; j < a.rows(); ++j)
    CHECK((a.psi[size_t(j)] - b.psi[size_t(j)]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(!a.blowup.fired);
  double m = 0;
  for (const Mat& s : a.psi) m = std::max(m, s.cwiseAbs().maxCoeff());
  CHECK(m > 0);
  CHECK(m < 1e3);
}

TEST_CASE("second-order convergence at a shared grid point") {
  BackgroundParams par = params();
  // three levels with aligned nodes: uhat and v spacings both halve
  double probe[3];
  for (int lev = 0; lev < 3; ++lev) {
    int f = 1 << lev;
    GridSpec grid = small_grid(60 * f, 100 * f, 0.4 / f);
    GeometryCache geo = GeometryCache::build(par, grid);
    InitialData data = build_initial_data({outgoing_pulse()}, par, geo, 0, 1);
    Trajectory tr = evolve(data, {}, par, grid, {}, 2);
    probe[lev] = tr.psi[size_t(80 * f)](30 * f, 0);
  }
  double d1 = std::fabs(probe[0] - probe[1]);
  double d2 = std::fabs(probe[1] - probe[2]);
  REQUIRE(d2 > 0);
  double order = std::log2(d1 / d2);
  CHECK(order > 1.6);
  CHECK(order < 2.6);
}

TEST_CASE("higher angular modes evolve without instability") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 80);
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p = outgoing_pulse(0.5);
  p.l = 2;
  p.m = 1;
  InitialData data = build_initial_data({p}, par, geo, 2, 1);
  Trajectory tr = evolve(data, {}, par, grid);
  CHECK(!tr.blowup.fired);
  // energy in the pumped column stays finite and other degrees stay empty
  double off = 0;
  for (const Mat& s : tr.psi) {
    CHECK(std::isfinite(s.cwiseAbs().maxCoeff()));
    off = std::max(off, std::fabs(s(10, sh_index(1, 0))));
  }
  CHECK(off < 1e-12); // linear flow cannot mix degrees
}

TEST_CASE("small-amplitude wave map stays close to the linear flow") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 80);
  GeometryCache geo = GeometryCache::build(par, grid);
  double amp = 1e-3;
  InitialData data = build_initial_data({outgoing_pulse(amp)}, par, geo, 0, 1);
  Trajectory lin = evolve(data, {}, par, grid);
  Trajectory non = evolve(data, wave_map_spec(par), par, grid);
  REQUIRE(lin.rows() == non.rows());
  CHECK(!non.blowup.fired);
  double diff = 0, scale = 0;
  for (int j = 0; j < lin.rows(); ++j) {
    diff = std::max(diff, (lin.psi[size_t(j)] - non.psi[size_t(j)]).cwiseAbs().maxCoeff());
    scale = std::max(scale, lin.psi[size_t(j)].cwiseAbs().maxCoeff());
  }
  CHECK(diff > 0);           // the nonlinearity acts
  CHECK(diff < 0.01 * scale); // but only at quadratic order
}

TEST_CASE("focusing horizon polynomial triggers the blowup detector") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(200, 300, 0.2);
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p;
  p.leg = InitialPulse::Leg::Ingoing;
  p.shape = InitialPulse::Shape::Ramp;
  p.amplitude = 5.0;
  p.width = 2.0;
  InitialData data = build_initial_data({p}, par, geo, 0, 1);
  Trajectory tr = evolve(data, aretakis_spec(par, 1, 0.5), par, grid, {1e4, 1e4});
  CHECK(tr.blowup.fired);
  CHECK(tr.blowup.v > 0);
  CHECK(!tr.blowup.what.empty());
  CHECK(tr.rows() <= grid.nv + 1);
}

TEST_CASE("thresholds clip the march") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(40, 60);
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialData data = build_initial_data({outgoing_pulse(1.0)}, par, geo, 0, 1);
  Thresholds thr;
  thr.theta1 = 1e-6; // absurdly tight: must fire immediately
  Trajectory tr = evolve(data, {}, par, grid, thr);
  CHECK(tr.blowup.fired);
  CHECK(tr.rows() < grid.nv + 1);
}
