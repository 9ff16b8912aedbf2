#include <doctest.h>

#include <cmath>

#include "ern/energies.hpp"
#include "ern/series.hpp"

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

// Trajectory holding an arbitrary smooth field (no equation solved).
Trajectory field_trajectory(const BackgroundParams& par, const GridSpec& grid,
                            double a, double b, double c) {
  Trajectory tr;
  tr.par = par;
  tr.grid = grid;
  tr.L = 0;
  tr.ncomp = 1;
  tr.geo = GeometryCache::build(par, grid);
  for (int j = 0; j <= grid.nv; ++j) {
    Mat s(grid.nu + 1, 1);
    for (int i = 0; i <= grid.nu; ++i)
      s(i, 0) = a + b * tr.geo.uhat[size_t(i)] + c * tr.geo.v[size_t(j)];
    tr.psi.push_back(std::move(s));
  }
  return tr;
}

Trajectory evolved_trajectory(const BackgroundParams& par, const GridSpec& grid,
                              double amp, int l = 0, int m = 0) {
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p;
  p.amplitude = amp;
  p.center = 10.0;
  p.width = 2.0;
  p.l = l;
  p.m = m;
  InitialData data = build_initial_data({p}, par, geo, l, 1);
  return evolve(data, {}, par, grid, {}, 2);
}

} // namespace

TEST_CASE("trapezoid rule: exact on linear data, error estimate works") {
  std::vector<double> x, f;
  for (int i = 0; i <= 64; ++i) {
    x.push_back(0.1 * i);
    f.push_back(3.0 + 2.0 * x.back());
  }
  double val, err;
  trapezoid(x, f, val, err);
  double exact = 3.0 * 6.4 + 6.4 * 6.4; // int (3 + 2x) over [0, 6.4]
  CHECK(val == doctest::Approx(exact).epsilon(1e-12));
  CHECK(err < 1e-10);
  // quadratic data: the estimate is of the order of the true error
  for (size_t i = 0; i < f.size(); ++i) f[i] = x[i] * x[i];
  trapezoid(x, f, val, err);
  double true_err = std::fabs(val - 6.4 * 6.4 * 6.4 / 3.0);
  CHECK(err > 0.2 * true_err);
  CHECK(err < 5.0 * true_err);
}

TEST_CASE("power-law tail integration near an integrable singularity") {
  double sigma = 0.5;
  std::vector<double> x, f;
  int n = 400;
  for (int i = 0; i <= n; ++i) {
    x.push_back(double(i) / n);
    f.push_back(i == n ? 0.0 : std::pow(1.0 - x.back(), -sigma));
  }
  // int_0^1 (1-x)^{-1/2} dx = 2; the plain trapezoid badly undershoots
  double val = integrate_power_tail(x, f, sigma);
  CHECK(val == doctest::Approx(2.0).epsilon(0.02));
  double tv, te;
  trapezoid(x, f, tv, te);
  CHECK(std::fabs(val - 2.0) < std::fabs(tv - 2.0));
}

TEST_CASE("node_data against closed-form derivatives of a linear field") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 40);
  double a = 0.3, b = -0.2, c = 0.15;
  Trajectory tr = field_trajectory(par, grid, a, b, c);
  CommutedCache cache(tr, 0);
  for (int i : {5, 30, grid.nu}) // includes the horizon line
    for (int j : {3, 20, 38}) {
      NodeData nd = node_data(cache, 0, i, j);
      double uh = tr.geo.uhat[size_t(i)], v = tr.geo.v[size_t(j)];
      double r = tr.geo.r(i, j), A = tr.geo.A(i, j);
      double psi = a + b * uh + c * v;
      double phi = psi / r;
      // d_uhat r = -A and d_v r = A w exactly
      double duh_phi = (b + A * phi) / r;
      double dv_phi = (c - A * tr.geo.w[i] * phi) / r;
      CHECK(nd.psi2 == doctest::Approx(psi * psi).epsilon(1e-9));
      CHECK(nd.duh_psi2 == doctest::Approx(b * b).epsilon(1e-7));
      CHECK(nd.dv_psi2 == doctest::Approx(c * c).epsilon(1e-7));
      CHECK(nd.phi2 == doctest::Approx(phi * phi).epsilon(1e-9));
      CHECK(nd.duh_phi2 == doctest::Approx(duh_phi * duh_phi).epsilon(1e-6));
      CHECK(nd.dv_phi2 == doctest::Approx(dv_phi * dv_phi).epsilon(1e-6));
      CHECK(nd.ang_phi2 == 0.0); // l = 0 only
      double Rphi = 0.5 * (dv_phi - tr.geo.w[i] * duh_phi);
      CHECK(nd.Rphi2 == doctest::Approx(Rphi * Rphi).epsilon(1e-6));
    }
}

TEST_CASE("all energies vanish on the zero field and are quadratic") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 100);
  Trajectory zero = field_trajectory(par, grid, 0, 0, 0);
  Trajectory one = evolved_trajectory(par, grid, 0.8);
  Trajectory two = one;
  for (Mat& s : two.psi) s *= 2.0;
  CommutedCache cz(zero, 0), c1(one, 1), c2(two, 1);
  double tau = 12.0;
  for (double p : {0.0, par.delta, 1.0, 2 - par.delta}) {
    for (int k : {0, 1}) {
      EnergyConfig ec{p, k};
      ec.validate(par);
      for (EnergyKind kind : {EnergyKind::OutgoingFlux, EnergyKind::IngoingFlux,
                              EnergyKind::FarBulkDensity, EnergyKind::NearBulkDensity}) {
        CHECK(compute_energy(kind, {p, 0}, cz, tau).value == 0.0);
        double e1 = compute_energy(kind, ec, c1, tau).value;
        double e4 = compute_energy(kind, ec, c2, tau).value;
        CHECK(e1 >= 0);
        if (e1 > 0) CHECK(e4 / e1 == doctest::Approx(4.0).epsilon(1e-10));
      }
    }
  }
  CHECK(compute_energy(EnergyKind::NearBulkNondegenerate, {0, 0}, c1, tau).value >=
        compute_energy(EnergyKind::NearBulkDensity, {0, 0}, c1, tau).value * 0.999);
}

TEST_CASE("energies grow with commutation depth and vary continuously in p") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 100);
  Trajectory tr = evolved_trajectory(par, grid, 1.0);
  CommutedCache cache(tr, 1);
  double tau = 10.0;
  EnergyConfig e0{par.delta, 0}, e1{par.delta, 1};
  CHECK(outgoing_flux(cache, e1, tau).value >= outgoing_flux(cache, e0, tau).value);
  CHECK(ingoing_flux(cache, e1, tau).value >= ingoing_flux(cache, e0, tau).value);
}

TEST_CASE("master energy dominates its constituent fluxes") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 120);
  Trajectory tr = evolved_trajectory(par, grid, 1.0);
  CommutedCache cache(tr, 0);
  EnergyConfig ec{par.delta, 0};
  double t1 = 5.0, t2 = 18.0;
  double X = master_energy(cache, ec, t1, t2);
  CHECK(X >= outgoing_flux(cache, ec, t1).value * (1 - 1e-12));
  CHECK(X >= ingoing_flux(cache, ec, 0.5 * (t1 + t2)).value * (1 - 1e-12));
  CHECK(trapping_integral(cache, 0, t1, t2) >= 0);
  InitialNorm n = initial_norm(cache, 0);
  CHECK(n.value >= n.energy_part * (1 - 1e-12));
  CHECK(n.value >= n.sup_part * (1 - 1e-12));
  CHECK(std::isfinite(n.value));
}

TEST_CASE("cone samples stay inside the domain and reach the horizon") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(60, 100);
  Trajectory tr = evolved_trajectory(par, grid, 1.0);
  CommutedCache cache(tr, 0);
  ConeSample in = sample_ingoing_cone(cache, 0, 8.0);
  REQUIRE(in.size() > 4);
  CHECK(in.horizon_end);
  CHECK(in.r.back() == doctest::Approx(par.M).epsilon(1e-8));
  for (size_t s = 1; s < in.size(); ++s) CHECK(in.coord[s] > in.coord[s - 1]);
  ConeSample out = sample_outgoing_cone(cache, 0, 8.0);
  REQUIRE(out.size() > 4);
  CHECK(out.truncated);
  for (size_t s = 1; s < out.size(); ++s) {
    CHECK(out.coord[s] > out.coord[s - 1]);
    CHECK(out.r[s] >= out.r[s - 1] - 1e-10);
  }
}

TEST_CASE("rate fit recovers an exact power law") {
  std::vector<double> x, y;
  for (int i = 1; i <= 30; ++i) {
    x.push_back(2.0 * i);
    y.push_back(3.7 * std::pow(x.back(), -2.5));
  }
  RateFit f = fit_rate(x, y);
  CHECK(f.n == 30);
  CHECK(f.exponent == doctest::Approx(-2.5).epsilon(1e-10));
  CHECK(f.stderr_ < 1e-10);
  CHECK(std::exp(f.intercept) == doctest::Approx(3.7).epsilon(1e-8));
  // nonpositive samples are skipped, not fatal
  y[4] = 0.0;
  RateFit g = fit_rate(x, y);
  CHECK(g.n == 29);
  CHECK(g.exponent == doctest::Approx(-2.5).epsilon(1e-6));
}

TEST_CASE("tail integral of a known series") {
  Series s;
  s.name = "t";
  for (int i = 0; i <= 100; ++i) {
    s.x.push_back(1.0 + 0.1 * i);
    s.y.push_back(1.0 / s.x.back());
  }
  Series t = tail_integral(s, 2);
  REQUIRE(t.size() == s.size());
  // int_x^11 s^-2 ds = 1/x - 1/11
  for (size_t i = 0; i < t.size(); i += 20)
    CHECK(t.y[i] == doctest::Approx(1.0 / s.x[i] - 1.0 / 11.0).epsilon(1e-3));
  CHECK(t.y.back() == 0.0);
}

TEST_CASE("sup of a constant-phi field") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(40, 60);
  Trajectory tr;
  tr.par = par;
  tr.grid = grid;
  tr.L = 0;
  tr.ncomp = 1;
  tr.geo = GeometryCache::build(par, grid);
  double c0 = 2.0;
  for (int j = 0; j <= grid.nv; ++j) {
    Mat s(grid.nu + 1, 1);
    for (int i = 0; i <= grid.nu; ++i) s(i, 0) = c0 * tr.geo.r(i, j);
    tr.psi.push_back(std::move(s));
  }
  double sup = sup_phi_on_slice(tr, 6.0);
  CHECK(sup == doctest::Approx(c0 / std::sqrt(4 * M_PI)).epsilon(1e-10));
  // phi constant: d_v phi vanishes up to stencil truncation error
  Series nv_ = linfty_near_series(tr, {4.0, 6.0});
  for (double y : nv_.y) CHECK(std::fabs(y) < 1e-3);
}

TEST_CASE("aretakis charge of linear spherical data is conserved on the horizon") {
  BackgroundParams par = params();
  GridSpec grid = small_grid(160, 300, 0.25);
  GeometryCache geo = GeometryCache::build(par, grid);
  InitialPulse p;
  p.leg = InitialPulse::Leg::Ingoing;
  p.shape = InitialPulse::Shape::Ramp;
  p.amplitude = 0.5;
  p.width = 2.0; // must span several uhat cells to be resolved
  InitialData data = build_initial_data({p}, par, geo, 0, 1);
  Trajectory tr = evolve(data, {}, par, grid, {}, 2);
  REQUIRE(!tr.blowup.fired);
  Series H = horizon_series(tr, HorizonField::AretakisH, 0, 0);
  REQUIRE(H.size() > 10);
  double h0 = H.y.front();
  REQUIRE(std::fabs(h0) > 1e-12);
  double drift = 0;
  for (double y : H.y) drift = std::max(drift, std::fabs(y - h0));
  CHECK(drift / std::fabs(h0) < 2e-3);
  // H = Y psi on the horizon
  Series Yp = horizon_series(tr, HorizonField::YPsi, 0, 0);
  for (size_t i = 0; i < H.size(); i += 40)
    CHECK(Yp.y[i] == doctest::Approx(H.y[i]).epsilon(2e-3));
}

TEST_CASE("series kinds carry names and horizon access requires the horizon") {
  BackgroundParams par = params();
  CHECK(horizon_field_name(HorizonField::AretakisH) != "");
  GridSpec grid = small_grid(30, 30);
  grid.uhat_max = par.uhat_H() - 1.0;
  Trajectory tr = field_trajectory(par, grid, 0.1, 0.0, 0.0);
  CHECK_THROWS(horizon_series(tr, HorizonField::Phi, 0, 0));
}
