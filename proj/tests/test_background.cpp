#include <doctest.h>

#include <cmath>

#include "ern/background.hpp"
#include "ern/grid.hpp"

using namespace ern;

static BackgroundParams params() { return BackgroundParams{}; }

TEST_CASE("metric coefficient and derivative") {
  BackgroundParams par = params();
  CHECK(metric_coefficient(par.M, par.M) == 0.0);
  CHECK(metric_coefficient(2 * par.M, par.M) == doctest::Approx(0.25));
  // D' against a central difference of D
  for (double r : {1.1, 1.5, 2.0, 5.0, 50.0, 150.0}) {
    double h = 1e-6 * r;
    double fd = (metric_coefficient(r + h, par.M) - metric_coefficient(r - h, par.M)) / (2 * h);
    CHECK(metric_coefficient_deriv(r, par.M) == doctest::Approx(fd).epsilon(1e-7));
    Potential p = potential(r, par);
    CHECK(p.D == metric_coefficient(r, par.M));
    CHECK(p.Dp == metric_coefficient_deriv(r, par.M));
  }
}

TEST_CASE("tortoise coordinate: anchor, monotonicity, derivative 1/D") {
  BackgroundParams par = params();
  CHECK(tortoise(2.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  for (double r : {1.2, 1.7, 3.0, 10.0, 100.0}) {
    double h = 1e-5;
    double fd = (tortoise(r + h, par.M) - tortoise(r - h, par.M)) / (2 * h);
    CHECK(fd == doctest::Approx(1.0 / metric_coefficient(r, par.M)).epsilon(1e-6));
  }
  CHECK(tortoise(1.5, 1.0) < tortoise(1.6, 1.0));
}

TEST_CASE("radius_from_tortoise inverts tortoise") {
  BackgroundParams par = params();
  for (double r : {1.0 + 1e-6, 1.01, 1.5, 2.0, 7.0, 100.0, 400.0}) {
    double rs = tortoise(r, par.M);
    double back = radius_from_tortoise(rs, par);
    CHECK(back == doctest::Approx(r).epsilon(1e-10));
  }
}

TEST_CASE("regularized chart maps") {
  BackgroundParams par = params();
  CHECK(u_of_uhat(0.0, par) == doctest::Approx(0.0));
  CHECK(regular_speed(par.uhat_H(), par) == doctest::Approx(0.0));
  for (double uhat : {0.1, 10.0, 50.0, 95.0}) {
    double u = u_of_uhat(uhat, par);
    CHECK(uhat_of_u(u, par) == doctest::Approx(uhat).epsilon(1e-9));
    // du/duhat = 1/w
    double h = 1e-6;
    double fd = (u_of_uhat(uhat + h, par) - u_of_uhat(uhat - h, par)) / (2 * h);
    CHECK(fd == doctest::Approx(1.0 / regular_speed(uhat, par)).epsilon(1e-5));
  }
}

TEST_CASE("double-null radius and tau foliation") {
  BackgroundParams par = params();
  CHECK(radius_from_double_null(0, 0, par) == doctest::Approx(par.Lambda).epsilon(1e-12));
  CHECK(radius_from_double_null(0, 5, par) > par.Lambda);
  CHECK(radius_from_double_null(5, 0, par) < par.Lambda);
  double sq = 2 * std::sqrt(metric_coefficient(par.Lambda, par.M));
  CHECK(tau_of_uv(3.0, 7.0, par) == doctest::Approx(1 + sq * 3.0));
  CHECK(tau_of_uv(9.0, 7.0, par) == doctest::Approx(1 + sq * 7.0));
  double tau = 23.0;
  double g = gamma_coordinate(tau, par);
  CHECK(tau_of_uv(g, g, par) == doctest::Approx(tau).epsilon(1e-12));
}

TEST_CASE("vector field coefficients in both charts") {
  BackgroundParams par = params();
  double uhat = 40.0;
  double w = regular_speed(uhat, par);
  double r = 3.0, A = metric_coefficient(r, par.M) / w;
  VectorCoeffs T = vector_field_coefficients(FieldName::T, Chart::RegularizedNull, r, uhat, A, par);
  CHECK(T.c1 == doctest::Approx(0.5 * w));
  CHECK(T.c2 == doctest::Approx(0.5));
  VectorCoeffs R = vector_field_coefficients(FieldName::R, Chart::RegularizedNull, r, uhat, A, par);
  CHECK(R.c1 == doctest::Approx(-0.5 * w));
  CHECK(R.c2 == doctest::Approx(0.5));
  VectorCoeffs Y = vector_field_coefficients(FieldName::Y, Chart::RegularizedNull, r, uhat, A, par);
  CHECK(Y.c1 == doctest::Approx(-1.0 / A));
  CHECK(Y.c2 == doctest::Approx(0.0));
  VectorCoeffs Td = vector_field_coefficients(FieldName::T, Chart::DoubleNull, r, uhat, A, par);
  CHECK(Td.c1 == doctest::Approx(0.5));
  CHECK(Td.c2 == doctest::Approx(0.5));
}

TEST_CASE("parameter validation") {
  BackgroundParams par = params();
  CHECK_NOTHROW(par.validate());
  BackgroundParams bad = par;
  bad.delta = 0.02; // outside (0, 1/100)
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = par;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = par;
  bad.Lambda = 50; // < 100 M
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = par;
  bad.r0 = 2.5; // not inside (M, 2M)
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = par;
  bad.r1 = 1.9; // must exceed 2M
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("region classification") {
  BackgroundParams par = params();
  RegionTag t = classify_region(par.r_m2(), par);
  CHECK(t.near_a);
  CHECK(t.near_a_prime);
  t = classify_region(0.5 * (par.r_m2() + par.r_m1()), par);
  CHECK(t.near_a);
  CHECK(!t.near_a_prime);
  t = classify_region(par.Lambda, par);
  CHECK(t.below_lambda);
  CHECK(t.above_lambda);
  CHECK(in_band(2.0, 1.5, 2.5));
  CHECK(!in_band(3.0, 1.5, 2.5));
}

TEST_CASE("geometry cache matches closed forms") {
  BackgroundParams par = params();
  GridSpec grid;
  grid.nu = 60;
  grid.nv = 40;
  grid.dv0 = 0.5;
  GeometryCache geo = GeometryCache::build(par, grid);
  CHECK(geo.horizon);
  CHECK(geo.uhat.back() == doctest::Approx(par.uhat_H()));
  // r(uhat, 0) = Lambda - uhat exactly, A = D/w on v = 0
  for (int i = 0; i <= grid.nu; i += 7) {
    CHECK(geo.r(i, 0) == doctest::Approx(par.Lambda - geo.uhat[size_t(i)]).epsilon(1e-12));
    if (i < grid.nu) {
      double expect = metric_coefficient(geo.r(i, 0), par.M) / geo.w[i];
      CHECK(geo.A(i, 0) == doctest::Approx(expect).epsilon(1e-10));
    }
  }
  // horizon line: r = M, A = 1 for all v
  for (int j = 0; j <= grid.nv; j += 9) {
    CHECK(geo.r(grid.nu, j) == doctest::Approx(par.M).epsilon(1e-10));
    CHECK(geo.A(grid.nu, j) == doctest::Approx(1.0).epsilon(1e-8));
  }
  // interior nodes agree with the double-null closed form
  for (int i : {10, 30, 50})
    for (int j : {5, 20, 40}) {
      double u = u_of_uhat(geo.uhat[size_t(i)], par);
      double expect = radius_from_double_null(u, geo.v[size_t(j)], par);
      CHECK(geo.r(i, j) == doctest::Approx(expect).epsilon(1e-8));
    }
}
