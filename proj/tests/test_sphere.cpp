#include <doctest.h>

#include <cmath>

#include "ern/rng.hpp"
#include "ern/sphere.hpp"

using namespace ern;

TEST_CASE("index layout") {
  CHECK(sh_index(0, 0) == 0);
  CHECK(sh_index(1, -1) == 1);
  CHECK(sh_index(1, 0) == 2);
  CHECK(sh_index(1, 1) == 3);
  CHECK(sh_index(2, -2) == 4);
  CHECK(sh_count(4) == 25);
}

TEST_CASE("quadrature weight sums to 4 pi") {
  const SphereGrid& g = unit_grid(3);
  double total = 0;
  for (int it = 0; it < g.nth; ++it)
    for (int jp = 0; jp < g.nph; ++jp) total += g.wx[it] * 2 * M_PI / g.nph;
  CHECK(total == doctest::Approx(4 * M_PI).epsilon(1e-12));
}

TEST_CASE("analysis inverts synthesis on the unit grid") {
  for (int L : {0, 1, 2, 4}) {
    const SphereGrid& g = unit_grid(L);
    CounterRng rng{uint64_t(77 + L), 0};
    Vec coef(g.ncoef());
    for (int i = 0; i < coef.size(); ++i) coef[i] = rng.sym();
    Vec back = analyze(g, synthesize(g, coef));
    CHECK((back - coef).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("Y00 is constant and normalized") {
  const SphereGrid& g = unit_grid(2);
  Vec coef = Vec::Zero(g.ncoef());
  coef[0] = 1.0;
  Vec vals = synthesize(g, coef);
  for (int p = 0; p < g.npts(); ++p)
    CHECK(vals[p] == doctest::Approx(1.0 / std::sqrt(4 * M_PI)).epsilon(1e-12));
}

TEST_CASE("laplacian eigenvalues") {
  int L = 4;
  Vec coef = Vec::Zero(sh_count(L));
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) coef[sh_index(l, m)] = 1.0;
  Vec lap = laplacian_unit(coef);
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m)
      CHECK(lap[sh_index(l, m)] == doctest::Approx(-double(l * (l + 1))));
}

TEST_CASE("rotation algebra: commutators and Casimir") {
  int L = 3;
  CounterRng rng{123, 0};
  Vec coef(sh_count(L));
  for (int i = 0; i < coef.size(); ++i) coef[i] = rng.sym();
  // sum_i Gamma_i^2 = laplacian
  Vec cas = Vec::Zero(coef.size());
  for (int i = 1; i <= 3; ++i)
    cas += rotation_derivative(i, rotation_derivative(i, coef));
  CHECK((cas - laplacian_unit(coef)).cwiseAbs().maxCoeff() < 1e-10);
  // [G1, G2] = G3 (and cyclic)
  for (int i = 1; i <= 3; ++i) {
    int j = i % 3 + 1, k = j % 3 + 1;
    Vec comm = rotation_derivative(i, rotation_derivative(j, coef)) -
               rotation_derivative(j, rotation_derivative(i, coef));
    CHECK((comm - rotation_derivative(k, coef)).cwiseAbs().maxCoeff() < 1e-10);
  }
  // rotations preserve each degree
  Vec mode = Vec::Zero(sh_count(L));
  mode[sh_index(2, 1)] = 1.0;
  Vec rot = rotation_derivative(1, mode);
  for (int l = 0; l <= L; ++l)
    if (l != 2)
      for (int m = -l; m <= l; ++m) CHECK(std::abs(rot[sh_index(l, m)]) < 1e-13);
}

TEST_CASE("dealiased product against pointwise oracle") {
  int L = 3;
  CounterRng rng{991, 0};
  Vec f(sh_count(L)), g(sh_count(L));
  for (int i = 0; i < f.size(); ++i) f[i] = rng.sym();
  for (int i = 0; i < g.size(); ++i) g[i] = rng.sym();
  Vec prod = product_dealiased(f, g, L);
  // the product of two band-L fields has degree <= 2L; analysis of the
  // pointwise product on the padded grid is exact, truncation is the only loss
  const SphereGrid& pg = padded_grid(L);
  Vec pf = synthesize(pg, f), pgv = synthesize(pg, g);
  Vec pw = pf.cwiseProduct(pgv);
  Vec full = analyze(pg, pw);
  CHECK((prod - full.head(sh_count(L))).cwiseAbs().maxCoeff() < 1e-11);
  // l=0 coefficient equals the sphere average of the product: Parseval
  double dot = f.dot(g);
  CHECK(prod[0] == doctest::Approx(dot / std::sqrt(4 * M_PI)).epsilon(1e-10));
}

TEST_CASE("sup bound majorizes the collocation max") {
  int L = 4;
  CounterRng rng{5, 0};
  Vec coef(sh_count(L));
  for (int i = 0; i < coef.size(); ++i) coef[i] = rng.sym();
  SupBound b = sup_bound(coef, L);
  CHECK(b.grid_max <= b.majorant);
  CHECK(b.grid_max > 0);
  // constant field: grid max is exact
  Vec c0 = Vec::Zero(sh_count(L));
  c0[0] = 2.0;
  SupBound cb = sup_bound(c0, L);
  CHECK(cb.grid_max == doctest::Approx(2.0 / std::sqrt(4 * M_PI)).epsilon(1e-12));
  CHECK(cb.majorant >= cb.grid_max);
}
