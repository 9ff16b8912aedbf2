#include "ern/sphere.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>

namespace ern {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * xi * p1 - j * p2) / (j + 1);
      }
      pp = n * (xi * p0 - p1) / (xi * xi - 1.0);
      double dx = p0 / pp;
      xi -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    x[n - 1 - i] = xi;
    w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * pp * pp);
  }
}

// Fully normalized associated Legendre Pbar_{lm}(x) for all l <= L at fixed m,
// written into col(l).  No Condon-Shortley phase.
void legendre_column(int L, int m, double x, Eigen::VectorXd& out) {
  out.setZero(L + 1);
  double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  double pmm = std::sqrt(1.0 / (4.0 * kPi));
  for (int k = 1; k <= m; ++k)
    pmm *= s * std::sqrt((2.0 * k + 1.0) / (2.0 * k));
  if (m <= L) out[m] = pmm;
  if (m + 1 <= L) out[m + 1] = x * std::sqrt(2.0 * m + 3.0) * pmm;
  for (int l = m + 2; l <= L; ++l) {
    double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
    double b = std::sqrt(((2.0 * l + 1.0) * ((l - 1.0) * (l - 1.0) - double(m) * m)) /
                         ((2.0 * l - 3.0) * (double(l) * l - double(m) * m)));
    out[l] = a * x * out[l - 1] - b * out[l - 2];
  }
}

int band_from_size(int n) {
  int L = int(std::lround(std::sqrt(double(n)))) - 1;
  if (sh_count(L) != n) throw std::invalid_argument("coefficient vector size is not (L+1)^2");
  return L;
}

using Cvec = Eigen::VectorXcd;
const std::complex<double> kI(0.0, 1.0);

// Real coefficients of degree l -> complex coefficients c_{l,-l..l} in the
// standard (Condon-Shortley) complex basis.
void to_complex(const Vec& a, int l, Cvec& c) {
  c.resize(2 * l + 1);
  auto A = [&](int m) { return a[sh_index(l, m)]; };
  c[l] = A(0);
  const double inv_s2 = 1.0 / std::sqrt(2.0);
  for (int m = 1; m <= l; ++m) {
    std::complex<double> cp(A(m) * inv_s2, -A(-m) * inv_s2);
    if (m % 2) cp = -cp;
    c[l + m] = cp;
    c[l - m] = std::conj(cp) * ((m % 2) ? -1.0 : 1.0);
  }
}

void to_real(const Cvec& c, int l, Vec& a) {
  auto set = [&](int m, double v) { a[sh_index(l, m)] = v; };
  set(0, c[l].real());
  const double s2 = std::sqrt(2.0);
  for (int m = 1; m <= l; ++m) {
    std::complex<double> cp = c[l + m];
    if (m % 2) cp = -cp;
    set(m, s2 * cp.real());
    set(-m, -s2 * cp.imag());
  }
}

double ladder(int l, int m, int up) {
  // L_{+-} Y_{lm} = sqrt(l(l+1) - m(m +- 1)) Y_{l,m +- 1}
  double v = double(l) * (l + 1) - double(m) * (m + (up ? 1 : -1));
  return v > 0 ? std::sqrt(v) : 0.0;
}

} // namespace

SphereGrid make_sphere_grid(int L, int nth, int nph) {
  SphereGrid g;
  g.L = L;
  g.nth = nth;
  g.nph = nph;
  gauss_legendre(nth, g.x, g.wx);
  g.phi.resize(nph);
  for (int j = 0; j < nph; ++j) g.phi[j] = 2.0 * kPi * j / nph;

  int np = g.npts(), nc = g.ncoef();
  g.B.resize(np, nc);
  Eigen::VectorXd col(L + 1);
  const double s2 = std::sqrt(2.0);
  for (int it = 0; it < nth; ++it) {
    for (int m = 0; m <= L; ++m) {
      legendre_column(L, m, g.x[it], col);
      for (int jp = 0; jp < nph; ++jp) {
        int row = it * nph + jp;
        for (int l = m; l <= L; ++l) {
          if (m == 0) {
            g.B(row, sh_index(l, 0)) = col[l];
          } else {
            g.B(row, sh_index(l, m)) = s2 * col[l] * std::cos(m * g.phi[jp]);
            g.B(row, sh_index(l, -m)) = s2 * col[l] * std::sin(m * g.phi[jp]);
          }
        }
      }
    }
  }
  Eigen::VectorXd wq(np);
  double wphi = 2.0 * kPi / nph;
  for (int it = 0; it < nth; ++it)
    for (int jp = 0; jp < nph; ++jp) wq[it * nph + jp] = g.wx[it] * wphi;
  g.Bw = g.B.transpose() * wq.asDiagonal();
  return g;
}

const SphereGrid& unit_grid(int L) {
  static std::map<int, SphereGrid> cache;
  auto it = cache.find(L);
  if (it == cache.end())
    it = cache.emplace(L, make_sphere_grid(L, L + 1, 2 * L + 1)).first;
  return it->second;
}

const SphereGrid& padded_grid(int L) {
  static std::map<int, SphereGrid> cache;
  auto it = cache.find(L);
  if (it == cache.end())
    it = cache.emplace(L, make_sphere_grid(L, (3 * L) / 2 + 1, 3 * L + 1)).first;
  return it->second;
}

Vec synthesize(const SphereGrid& g, const Vec& coef) {
  if (coef.size() != g.ncoef()) throw std::invalid_argument("synthesize: size mismatch");
  return g.B * coef;
}

Vec analyze(const SphereGrid& g, const Vec& vals) {
  if (vals.size() != g.npts()) throw std::invalid_argument("analyze: size mismatch");
  return g.Bw * vals;
}

Vec laplacian_unit(const Vec& coef) {
  int L = band_from_size(int(coef.size()));
  Vec out(coef.size());
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m)
      out[sh_index(l, m)] = -double(l) * (l + 1) * coef[sh_index(l, m)];
  return out;
}

Vec rotation_derivative(int i, const Vec& coef) {
  if (i < 1 || i > 3) throw std::invalid_argument("rotation_derivative: i must be 1..3");
  int L = band_from_size(int(coef.size()));
  Vec out = Vec::Zero(coef.size());
  Cvec c, cp;
  for (int l = 0; l <= L; ++l) {
    to_complex(coef, l, c);
    cp.setZero(2 * l + 1);
    if (i == 1) {
      // Gamma_1 = -i L_z
      for (int m = -l; m <= l; ++m) cp[l + m] = -kI * double(m) * c[l + m];
    } else {
      // L_+ c and L_- c shift coefficients up/down in m
      Cvec up = Cvec::Zero(2 * l + 1), dn = Cvec::Zero(2 * l + 1);
      for (int m = -l; m <= l - 1; ++m) up[l + m + 1] = ladder(l, m, 1) * c[l + m];
      for (int m = -l + 1; m <= l; ++m) dn[l + m - 1] = ladder(l, m, 0) * c[l + m];
      if (i == 2)
        cp = -kI * 0.5 * (up + dn); // Gamma_2 = -i L_x
      else
        cp = -0.5 * (up - dn);      // Gamma_3 = -i L_y
    }
    to_real(cp, l, out);
  }
  return out;
}

Vec product_dealiased(const Vec& f, const Vec& g, int L) {
  const SphereGrid& grid = padded_grid(L);
  Vec pf = synthesize(grid, f);
  Vec pg = synthesize(grid, g);
  return analyze(grid, Vec(pf.cwiseProduct(pg)));
}

SupBound sup_bound(const Vec& coef, int L) {
  const SphereGrid& grid = unit_grid(L);
  Vec vals = synthesize(grid, coef);
  double m2 = 0;
  for (int l = 0; l <= L; ++l) {
    double ev = double(l) * (l + 1);
    double wl = 1.0 + ev + ev * ev;
    for (int m = -l; m <= l; ++m) {
      double a = coef[sh_index(l, m)];
      m2 += wl * a * a;
    }
  }
  return {vals.cwiseAbs().maxCoeff(), std::sqrt(m2)};
}

} // namespace ern
