#include "ern/commuted.hpp"

#include <map>

namespace ern {

std::string CommutTuple::name() const {
  std::string s;
  for (int i = 0; i < t; ++i) s += "T";
  for (int g : gammas) s += "G" + std::to_string(g);
  return s.empty() ? "id" : s;
}

std::vector<CommutTuple> commuted_tuples(int kmax) {
  std::vector<CommutTuple> out;
  for (int n = 0; n <= kmax; ++n) {
    for (int t = 0; t <= n; ++t) {
      int k = n - t;
      // all 3^k rotation strings
      std::vector<int> g(k, 1);
      while (true) {
        out.push_back({t, g});
        int pos = k - 1;
        while (pos >= 0 && g[pos] == 3) g[pos--] = 1;
        if (pos < 0) break;
        ++g[pos];
      }
    }
  }
  return out;
}

double duhat_deriv(const std::vector<Mat>& f, const GeometryCache& geo, int i, int j,
                   int c) {
  double h = geo.duhat;
  int nu = int(f[j].rows()) - 1;
  if (i == 0) return (-3 * f[j](0, c) + 4 * f[j](1, c) - f[j](2, c)) / (2 * h);
  if (i == nu) return (3 * f[j](nu, c) - 4 * f[j](nu - 1, c) + f[j](nu - 2, c)) / (2 * h);
  return (f[j](i + 1, c) - f[j](i - 1, c)) / (2 * h);
}

double dv_deriv(const std::vector<Mat>& f, const GeometryCache& geo, int i, int j,
                int c) {
  int last = int(f.size()) - 1;
  int j0 = j == 0 ? 0 : (j == last ? last - 2 : j - 1);
  double c0, c1, c2;
  deriv3_weights(geo.v[j0], geo.v[j0 + 1], geo.v[j0 + 2], geo.v[j], c0, c1, c2);
  return c0 * f[j0](i, c) + c1 * f[j0 + 1](i, c) + c2 * f[j0 + 2](i, c);
}

std::vector<Mat> commute_gamma(const std::vector<Mat>& in, int g, int L, int ncomp) {
  int nc = sh_count(L);
  Mat G(nc, nc);
  Vec e = Vec::Zero(nc);
  for (int c = 0; c < nc; ++c) {
    e[c] = 1;
    G.col(c) = rotation_derivative(g, e);
    e[c] = 0;
  }
  Mat Gt = G.transpose();
  std::vector<Mat> out(in.size());
  for (size_t j = 0; j < in.size(); ++j) {
    out[j].resize(in[j].rows(), in[j].cols());
    for (int q = 0; q < ncomp; ++q)
      out[j].middleCols(q * nc, nc) = in[j].middleCols(q * nc, nc) * Gt;
  }
  return out;
}

std::vector<Mat> commute_T(const std::vector<Mat>& in, const GeometryCache& geo) {
  int nrows = int(in.size());
  int nu = int(in[0].rows()) - 1;
  int ncol = int(in[0].cols());
  std::vector<Mat> out(nrows, Mat(nu + 1, ncol));
  double h = geo.duhat;
  for (int j = 0; j < nrows; ++j) {
    int j0 = j == 0 ? 0 : (j == nrows - 1 ? nrows - 3 : j - 1);
    double c0, c1, c2;
    deriv3_weights(geo.v[j0], geo.v[j0 + 1], geo.v[j0 + 2], geo.v[j], c0, c1, c2);
    for (int i = 0; i <= nu; ++i) {
      Eigen::RowVectorXd du;
      if (i == 0)
        du = (-3 * in[j].row(0) + 4 * in[j].row(1) - in[j].row(2)) / (2 * h);
      else if (i == nu)
        du = (3 * in[j].row(nu) - 4 * in[j].row(nu - 1) + in[j].row(nu - 2)) / (2 * h);
      else
        du = (in[j].row(i + 1) - in[j].row(i - 1)) / (2 * h);
      Eigen::RowVectorXd dv =
          c0 * in[j0].row(i) + c1 * in[j0 + 1].row(i) + c2 * in[j0 + 2].row(i);
      out[j].row(i) = 0.5 * (geo.w[i] * du + dv);
    }
  }
  return out;
}

CommutedCache::CommutedCache(const Trajectory& tr, int kmax) : tr_(tr), kmax_(kmax) {
  if (tr.rows() < 3) throw std::runtime_error("commuted fields need at least 3 rows");
  tuples_ = commuted_tuples(kmax);
  fields_.resize(tuples_.size());
  std::map<std::string, int> index;
  for (size_t idx = 0; idx < tuples_.size(); ++idx) {
    const CommutTuple& tup = tuples_[idx];
    index[tup.name()] = int(idx);
    if (tup.order() == 0) continue; // base field aliases tr.psi
    if (tup.t > 0) {
      CommutTuple child{tup.t - 1, tup.gammas};
      fields_[idx] = commute_T(slices(index.at(child.name())), tr.geo);
    } else {
      CommutTuple child{0, std::vector<int>(tup.gammas.begin() + 1, tup.gammas.end())};
      fields_[idx] = commute_gamma(slices(index.at(child.name())), tup.gammas[0], tr.L,
                                 tr.ncomp);
    }
  }
}

} // namespace ern
