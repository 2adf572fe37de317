#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/multiindex.hpp"
#include "manicore/funcspace/taylor_rep.hpp"

namespace manicore {

// Fornberg's recursion: weights w[k][j] for the k-th derivative at z from nodes x[j].
inline std::vector<std::vector<double>> fornberg_weights(double z, const std::vector<double>& x, int kmax) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(kmax + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, kmax);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// Uniform tensor grid on [-a, a]^dim.
struct GridSpec {
  int dim = 1;
  double half_width = 1.0;
  int points = 101;

  double step() const { return 2.0 * half_width / (points - 1); }
  long nodes() const {
    long n = 1;
    for (int i = 0; i < dim; ++i) n *= points;
    return n;
  }
  double coord(int i) const { return -half_width + i * step(); }
  Eigen::VectorXd node(long flat) const {
    Eigen::VectorXd x(dim);
    for (int d = 0; d < dim; ++d) {
      x(d) = coord(static_cast<int>(flat % points));
      flat /= points;
    }
    return x;
  }
  std::vector<int> multi(long flat) const {
    std::vector<int> idx(dim);
    for (int d = 0; d < dim; ++d) {
      idx[d] = static_cast<int>(flat % points);
      flat /= points;
    }
    return idx;
  }
  long flat(const std::vector<int>& idx) const {
    long f = 0;
    for (int d = dim - 1; d >= 0; --d) f = f * points + idx[d];
    return f;
  }
  bool contains(const Eigen::VectorXd& x) const {
    for (int d = 0; d < dim; ++d)
      if (std::abs(x(d)) > half_width) return false;
    return true;
  }
  GridSpec scaled(double s) const { return {dim, half_width / s, points}; }
};

// Sampled map on a GridSpec. Values outside the box are zero (cutoff extension).
class GridRep {
 public:
  GridRep() = default;
  GridRep(const GridSpec& spec, int codim, int stencil_order = 4)
      : spec_(spec), values_(Eigen::MatrixXd::Zero(codim, spec.nodes())), order_(stencil_order) {}

  static GridRep sample(const GridSpec& spec, int codim, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                        int stencil_order = 4) {
    GridRep g(spec, codim, stencil_order);
    for (long j = 0; j < spec.nodes(); ++j) g.values_.col(j) = f(spec.node(j));
    return g;
  }

  const GridSpec& spec() const { return spec_; }
  int codomain_dim() const { return static_cast<int>(values_.rows()); }
  int stencil_order() const { return order_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  bool finite() const { return values_.allFinite(); }

  // Highest derivative order the stencils support on this grid.
  int max_derivative() const { return std::max(0, spec_.points - order_ - 2); }

  Eigen::VectorXd eval(const Eigen::VectorXd& y) const { return derivative(y, MultiIndex(spec_.dim, 0)); }

  // ∂^α at an arbitrary point from local polynomial stencils per axis.
  Eigen::VectorXd derivative(const Eigen::VectorXd& y, const MultiIndex& alpha) const {
    if (!spec_.contains(y)) return Eigen::VectorXd::Zero(codomain_dim());
    int tot = total_degree(alpha);
    if (tot > max_derivative()) fail(ErrorKind::InsufficientSmoothness, "derivative order beyond stencil support");
    std::vector<std::vector<int>> idx(spec_.dim);
    std::vector<std::vector<double>> w(spec_.dim);
    for (int d = 0; d < spec_.dim; ++d) axis_weights(y(d), alpha[d], idx[d], w[d]);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(codomain_dim());
    std::vector<int> pos(spec_.dim, 0), node(spec_.dim);
    while (true) {
      double wt = 1.0;
      for (int d = 0; d < spec_.dim; ++d) {
        wt *= w[d][pos[d]];
        node[d] = idx[d][pos[d]];
      }
      if (wt != 0.0) out += wt * values_.col(spec_.flat(node));
      int d = 0;
      while (d < spec_.dim && pos[d] + 1 == static_cast<int>(idx[d].size())) pos[d++] = 0;
      if (d == spec_.dim) break;
      ++pos[d];
    }
    return out;
  }

  // Local Taylor jet of degree `deg` at y built from stencil derivatives.
  TaylorRep jet(const Eigen::VectorXd& y, int deg) const {
    TaylorRep j(spec_.dim, codomain_dim(), deg, true);
    const MonomialBasis& B = j.basis();
    for (int i = 0; i < B.size(); ++i) j.coeffs().col(i) = derivative(y, B[i]) / multi_factorial(B[i]);
    return j;
  }

  // Grid of ∂^α sampled at the nodes.
  GridRep derivative_grid(const MultiIndex& alpha) const {
    GridRep g(spec_, codomain_dim(), order_);
    for (long j = 0; j < spec_.nodes(); ++j) g.values_.col(j) = derivative(spec_.node(j), alpha);
    return g;
  }

  GridRep scaled(double s) const {
    GridRep g = *this;
    g.spec_ = spec_.scaled(s);
    g.values_ /= s;
    return g;
  }

 private:
  void axis_weights(double y, int k, std::vector<int>& idx, std::vector<double>& w) const {
    const double h = spec_.step();
    const double u = (y + spec_.half_width) / h;
    int nearest = static_cast<int>(std::lround(u));
    bool on_node = std::abs(u - nearest) < 1e-12;
    int width;
    int start;
    if (on_node) {
      width = 2 * ((k + 1) / 2) - 1 + order_;
      if (k == 0) width = 1;
      start = nearest - width / 2;
    } else {
      width = std::max(6, k + order_ + 1);
      start = static_cast<int>(std::floor(u)) - (width / 2 - 1);
    }
    width = std::min(width, spec_.points);
    start = std::clamp(start, 0, spec_.points - width);
    std::vector<double> xs(width);
    idx.resize(width);
    for (int i = 0; i < width; ++i) {
      idx[i] = start + i;
      xs[i] = spec_.coord(start + i);
    }
    auto c = fornberg_weights(y, xs, k);
    w = c[k];
  }

  GridSpec spec_;
  Eigen::MatrixXd values_;
  int order_ = 4;
};

}  // namespace manicore
