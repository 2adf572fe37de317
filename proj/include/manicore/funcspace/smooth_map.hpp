#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/grid_rep.hpp"
#include "manicore/funcspace/norms.hpp"
#include "manicore/funcspace/taylor_rep.hpp"
#include "manicore/linmodel/cutoff.hpp"

namespace manicore {

enum class NormSource { CoefficientBound, GridSampled };

struct NormEstimate {
  double value = 0.0;
  NormSource source = NormSource::GridSampled;
  bool upper_bound() const { return source == NormSource::CoefficientBound; }
};

// A C^n map with a Taylor table at 0 and optionally a grid sampling.
//  Polynomial: the table is the map (exact anywhere).
//  Localized:  table times a cutoff, evaluated in closed form.
//  Sampled:    grid values; the table is the expansion at 0.
class SmoothMapRep {
 public:
  enum class Kind { Polynomial, Localized, Sampled };

  SmoothMapRep() = default;

  static SmoothMapRep polynomial(TaylorRep p) {
    SmoothMapRep f;
    f.kind_ = Kind::Polynomial;
    f.taylor_ = std::move(p);
    return f;
  }
  static SmoothMapRep localized(TaylorRep p, CutoffFunction c) {
    if (c.dim() != p.domain_dim()) fail(ErrorKind::ConfigError, "cutoff dimension does not match the map");
    SmoothMapRep f;
    f.kind_ = Kind::Localized;
    f.taylor_ = std::move(p);
    f.cutoff_ = std::move(c);
    return f;
  }
  static SmoothMapRep sampled(TaylorRep companion, GridRep grid) {
    SmoothMapRep f;
    f.kind_ = Kind::Sampled;
    f.taylor_ = std::move(companion);
    f.taylor_.set_truncated(true);
    f.grid_ = std::move(grid);
    return f;
  }

  Kind kind() const { return kind_; }
  const TaylorRep& taylor() const { return taylor_; }
  const GridRep* grid() const { return grid_ ? &*grid_ : nullptr; }
  const CutoffFunction* cutoff() const { return cutoff_ ? &*cutoff_ : nullptr; }
  int domain_dim() const { return taylor_.domain_dim(); }
  int codomain_dim() const { return taylor_.codomain_dim(); }

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
    switch (kind_) {
      case Kind::Polynomial: return taylor_.eval(x);
      case Kind::Localized: {
        double xi = cutoff_->eval(x);
        if (xi == 0.0) return Eigen::VectorXd::Zero(codomain_dim());
        return xi * taylor_.eval(x);
      }
      case Kind::Sampled: return grid_->eval(x);
    }
    return {};
  }

  // local expansion v ↦ f(x + v) through degree `deg`
  TaylorRep jet(const Eigen::VectorXd& x, int deg) const {
    switch (kind_) {
      case Kind::Polynomial: return taylor_.shift(x).with_cap(deg);
      case Kind::Localized: {
        TaylorRep xi = cutoff_->jet(x, deg);
        if (xi.max_abs() == 0.0) return TaylorRep(domain_dim(), codomain_dim(), deg);
        TaylorRep p = taylor_.shift(x).with_cap(deg);
        p.set_truncated(false);
        return TaylorRep::scalar_product(xi, p);
      }
      case Kind::Sampled: return grid_->jet(x, deg);
    }
    return {};
  }

  // rescaled map h^s(x) = s⁻¹ h(s x)
  SmoothMapRep scaled(double s) const {
    SmoothMapRep f = *this;
    f.taylor_ = taylor_.scaled(s);
    if (cutoff_) f.cutoff_ = cutoff_->scaled(s);
    if (grid_) f.grid_ = grid_->scaled(s);
    return f;
  }

 private:
  Kind kind_ = Kind::Polynomial;
  TaylorRep taylor_;
  std::optional<GridRep> grid_;
  std::optional<CutoffFunction> cutoff_;
};

// Sample points for sup estimates: tensor grid over [-a,a]^dim, thinned in high dimension.
inline std::vector<Eigen::VectorXd> sample_box(int dim, double a, long budget = 40000) {
  int per = 2;
  while (true) {
    long tot = 1;
    for (int i = 0; i < dim; ++i) tot *= (per + 1);
    if (tot > budget) break;
    ++per;
  }
  GridSpec s{dim, a, std::max(per, 2)};
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(s.nodes());
  for (long j = 0; j < s.nodes(); ++j) pts.push_back(s.node(j));
  return pts;
}

// sup over the points of ‖D^k f‖
inline double sampled_derivative_sup(const SmoothMapRep& f, int k, const std::vector<Eigen::VectorXd>& pts,
                                     const Blocks& out, const Blocks& in) {
  double best = 0.0;
  for (const auto& x : pts) best = std::max(best, tensor_norm(f.jet(x, k).homogeneous(k), k, out, in));
  return best;
}

// Estimated sup ‖D^m f‖ (m fixed). Polynomial maps use the coefficient majorant on the
// box of half-width `radius`; Sampled maps use stencil derivatives at the grid nodes;
// Localized maps are sampled with exact jets on the box of the cutoff support.
inline NormEstimate derivative_sup(const SmoothMapRep& f, int m, double radius, const Blocks& out, const Blocks& in) {
  NormEstimate e;
  if (f.kind() == SmoothMapRep::Kind::Polynomial) {
    e.source = NormSource::CoefficientBound;
    e.value = f.taylor().derivative_majorant(m, radius);
    return e;
  }
  if (f.kind() == SmoothMapRep::Kind::Sampled) {
    const GridRep& g = *f.grid();
    if (m > g.max_derivative()) fail(ErrorKind::InsufficientSmoothness, "norm order beyond stencil support");
    std::vector<Eigen::VectorXd> pts;
    for (long j = 0; j < g.spec().nodes(); ++j) pts.push_back(g.spec().node(j));
    e.value = sampled_derivative_sup(f, m, pts, out, in);
    return e;
  }
  e.value = sampled_derivative_sup(f, m, sample_box(f.domain_dim(), f.cutoff()->outer()), out, in);
  return e;
}

// Estimated ‖f‖_k = max_{m ≤ k} sup ‖D^m f‖; flagged upper bound on the coefficient route.
inline NormEstimate cn_norm(const SmoothMapRep& f, int k, double radius, const Blocks& out, const Blocks& in) {
  NormEstimate e;
  for (int m = 0; m <= k; ++m) {
    NormEstimate d = derivative_sup(f, m, radius, out, in);
    e.value = std::max(e.value, d.value);
    e.source = d.source;
  }
  return e;
}

}  // namespace manicore
