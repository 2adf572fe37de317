#pragma once

#include <Eigen/Dense>
#include <limits>

#include "manicore/errors.hpp"
#include "manicore/funcspace/smooth_map.hpp"
#include "manicore/funcspace/taylor_rep.hpp"

namespace manicore {

// Symmetric m-linear map X^m → Y held as the homogeneous table P with S(v,…,v) = m!·P(v).
struct SymTensor {
  int m = 0;
  TaylorRep table;

  // ∂^α table, one column per multi-index of degree m
  Eigen::MatrixXd derivatives() const { return derivative_table(table, m); }
  // S(v, …, v)
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return factorial(m) * table.eval(v); }
  double norm(const Blocks& out, const Blocks& in) const { return tensor_norm(table, m, out, in); }
};

inline SymTensor make_tensor(const TaylorRep& jet, int m) { return {m, jet.homogeneous(m)}; }

// f1 ∘ f2 through degree `cap`. A table whose constant term lies outside
// `trust_radius` of the expansion point of a truncated f1 is rejected.
inline SmoothMapRep compose(const SmoothMapRep& f1, const SmoothMapRep& f2, int cap,
                            double trust_radius = std::numeric_limits<double>::infinity()) {
  if (f2.codomain_dim() != f1.domain_dim()) fail(ErrorKind::ConfigError, "compose: dimension mismatch");
  double c0 = f2.taylor().value_at_zero().norm();
  if (c0 > trust_radius) fail(ErrorKind::DomainEscape, "inner constant term outside the trust region");
  if (f1.taylor().truncated() && c0 > 0.0 && !std::isfinite(trust_radius))
    fail(ErrorKind::DomainEscape, "shifting a truncated table needs a trust radius");
  TaylorRep t = f1.taylor().compose(f2.taylor(), cap);
  if (f1.kind() == SmoothMapRep::Kind::Localized) t.set_truncated(true);
  const GridRep* g2 = f2.grid();
  if (!g2) return SmoothMapRep::polynomial(t);
  GridRep out(g2->spec(), f1.codomain_dim(), g2->stencil_order());
  long escaped = 0;
  const GridRep* g1 = f1.grid();
  for (long j = 0; j < g2->spec().nodes(); ++j) {
    Eigen::VectorXd y = g2->values().col(j);
    if (g1 && !g1->spec().contains(y)) {
      ++escaped;
      continue;
    }
    out.values().col(j) = f1.eval(y);
  }
  if (escaped * 10 > g2->spec().nodes()) fail(ErrorKind::DomainEscape, "more than 10% of grid nodes leave the box");
  return SmoothMapRep::sampled(t, out);
}

// Local jets of f2 at x and of f1 at f2(x), both through degree m.
struct JetPair {
  TaylorRep inner;  // v ↦ f2(x+v) − f2(x)
  TaylorRep outer;  // w ↦ f1(f2(x) + w)
};

inline JetPair jet_pair(const SmoothMapRep& f1, const SmoothMapRep& f2, int m, const Eigen::VectorXd& x) {
  JetPair p;
  p.inner = f2.jet(x, m);
  Eigen::VectorXd y = p.inner.value_at_zero();
  p.inner.coeffs().col(0).setZero();
  p.outer = f1.jet(y, m);
  return p;
}

// 𝒫_m from jets: degree-m part of Σ_{i=2}^{m-1} [outer]_i ∘ inner.
inline TaylorRep partition_remainder_jet(const TaylorRep& outer, const TaylorRep& inner, int m) {
  TaylorRep acc(inner.domain_dim(), outer.codomain_dim(), m);
  for (int i = 2; i <= m - 1; ++i) acc += outer.homogeneous(i).compose(inner.degree_range(1, m - i + 1), m).homogeneous(m);
  acc.set_truncated(false);
  return acc;
}

inline SymTensor partition_remainder(const SmoothMapRep& f1, const SmoothMapRep& f2, int m, const Eigen::VectorXd& x) {
  if (m < 2) fail(ErrorKind::InsufficientSmoothness, "partition remainder needs m ≥ 2");
  JetPair p = jet_pair(f1, f2, m, x);
  return {m, partition_remainder_jet(p.outer, p.inner, m)};
}

// D^m[f1∘f2](x) = Df1(f2) D^m f2 + D^m f1(f2)(Df2)^{⊗m} + 𝒫_m(f1, f2)(x)
inline SymTensor faa_di_bruno(const SmoothMapRep& f1, const SmoothMapRep& f2, int m, const Eigen::VectorXd& x) {
  if (m < 1) fail(ErrorKind::InsufficientSmoothness, "faa_di_bruno needs m ≥ 1");
  JetPair p = jet_pair(f1, f2, m, x);
  TaylorRep first = p.outer.homogeneous(1).compose(p.inner.homogeneous(m), m);
  if (m == 1) return {1, first.homogeneous(1)};
  TaylorRep last = p.outer.homogeneous(m).compose(p.inner.homogeneous(1), m);
  TaylorRep total = first + last + partition_remainder_jet(p.outer, p.inner, m);
  total.set_truncated(false);
  return {m, total.homogeneous(m)};
}

}  // namespace manicore
