#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/multiindex.hpp"

namespace manicore {

// Truncated multivariate Taylor table: codomain vectors indexed by multi-index.
class TaylorRep {
 public:
  TaylorRep() : TaylorRep(1, 1, 0) {}
  TaylorRep(int domain_dim, int codomain_dim, int degree_cap, bool truncated = false)
      : basis_(MonomialBasis::get(domain_dim, degree_cap)),
        c_(Eigen::MatrixXd::Zero(codomain_dim, basis_->size())),
        truncated_(truncated) {}

  static TaylorRep identity(int n, int cap) {
    TaylorRep f(n, n, cap, cap < 1);
    if (cap < 1) return f;
    for (int v = 0; v < n; ++v) f.c_(v, 1 + v) = 1.0;
    return f;
  }

  // x ↦ M x
  static TaylorRep linear(const Eigen::MatrixXd& M, int cap) {
    TaylorRep f(static_cast<int>(M.cols()), static_cast<int>(M.rows()), cap, cap < 1);
    if (cap < 1) return f;
    for (int v = 0; v < M.cols(); ++v) {
      MultiIndex a(M.cols(), 0);
      a[v] = 1;
      f.c_.col(f.basis_->index(a)) = M.col(v);
    }
    return f;
  }

  static TaylorRep constant(const Eigen::VectorXd& c, int domain_dim, int cap) {
    TaylorRep f(domain_dim, static_cast<int>(c.size()), cap);
    f.c_.col(0) = c;
    return f;
  }

  int domain_dim() const { return basis_->nvars(); }
  int codomain_dim() const { return static_cast<int>(c_.rows()); }
  int degree_cap() const { return basis_->cap(); }
  bool truncated() const { return truncated_; }
  void set_truncated(bool t) { truncated_ = t; }
  const MonomialBasis& basis() const { return *basis_; }
  std::shared_ptr<const MonomialBasis> basis_ptr() const { return basis_; }

  const Eigen::MatrixXd& coeffs() const { return c_; }
  Eigen::MatrixXd& coeffs() { return c_; }

  Eigen::VectorXd coeff(const MultiIndex& a) const {
    int i = basis_->index(a);
    if (i < 0) return Eigen::VectorXd::Zero(codomain_dim());
    return c_.col(i);
  }
  double coeff(int comp, const MultiIndex& a) const {
    int i = basis_->index(a);
    return i < 0 ? 0.0 : c_(comp, i);
  }
  void set_coeff(int comp, const MultiIndex& a, double v) {
    int i = basis_->index(a);
    if (i < 0) fail(ErrorKind::ConfigError, "multi-index beyond degree cap");
    c_(comp, i) = v;
  }

  // highest degree carrying a nonzero coefficient, -1 for the zero map
  int degree() const {
    for (int d = degree_cap(); d >= 0; --d)
      for (int i = basis_->degree_begin(d); i < basis_->degree_end(d); ++i)
        if (!c_.col(i).isZero(0.0)) return d;
    return -1;
  }

  Eigen::VectorXd monomials(const Eigen::VectorXd& x) const {
    Eigen::VectorXd mon(basis_->size());
    mon(0) = 1.0;
    for (int i = 1; i < basis_->size(); ++i) {
      auto [p, v] = basis_->parent(i);
      mon(i) = mon(p) * x(v);
    }
    return mon;
  }

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const { return c_ * monomials(x); }

  Eigen::VectorXd value_at_zero() const { return c_.col(0); }

  Eigen::MatrixXd linear_part() const {
    Eigen::MatrixXd L(codomain_dim(), domain_dim());
    for (int v = 0; v < domain_dim(); ++v) L.col(v) = c_.col(1 + v);
    return L;
  }

  // keeps only degree-d terms
  TaylorRep homogeneous(int d) const {
    TaylorRep h(domain_dim(), codomain_dim(), degree_cap(), truncated_);
    if (d <= degree_cap())
      for (int i = basis_->degree_begin(d); i < basis_->degree_end(d); ++i) h.c_.col(i) = c_.col(i);
    return h;
  }

  // keeps degrees lo..hi
  TaylorRep degree_range(int lo, int hi) const {
    TaylorRep h(domain_dim(), codomain_dim(), degree_cap(), truncated_);
    for (int d = std::max(lo, 0); d <= std::min(hi, degree_cap()); ++d)
      for (int i = basis_->degree_begin(d); i < basis_->degree_end(d); ++i) h.c_.col(i) = c_.col(i);
    return h;
  }

  // re-table with a new cap (dropping terms marks the result truncated)
  TaylorRep with_cap(int cap) const {
    TaylorRep h(domain_dim(), codomain_dim(), cap, truncated_);
    for (int i = 0; i < basis_->size(); ++i) {
      int j = h.basis_->index((*basis_)[i]);
      if (j >= 0)
        h.c_.col(j) = c_.col(i);
      else if (!c_.col(i).isZero(0.0))
        h.truncated_ = true;
    }
    return h;
  }

  TaylorRep rows(int begin, int count) const {
    TaylorRep h(domain_dim(), count, degree_cap(), truncated_);
    h.c_ = c_.middleRows(begin, count);
    return h;
  }

  static TaylorRep stack(const std::vector<TaylorRep>& parts) {
    int rows = 0;
    for (const auto& p : parts) rows += p.codomain_dim();
    TaylorRep h(parts.front().domain_dim(), rows, parts.front().degree_cap());
    int at = 0;
    for (const auto& p : parts) {
      h.c_.middleRows(at, p.codomain_dim()) = p.c_;
      h.truncated_ = h.truncated_ || p.truncated_;
      at += p.codomain_dim();
    }
    return h;
  }

  TaylorRep& operator+=(const TaylorRep& o) {
    c_ += o.c_;
    truncated_ = truncated_ || o.truncated_;
    return *this;
  }
  TaylorRep& operator-=(const TaylorRep& o) {
    c_ -= o.c_;
    truncated_ = truncated_ || o.truncated_;
    return *this;
  }
  TaylorRep& operator*=(double s) {
    c_ *= s;
    return *this;
  }
  friend TaylorRep operator+(TaylorRep a, const TaylorRep& b) { return a += b; }
  friend TaylorRep operator-(TaylorRep a, const TaylorRep& b) { return a -= b; }
  friend TaylorRep operator*(double s, TaylorRep a) { return a *= s; }

  // M·f
  friend TaylorRep operator*(const Eigen::MatrixXd& M, const TaylorRep& f) {
    TaylorRep h(f.domain_dim(), static_cast<int>(M.rows()), f.degree_cap(), f.truncated_);
    h.c_ = M * f.c_;
    return h;
  }

  // product of a scalar series with each component of f
  static TaylorRep scalar_product(const TaylorRep& a, const TaylorRep& f) {
    TaylorRep h(f.domain_dim(), f.codomain_dim(), f.degree_cap(), a.truncated_ || f.truncated_);
    const MonomialBasis& B = *f.basis_;
    for (int i = 0; i < B.size(); ++i) {
      double ai = a.c_(0, i);
      if (ai == 0.0) continue;
      for (int j = 0; j < B.size(); ++j) {
        int k = B.sum_index(i, j);
        if (k < 0) continue;
        h.c_.col(k) += ai * f.c_.col(j);
      }
    }
    return h;
  }

  // ∂f/∂x_var
  TaylorRep partial(int var) const {
    TaylorRep h(domain_dim(), codomain_dim(), degree_cap(), truncated_);
    for (int i = 0; i < basis_->size(); ++i) {
      const MultiIndex& a = (*basis_)[i];
      if (a[var] == 0) continue;
      MultiIndex b = a;
      --b[var];
      h.c_.col(basis_->index(b)) += a[var] * c_.col(i);
    }
    return h;
  }

  // v ↦ f(x0 + v); exact for untruncated tables
  TaylorRep shift(const Eigen::VectorXd& x0) const {
    TaylorRep h(domain_dim(), codomain_dim(), degree_cap(), truncated_);
    const int n = domain_dim();
    std::vector<std::vector<double>> pw(n);
    for (int v = 0; v < n; ++v) {
      pw[v].assign(degree_cap() + 1, 1.0);
      for (int k = 1; k <= degree_cap(); ++k) pw[v][k] = pw[v][k - 1] * x0(v);
    }
    for (int i = 0; i < basis_->size(); ++i) {
      if (c_.col(i).isZero(0.0)) continue;
      const MultiIndex& a = (*basis_)[i];
      MultiIndex b(n, 0);
      while (true) {
        double w = 1.0;
        for (int v = 0; v < n; ++v) w *= binomial(a[v], b[v]) * pw[v][a[v] - b[v]];
        h.c_.col(basis_->index(b)) += w * c_.col(i);
        int v = 0;
        while (v < n && b[v] == a[v]) b[v++] = 0;
        if (v == n) break;
        ++b[v];
      }
    }
    return h;
  }

  // this ∘ inner, truncated at `cap`. Inner maps with a nonzero constant term
  // are handled by shifting this table first.
  TaylorRep compose(const TaylorRep& inner, int cap) const {
    if (inner.codomain_dim() != domain_dim())
      fail(ErrorKind::ConfigError, "compose: dimension mismatch");
    Eigen::VectorXd g0 = inner.value_at_zero();
    if (!g0.isZero(0.0)) {
      TaylorRep inner0 = inner;
      inner0.c_.col(0).setZero();
      return shift(g0).compose(inner0, cap);
    }
    const int n = inner.domain_dim();
    auto out_basis = MonomialBasis::get(n, cap);
    const MonomialBasis& OB = *out_basis;
    const MonomialBasis& IB = *basis_;
    // inner components re-tabled on the output basis
    std::vector<Eigen::VectorXd> comp(domain_dim());
    bool inner_cut = inner.truncated_;
    for (int p = 0; p < domain_dim(); ++p) {
      comp[p] = Eigen::VectorXd::Zero(OB.size());
      for (int i = 0; i < inner.basis_->size(); ++i) {
        double cv = inner.c_(p, i);
        if (cv == 0.0) continue;
        int j = OB.index((*inner.basis_)[i]);
        if (j >= 0)
          comp[p](j) = cv;
        else
          inner_cut = true;
      }
    }
    TaylorRep h(n, codomain_dim(), cap, truncated_ || inner_cut);
    std::vector<Eigen::VectorXd> pw(IB.size());
    int need = std::min(IB.cap(), cap);
    pw[0] = Eigen::VectorXd::Zero(OB.size());
    pw[0](0) = 1.0;
    h.c_ += c_.col(0) * pw[0].transpose();
    int outer_deg = degree();
    int inner_deg = inner.degree();
    if (outer_deg > 0 && inner_deg > 0 && outer_deg * inner_deg > cap) h.truncated_ = true;
    for (int i = 1; i < IB.size(); ++i) {
      if (IB.degree(i) > need) {
        if (!c_.col(i).isZero(0.0)) h.truncated_ = true;
        continue;
      }
      auto [p, v] = IB.parent(i);
      pw[i] = product(OB, pw[p], comp[v]);
      if (!c_.col(i).isZero(0.0)) h.c_ += c_.col(i) * pw[i].transpose();
    }
    return h;
  }

  // h^s(x) = s⁻¹ h(s x): the degree-d coefficient picks up s^{d−1}
  TaylorRep scaled(double s) const {
    TaylorRep h = *this;
    for (int i = 0; i < basis_->size(); ++i) h.c_.col(i) *= std::pow(s, basis_->degree(i) - 1);
    return h;
  }

  double max_abs() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0; }

  // Σ_α ‖c_α‖·|α|!/(|α|−k)!·ρ^{|α|−k}: bounds ‖D^k f‖ on the coordinate box of half-width ρ
  double derivative_majorant(int k, double radius) const {
    double s = 0.0;
    for (int i = 0; i < basis_->size(); ++i) {
      int d = basis_->degree(i);
      if (d < k) continue;
      double nc = c_.col(i).norm();
      if (nc == 0.0) continue;
      s += nc * factorial(d) / factorial(d - k) * std::pow(radius, d - k);
    }
    return s;
  }

 private:
  static Eigen::VectorXd product(const MonomialBasis& B, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(B.size());
    for (int i = 0; i < B.size(); ++i) {
      if (a(i) == 0.0) continue;
      for (int j = 0; j < B.size(); ++j) {
        if (b(j) == 0.0) continue;
        int k = B.sum_index(i, j);
        if (k >= 0) out(k) += a(i) * b(j);
      }
    }
    return out;
  }

  std::shared_ptr<const MonomialBasis> basis_;
  Eigen::MatrixXd c_;
  bool truncated_ = false;
};

// Symmetric m-linear tensors are stored as homogeneous degree-m tables P with
// S(v,…,v) = m!·P(v); the partial-derivative table is ∂^α = α!·c_α.
inline Eigen::MatrixXd derivative_table(const TaylorRep& jet, int m) {
  const MonomialBasis& B = jet.basis();
  Eigen::MatrixXd D(jet.codomain_dim(), B.degree_end(m) - B.degree_begin(m));
  for (int i = B.degree_begin(m); i < B.degree_end(m); ++i)
    D.col(i - B.degree_begin(m)) = multi_factorial(B[i]) * jet.coeffs().col(i);
  return D;
}

}  // namespace manicore
