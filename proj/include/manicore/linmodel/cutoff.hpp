#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/taylor_rep.hpp"

namespace manicore {

// Polynomial smoothstep S_q on [0,1]: S(0)=0, S(1)=1, derivatives 1..q vanish at both ends.
class SmoothStep {
 public:
  explicit SmoothStep(int q = 2) : q_(q) {
    coef_.assign(2 * q + 2, 0.0);
    for (int k = 0; k <= q; ++k)
      coef_[q + 1 + k] = binomial(q + k, k) * binomial(2 * q + 1, q - k) * ((k % 2) ? -1.0 : 1.0);
    sup_.assign(2 * q + 3, 0.0);
    for (int k = 0; k < static_cast<int>(sup_.size()); ++k) sup_[k] = compute_sup(k);
  }

  int order() const { return q_; }
  int degree() const { return 2 * q_ + 1; }

  // S^{(k)}(u), unclamped polynomial
  double deriv(double u, int k) const {
    double s = 0.0;
    for (int i = static_cast<int>(coef_.size()) - 1; i >= k; --i) {
      double f = 1.0;
      for (int j = 0; j < k; ++j) f *= (i - j);
      s = s * u + coef_[i] * f;
    }
    return s;
  }

  // sup over [0,1] of |S^{(k)}|
  double sup(int k) const { return k < static_cast<int>(sup_.size()) ? sup_[k] : 0.0; }

 private:
  double compute_sup(int k) const {
    // extrema of S^{(k)} sit at endpoints or roots of S^{(k+1)}
    const int N = 4000;
    double best = std::max(std::abs(deriv(0.0, k)), std::abs(deriv(1.0, k)));
    double prev = deriv(0.0, k + 1);
    for (int i = 1; i <= N; ++i) {
      double u = static_cast<double>(i) / N;
      double cur = deriv(u, k + 1);
      if (prev == 0.0) best = std::max(best, std::abs(deriv(static_cast<double>(i - 1) / N, k)));
      if (prev * cur < 0.0) {
        double lo = static_cast<double>(i - 1) / N, hi = u;
        for (int it = 0; it < 80; ++it) {
          double mid = 0.5 * (lo + hi);
          if (deriv(lo, k + 1) * deriv(mid, k + 1) <= 0.0)
            hi = mid;
          else
            lo = mid;
        }
        best = std::max(best, std::abs(deriv(0.5 * (lo + hi), k)));
      }
      prev = cur;
    }
    return best;
  }

  int q_;
  std::vector<double> coef_;  // ascending powers of u
  std::vector<double> sup_;
};

// ξ(x) = Π_b p(‖x_b‖₂) over the blocks of x, p ≡ 1 below `inner`, p ≡ 0 above `outer`.
class CutoffFunction {
 public:
  CutoffFunction() = default;
  CutoffFunction(double inner, double outer, std::vector<int> blocks, int smoothness = 2)
      : inner_(inner), outer_(outer), blocks_(std::move(blocks)), step_(smoothness) {
    if (!(inner > 0.0) || !(outer > inner)) fail(ErrorKind::ConfigError, "cutoff radii need 0 < inner < outer");
    std::vector<int> nz;
    for (int b : blocks_)
      if (b > 0) nz.push_back(b);
    blocks_ = nz;
  }

  double inner() const { return inner_; }
  double outer() const { return outer_; }
  int smoothness() const { return step_.order(); }
  const std::vector<int>& blocks() const { return blocks_; }
  int dim() const { return std::accumulate(blocks_.begin(), blocks_.end(), 0); }
  const SmoothStep& step() const { return step_; }

  // p^{(k)}(s)
  double profile(double s, int k = 0) const {
    if (s <= inner_) return k == 0 ? 1.0 : 0.0;
    if (s >= outer_) return 0.0;
    double w = outer_ - inner_;
    double u = (s - inner_) / w;
    double v = step_.deriv(u, k) / std::pow(w, k);
    return k == 0 ? 1.0 - v : -v;
  }

  // sup_s |p^{(k)}(s)|
  double profile_sup(int k) const {
    if (k == 0) return 1.0;
    return step_.sup(k) / std::pow(outer_ - inner_, k);
  }

  double eval(const Eigen::VectorXd& x) const {
    double v = 1.0;
    int at = 0;
    for (int b : blocks_) {
      v *= profile(x.segment(at, b).norm());
      at += b;
    }
    return v;
  }

  // Scalar Taylor jet of ξ at x, degree `deg`, in all dim() variables.
  TaylorRep jet(const Eigen::VectorXd& x, int deg) const {
    const int n = dim();
    TaylorRep out = TaylorRep::constant(Eigen::VectorXd::Ones(1), n, deg);
    int at = 0;
    for (int b : blocks_) {
      double s0 = x.segment(at, b).norm();
      if (s0 >= outer_) return TaylorRep(n, 1, deg);
      if (s0 > inner_) out = TaylorRep::scalar_product(block_jet(x, at, b, s0, deg), out);
      at += b;
    }
    out.set_truncated(false);
    return out;
  }

  // closed-form bound on ‖Dξ‖₀ in the max-block norm
  double d1_bound() const { return static_cast<double>(blocks_.size()) * profile_sup(1); }

  // closed-form bound on ‖D²ξ‖₀
  double d2_bound() const {
    double p1 = profile_sup(1), p2 = profile_sup(2);
    double s = 0.0;
    for (int b : blocks_) s += p2 + (b > 1 ? p1 / inner_ : 0.0);
    double nb = static_cast<double>(blocks_.size());
    return s + nb * (nb - 1.0) * p1 * p1;
  }

  // cutoff of the rescaled problem: x ↦ ξ(s x)
  CutoffFunction scaled(double s) const {
    return CutoffFunction(inner_ / s, outer_ / s, blocks_, smoothness());
  }

 private:
  TaylorRep block_jet(const Eigen::VectorXd& x, int at, int b, double s0, int deg) const {
    const int n = dim();
    // w(v) = (2 x_b·v_b + |v_b|²)/s0²
    TaylorRep w(n, 1, deg);
    for (int i = 0; i < b && deg >= 1; ++i) {
      MultiIndex a(n, 0);
      a[at + i] = 1;
      w.set_coeff(0, a, 2.0 * x(at + i) / (s0 * s0));
      if (deg >= 2) {
        a[at + i] = 2;
        w.set_coeff(0, a, 1.0 / (s0 * s0));
      }
    }
    // δ = s0(√(1+w) − 1)
    TaylorRep sq(1, 1, deg);
    double bc = 1.0;
    for (int k = 1; k <= deg; ++k) {
      bc *= (0.5 - (k - 1)) / k;
      sq.coeffs()(0, k) = s0 * bc;
    }
    TaylorRep delta = sq.compose(w, deg);
    // p(s0 + δ) = Σ p^{(k)}(s0)/k! δ^k
    TaylorRep pt(1, 1, deg);
    for (int k = 0; k <= deg; ++k) pt.coeffs()(0, k) = profile(s0, k) / factorial(k);
    return pt.compose(delta, deg);
  }

  double inner_ = 1.0;
  double outer_ = 2.0;
  std::vector<int> blocks_;
  SmoothStep step_;
};

}  // namespace manicore
