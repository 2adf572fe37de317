#pragma once

#include <Eigen/Dense>
#include <limits>
#include <numeric>
#include <vector>

#include "manicore/funcspace/taylor_rep.hpp"

namespace manicore {

using Blocks = std::vector<int>;

inline Blocks single_block(int n) { return Blocks{n}; }

// ‖v‖ = max over blocks of the Euclidean norm
inline double block_norm(const Eigen::VectorXd& v, const Blocks& blocks) {
  double m = 0.0;
  int at = 0;
  for (int b : blocks) {
    if (b > 0) m = std::max(m, v.segment(at, b).norm());
    at += b;
  }
  return m;
}

inline double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

inline double condition_number(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  double smin = svd.singularValues().minCoeff();
  return smin == 0.0 ? std::numeric_limits<double>::infinity() : svd.singularValues()(0) / smin;
}

// Operator norm X_in → X_out in max-block norms: max_i Σ_b ‖M_ib‖₂ (exact for a single input block).
inline double operator_norm(const Eigen::MatrixXd& M, const Blocks& out, const Blocks& in) {
  double best = 0.0;
  int ro = 0;
  for (int bo : out) {
    double s = 0.0;
    int co = 0;
    for (int bi : in) {
      if (bo > 0 && bi > 0) s += spectral_norm(M.block(ro, co, bo, bi));
      co += bi;
    }
    best = std::max(best, s);
    ro += bo;
  }
  return best;
}

// Norm of the symmetric m-linear map encoded by the degree-m part of `jet`.
// m = 1: operator_norm; m ≥ 2: sum over ordered input-block tuples of the
// Frobenius norm of the sub-tensor, maxed over output blocks. An upper bound,
// exact for a one-dimensional domain.
inline double tensor_norm(const TaylorRep& jet, int m, const Blocks& out, const Blocks& in) {
  if (m == 0) return block_norm(jet.value_at_zero(), out);
  const MonomialBasis& B = jet.basis();
  const int n = jet.domain_dim();
  if (m == 1) {
    Eigen::MatrixXd L(jet.codomain_dim(), n);
    for (int v = 0; v < n; ++v) L.col(v) = jet.coeffs().col(1 + v);
    return operator_norm(L, out, in);
  }
  std::vector<int> block_of(n);
  {
    int at = 0, bi = 0;
    for (int b : in) {
      for (int i = 0; i < b; ++i) block_of[at + i] = bi;
      at += b;
      ++bi;
    }
  }
  const int nb = static_cast<int>(in.size());
  std::size_t tuples = 1;
  for (int i = 0; i < m; ++i) tuples *= nb;
  double best = 0.0;
  int ro = 0;
  for (int bo : out) {
    std::vector<double> sq(tuples, 0.0);
    // every ordered coordinate tuple (j1..jm) contributes (∂^α f_k)²
    std::vector<int> j(m, 0);
    while (true) {
      MultiIndex a(n, 0);
      std::size_t t = 0;
      for (int s = 0; s < m; ++s) {
        ++a[j[s]];
        t = t * nb + block_of[j[s]];
      }
      int idx = B.index(a);
      double af = multi_factorial(a);
      for (int k = 0; k < bo; ++k) {
        double e = af * jet.coeffs()(ro + k, idx);
        sq[t] += e * e;
      }
      int s = 0;
      while (s < m && j[s] + 1 == n) j[s++] = 0;
      if (s == m) break;
      ++j[s];
    }
    double tot = 0.0;
    for (double v : sq) tot += std::sqrt(v);
    best = std::max(best, tot);
    ro += bo;
  }
  return best;
}

}  // namespace manicore
