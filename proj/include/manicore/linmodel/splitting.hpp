#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/norms.hpp"

namespace manicore {

// Ambient coordinates x, block coordinates z = basis_change · x ordered (center, unstable, stable).
struct SpaceSplitting {
  int dim_c = 0, dim_u = 0, dim_s = 0;
  Eigen::MatrixXd basis_change;      // ambient → block
  Eigen::MatrixXd basis_change_inv;  // block → ambient
  Eigen::MatrixXd P_c, P_u, P_s;     // ambient spectral projectors

  int dim() const { return dim_c + dim_u + dim_s; }
  Blocks blocks() const { return {dim_c, dim_u, dim_s}; }
  Eigen::VectorXd to_block(const Eigen::VectorXd& x) const { return basis_change * x; }
  Eigen::VectorXd to_ambient(const Eigen::VectorXd& z) const { return basis_change_inv * z; }
};

struct OperatorNorms {
  double Ac = 0, Ac_inv = 0, Au = 0, Au_inv = 0, As = 0, A = 0;
};

struct SplitLinearMap {
  Eigen::MatrixXd A_c, A_u, A_s;
  OperatorNorms norms;
  // block-diagonal S with new block coordinates = S · old ones; identity unless rescaled
  Eigen::MatrixXd similarity;

  int dim_c() const { return static_cast<int>(A_c.rows()); }
  int dim_u() const { return static_cast<int>(A_u.rows()); }
  int dim_s() const { return static_cast<int>(A_s.rows()); }
  Eigen::MatrixXd A_c_inv() const { return A_c.inverse(); }
  Eigen::MatrixXd A_u_inv() const {
    return dim_u() ? Eigen::MatrixXd(A_u.inverse()) : Eigen::MatrixXd(0, 0);
  }
  Eigen::MatrixXd block_diagonal() const {
    const int n = dim_c() + dim_u() + dim_s();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    M.topLeftCorner(dim_c(), dim_c()) = A_c;
    if (dim_u()) M.block(dim_c(), dim_c(), dim_u(), dim_u()) = A_u;
    if (dim_s()) M.bottomRightCorner(dim_s(), dim_s()) = A_s;
    return M;
  }
};

struct LinearModel {
  SpaceSplitting splitting;
  SplitLinearMap linear;
};

inline OperatorNorms compute_norms(const Eigen::MatrixXd& A_c, const Eigen::MatrixXd& A_u, const Eigen::MatrixXd& A_s) {
  OperatorNorms n;
  n.Ac = spectral_norm(A_c);
  n.Ac_inv = spectral_norm(A_c.inverse());
  n.Au = spectral_norm(A_u);
  n.Au_inv = A_u.size() ? spectral_norm(A_u.inverse()) : 0.0;
  n.As = spectral_norm(A_s);
  n.A = std::max({n.Ac, n.Au, n.As});
  return n;
}

// ‖A_c⁻¹‖^k ‖A_s‖ < 1 and ‖A_u⁻¹‖ ‖A_c‖^k < 1 for every 1 ≤ k ≤ n
inline bool gap_condition(const OperatorNorms& q, int n) {
  for (int k = 1; k <= n; ++k) {
    if (!(std::pow(q.Ac_inv, k) * q.As < 1.0)) return false;
    if (!(q.Au_inv * std::pow(q.Ac, k) < 1.0)) return false;
  }
  return true;
}

namespace detail {

// (1/2πi)∮_{|z|=ρ} (z − A)⁻¹ dz by the trapezoid rule, doubled until stable
inline Eigen::MatrixXd inside_projector(const Eigen::MatrixXd& A, double rho) {
  const int n = static_cast<int>(A.rows());
  using CM = Eigen::MatrixXcd;
  CM Ac = A.cast<std::complex<double>>();
  CM prev;
  for (int N = 64; N <= 1 << 16; N *= 2) {
    CM P = CM::Zero(n, n);
    for (int k = 0; k < N; ++k) {
      std::complex<double> z = std::polar(rho, 2.0 * M_PI * (k + 0.5) / N);
      CM R = (z * CM::Identity(n, n) - Ac).partialPivLu().inverse();
      P += z * R;
    }
    P /= static_cast<double>(N);
    if (prev.size() && (P - prev).norm() < 1e-12 * (1.0 + P.norm())) return P.real();
    prev = P;
  }
  fail(ErrorKind::ProjectionFailure, "spectral projector quadrature did not settle");
}

inline Eigen::MatrixXd range_basis(const Eigen::MatrixXd& P, int k) {
  if (k == 0) return Eigen::MatrixXd(P.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(k);
}

// Real Schur form of M with each 2×2 bump brought to [[α, −β], [β, α]].
// Returns Q with Q⁻¹ M Q quasi-upper-triangular.
inline Eigen::MatrixXd standard_form(const Eigen::MatrixXd& M) {
  const int k = static_cast<int>(M.rows());
  if (k == 0) return Eigen::MatrixXd(0, 0);
  Eigen::RealSchur<Eigen::MatrixXd> rs(M);
  const Eigen::MatrixXd& T = rs.matrixT();
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(k, k);
  for (int i = 0; i < k;) {
    if (i + 1 < k && T(i + 1, i) != 0.0) {
      // eigenvector w = u + i v for α + iβ, β > 0: in the basis [v, u] the block is [[α, −β], [β, α]]
      Eigen::EigenSolver<Eigen::MatrixXd> es(T.block(i, i, 2, 2));
      int j = es.eigenvalues()(0).imag() > 0 ? 0 : 1;
      Eigen::Vector2cd w = es.eigenvectors().col(j);
      S.block(i, i, 2, 1) = w.imag();
      S.block(i, i + 1, 2, 1) = w.real();
      i += 2;
    } else {
      ++i;
    }
  }
  return rs.matrixU() * S;
}

}  // namespace detail

// Splits R^d into center (|λ| within tol of 1), unstable and stable parts.
// Eigenvalues with tol ≤ ||λ| − 1| < 2 tol are rejected as ambiguous.
inline LinearModel build_splitting(const Eigen::MatrixXd& A, double tol = 1e-6) {
  const int d = static_cast<int>(A.rows());
  if (d == 0 || A.cols() != d || !A.allFinite()) fail(ErrorKind::ConfigError, "A must be a finite square matrix");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) fail(ErrorKind::ProjectionFailure, "eigenvalue computation failed");
  std::vector<double> mc, mu, ms;
  for (int i = 0; i < d; ++i) {
    double m = std::abs(es.eigenvalues()(i));
    double off = m - 1.0;
    if (std::abs(off) < tol)
      mc.push_back(m);
    else if (std::abs(off) < 2.0 * tol)
      fail(ErrorKind::NonCleanSpectrum, "eigenvalue modulus " + std::to_string(m) + " lies in the boundary band");
    else if (off > 0)
      mu.push_back(m);
    else
      ms.push_back(m);
  }
  if (mc.empty()) fail(ErrorKind::NonCleanSpectrum, "no eigenvalues on the unit circle");
  if (std::any_of(ms.begin(), ms.end(), [](double m) { return m == 0.0; }))
    fail(ErrorKind::SingularBlock, "A has a zero eigenvalue");

  const double cmin = *std::min_element(mc.begin(), mc.end());
  const double cmax = *std::max_element(mc.begin(), mc.end());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd Ps = Eigen::MatrixXd::Zero(d, d), Pcs = I;
  if (!ms.empty()) Ps = detail::inside_projector(A, std::sqrt(*std::max_element(ms.begin(), ms.end()) * cmin));
  if (!mu.empty()) Pcs = detail::inside_projector(A, std::sqrt(*std::min_element(mu.begin(), mu.end()) * cmax));

  SpaceSplitting sp;
  sp.dim_c = static_cast<int>(mc.size());
  sp.dim_u = static_cast<int>(mu.size());
  sp.dim_s = static_cast<int>(ms.size());
  sp.P_s = Ps;
  sp.P_c = Pcs - Ps;
  sp.P_u = I - Pcs;
  for (const Eigen::MatrixXd* P : {&sp.P_c, &sp.P_u, &sp.P_s})
    if ((*P * *P - *P).norm() > 1e-8 * (1.0 + P->norm()))
      fail(ErrorKind::ProjectionFailure, "spectral projector is not idempotent");

  Eigen::MatrixXd V(d, d);
  V << detail::range_basis(sp.P_c, sp.dim_c), detail::range_basis(sp.P_u, sp.dim_u),
      detail::range_basis(sp.P_s, sp.dim_s);
  if (condition_number(V) > 1e12) fail(ErrorKind::ProjectionFailure, "invariant subspaces are nearly dependent");
  Eigen::MatrixXd Ab = V.inverse() * A * V;

  // standardize each block
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
  int at = 0;
  for (int k : {sp.dim_c, sp.dim_u, sp.dim_s}) {
    if (k) W.block(at, at, k, k) = detail::standard_form(Ab.block(at, at, k, k));
    at += k;
  }
  V = V * W;
  sp.basis_change_inv = V;
  sp.basis_change = V.inverse();
  Ab = sp.basis_change * A * V;

  LinearModel lm;
  lm.splitting = sp;
  auto& L = lm.linear;
  L.A_c = Ab.topLeftCorner(sp.dim_c, sp.dim_c);
  L.A_u = Ab.block(sp.dim_c, sp.dim_c, sp.dim_u, sp.dim_u);
  L.A_s = Ab.bottomRightCorner(sp.dim_s, sp.dim_s);
  // drop the rounding residue in upper triangles and off-diagonal blocks
  for (Eigen::MatrixXd* M : {&L.A_c, &L.A_u, &L.A_s})
    *M = M->unaryExpr([&](double v) { return std::abs(v) < 1e-14 * (1.0 + Ab.norm()) ? 0.0 : v; });
  if (condition_number(L.A_c) > 1e12) fail(ErrorKind::SingularBlock, "A_c is numerically singular");
  if (condition_number(L.A_u) > 1e12) fail(ErrorKind::SingularBlock, "A_u is numerically singular");
  L.norms = compute_norms(L.A_c, L.A_u, L.A_s);
  L.similarity = Eigen::MatrixXd::Identity(d, d);
  return lm;
}

// Diagonal rescaling diag(1, η, η², …) inside each block until the gap
// condition holds for n and the block norms sit within (1 + factor) of the spectral radii.
inline SplitLinearMap rescale_norm(const SplitLinearMap& L, int n, double factor = 0.02) {
  auto radius = [](const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    return M.eigenvalues().cwiseAbs().maxCoeff();
  };
  const double rc = radius(L.A_c), ru = radius(L.A_u), rs = radius(L.A_s);
  const double rci = L.A_c.size() ? radius(L.A_c.inverse()) : 0.0;
  const double rui = L.A_u.size() ? radius(L.A_u.inverse()) : 0.0;
  auto tight = [&](const OperatorNorms& q) {
    const double f = 1.0 + factor;
    return q.Ac <= f * rc && q.Ac_inv <= f * rci && q.Au <= f * ru && q.Au_inv <= f * rui && q.As <= f * rs;
  };
  if (gap_condition(L.norms, n) && tight(L.norms)) return L;

  auto powers = [](const Eigen::MatrixXd& M) {
    std::vector<int> p(M.rows());
    int level = 0;
    for (int i = 0; i < M.rows(); ++i) {
      p[i] = level;
      bool bump = i + 1 < M.rows() && M(i + 1, i) != 0.0;
      if (!bump) ++level;
    }
    return p;
  };
  const auto pc = powers(L.A_c), pu = powers(L.A_u), ps = powers(L.A_s);
  auto apply = [](const Eigen::MatrixXd& M, const std::vector<int>& p, double eta) {
    Eigen::MatrixXd R = M;
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j) R(i, j) = M(i, j) * std::pow(eta, p[j] - p[i]);
    return R;
  };
  double eta = 1.0;
  for (int step = 0; step < 50; ++step) {
    eta *= 0.5;
    SplitLinearMap R = L;
    R.A_c = apply(L.A_c, pc, eta);
    R.A_u = apply(L.A_u, pu, eta);
    R.A_s = apply(L.A_s, ps, eta);
    R.norms = compute_norms(R.A_c, R.A_u, R.A_s);
    if (gap_condition(R.norms, n) && tight(R.norms)) {
      // new coordinates z' = D⁻¹ z
      std::vector<int> all;
      for (auto* p : {&pc, &pu, &ps}) all.insert(all.end(), p->begin(), p->end());
      Eigen::VectorXd dinv(all.size());
      for (std::size_t i = 0; i < all.size(); ++i) dinv(i) = std::pow(eta, -all[i]);
      R.similarity = dinv.asDiagonal() * L.similarity;
      return R;
    }
  }
  fail(ErrorKind::GapNotClosable, "gap condition fails for every tried rescaling");
}

// carries a rescaling of the block coordinates into the splitting
inline SpaceSplitting apply_rescaling(SpaceSplitting sp, const SplitLinearMap& before, const SplitLinearMap& after) {
  Eigen::MatrixXd S = after.similarity * before.similarity.inverse();
  sp.basis_change = S * sp.basis_change;
  sp.basis_change_inv = sp.basis_change.inverse();
  return sp;
}

}  // namespace manicore
