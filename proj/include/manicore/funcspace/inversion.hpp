#pragma once

#include <Eigen/Dense>
#include <functional>

#include "manicore/errors.hpp"
#include "manicore/funcspace/faa_di_bruno.hpp"
#include "manicore/funcspace/smooth_map.hpp"

namespace manicore {

// Solves (A_c + r)(y) = x for y = B x + φ by Picard sweeps φ ↦ −B r(B x + φ), B = A_c⁻¹.
// Returns the number of sweeps, or -1 without convergence.
inline int invert_point(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& r, const Eigen::MatrixXd& B,
                        const Eigen::VectorXd& x, double tol, int max_iter, Eigen::VectorXd& y) {
  Eigen::VectorXd bx = B * x;
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(x.size());
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd next = -B * r(bx + phi);
    double change = (next - phi).norm();
    phi = next;
    if (change <= tol) {
      y = bx + phi;
      return it;
    }
  }
  y = bx + phi;
  return -1;
}

// Taylor table of t with (A_c + r)∘(A_c⁻¹ + t) = Id, solved order by order by the same Picard map.
inline TaylorRep invert_taylor(const TaylorRep& r, const Eigen::MatrixXd& A_c, int cap) {
  Eigen::MatrixXd B = A_c.inverse();
  const int n = static_cast<int>(A_c.rows());
  TaylorRep Bmap = TaylorRep::linear(B, cap);
  TaylorRep t(n, n, cap);
  // each sweep fixes at least one more order since r starts at degree 2
  const Eigen::MatrixXd negB = -B;
  for (int it = 0; it <= cap; ++it) t = negB * r.compose(Bmap + t, cap);
  t.set_truncated(r.truncated() || r.degree() > 1);
  return t;
}

struct InversionResult {
  SmoothMapRep t;
  double residual = 0.0;  // sup over nodes of |(A_c + r)(A_c⁻¹x + t(x)) − x|
  int sweeps = 0;         // max Picard sweeps over nodes
  double dt_sup = 0.0;    // sampled ‖Dt‖₀
};

// Global inverse of A_c + r on the grid `spec`, with the Taylor table of t through `cap`.
inline InversionResult invert_center_map(const SmoothMapRep& r, const Eigen::MatrixXd& A_c, const GridSpec& spec,
                                         double tol = 1e-13, int max_iter = 200, int cap = 6) {
  const int n = static_cast<int>(A_c.rows());
  Eigen::MatrixXd B = A_c.inverse();
  double binv = spectral_norm(B);
  double dr = derivative_sup(r, 1, spec.half_width, single_block(n), single_block(n)).value;
  if (!(dr < 1.0 / binv)) fail(ErrorKind::NotAContraction, "‖Dr‖₀ < ‖A_c⁻¹‖⁻¹ violated");
  InversionResult out;
  GridRep tg(spec, n);
  auto reval = [&](const Eigen::VectorXd& y) { return r.eval(y); };
  for (long j = 0; j < spec.nodes(); ++j) {
    Eigen::VectorXd x = spec.node(j), y;
    int it = invert_point(reval, B, x, 1e-15 * (1.0 + x.norm()), max_iter, y);
    if (it < 0) fail(ErrorKind::NoConvergence, "Picard inversion did not converge");
    out.sweeps = std::max(out.sweeps, it);
    tg.values().col(j) = y - B * x;
    out.residual = std::max(out.residual, (A_c * y + r.eval(y) - x).norm());
  }
  if (out.residual > tol) fail(ErrorKind::NoConvergence, "inversion residual above tolerance");
  out.t = SmoothMapRep::sampled(invert_taylor(r.taylor(), A_c, cap), tg);
  out.dt_sup = derivative_sup(out.t, 1, spec.half_width, single_block(n), single_block(n)).value;
  return out;
}

// Jet of T = R⁻¹ at x through degree m from the jet Rj of R at T(x):
// D^j T = −DT·D^j R(T)(DT)^{⊗j} − DT·𝒫_j(R, T), starting from DT = DR(T)⁻¹.
inline TaylorRep inverse_of_jet(const TaylorRep& Rj_in, const Eigen::VectorXd& Tx, int m) {
  TaylorRep Rj = Rj_in.with_cap(m);
  Rj.coeffs().col(0).setZero();
  Eigen::MatrixXd L = Rj.linear_part();
  if (condition_number(L) > 1e12) fail(ErrorKind::SingularPRho, "DR(T(x)) is numerically singular");
  Eigen::MatrixXd DT = L.inverse();
  TaylorRep Tj = TaylorRep::linear(DT, m);
  for (int j = 2; j <= m; ++j) {
    TaylorRep lower = Tj.degree_range(1, j - 1);
    TaylorRep Dj = Rj.homogeneous(j).compose(TaylorRep::linear(DT, m), m).homogeneous(j);
    TaylorRep P = partition_remainder_jet(Rj, lower, j).with_cap(m);
    Tj += Eigen::MatrixXd(-DT) * (Dj + P);
  }
  Tj.coeffs().col(0) = Tx;
  Tj.set_truncated(false);
  return Tj;
}

// Full jet of T at x through degree m, Tx = T(x).
inline TaylorRep inverse_jet(const SmoothMapRep& r, const Eigen::MatrixXd& A_c, const Eigen::VectorXd& Tx, int m) {
  TaylorRep Rj = r.jet(Tx, m);
  Rj += TaylorRep::linear(A_c, m);
  return inverse_of_jet(Rj, Tx, m);
}

inline SymTensor inverse_derivative_tensor(const SmoothMapRep& r, const SmoothMapRep& t, const Eigen::MatrixXd& A_c,
                                           int m, const Eigen::VectorXd& x) {
  if (m < 2) fail(ErrorKind::InsufficientSmoothness, "inverse_derivative_tensor needs m ≥ 2");
  Eigen::VectorXd Tx = A_c.inverse() * x + t.eval(x);
  return make_tensor(inverse_jet(r, A_c, Tx, m), m);
}

}  // namespace manicore
