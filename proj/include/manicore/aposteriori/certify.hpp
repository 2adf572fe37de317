#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "manicore/constants/ledger.hpp"
#include "manicore/errors.hpp"
#include "manicore/parallel.hpp"
#include "manicore/theta/bootstrap.hpp"
#include "manicore/theta/theta.hpp"

namespace manicore {

// Partial Bell polynomial B_{n,k}(x_1, x_2, …); x[0] is unused.
inline double bell_polynomial(int n, int k, const std::vector<double>& x) {
  if (n == 0 && k == 0) return 1.0;
  if (n <= 0 || k <= 0) return 0.0;
  double s = 0.0;
  for (int i = 1; i <= n - k + 1; ++i) s += binomial(n - 1, i - 1) * x.at(i) * bell_polynomial(n - i, k - 1, x);
  return s;
}

// Bounds τ_i ≥ ‖D^i T₀‖₀ for T₀ = (A_c + r₀)⁻¹, i = 1..m, from ‖DT₀‖ ≤ L₋₁ and
// ‖D^k r₀‖ ≤ M (k ≥ 2): differentiating R₀∘T₀ = Id gives
// τ_i ≤ L₋₁ M Σ_{k=2}^{i} B_{i,k}(τ_1, …).
inline std::vector<double> inverse_derivative_bounds(double L_m1, double M, int m) {
  std::vector<double> tau(std::max(m, 1) + 1, 0.0);
  tau[1] = L_m1;
  for (int i = 2; i <= m; ++i) {
    double s = 0.0;
    for (int k = 2; k <= i; ++k) s += bell_polynomial(i, k, tau);
    tau[i] = L_m1 * M * s;
  }
  return tau;
}

// 𝒞₁(M,m): ‖e∘T₀‖_m ≤ 𝒞₁‖e‖_m from the Faà di Bruno majorant Σ_k B_{j,k}(τ).
inline double composition_constant(double L_m1, double M, int m) {
  std::vector<double> tau = inverse_derivative_bounds(L_m1, M, m);
  double c = 1.0;
  for (int j = 1; j <= m; ++j) {
    double s = 0.0;
    for (int k = 1; k <= j; ++k) s += bell_polynomial(j, k, tau);
    c = std::max(c, s);
  }
  return c;
}

struct ErrorConstant {
  double value = 0.0;         // 𝒞(M,m)
  std::vector<double> C1, C2, C3, theta, levels;  // per k = 0..m
};

// 𝒞(M,0) = 𝒞₂(M,0)/(1−θ₀),
// 𝒞(M,k) = max{𝒞(M,k−1), (𝒞₂(M,k) + 𝒞₃(M,k)𝒞(M,k−1))/(1−θ_k)},
// 𝒞₂(M,k) = max{1, ‖A_u⁻¹‖, 𝒞₁(M,k)}. gbound[k] is 𝒞₃(M,k) (index 0 unused).
inline ErrorConstant error_constant(const ConstantsLedger& l, double M, int m, const std::vector<double>& gbound) {
  if (m < 0) fail(ErrorKind::ConfigError, "certification order must be nonnegative");
  if (m + 2 > static_cast<int>(l.theta.size())) fail(ErrorKind::InsufficientSmoothness, "ledger does not reach order m");
  if (m >= 1 && static_cast<int>(gbound.size()) < m + 1)
    fail(ErrorKind::ConfigError, "𝒞₃ estimates missing for some order ≤ m");
  ErrorConstant ec;
  for (int k = 0; k <= m; ++k) {
    double th = k == 0 ? l.theta0 : l.theta_max(k);
    if (!(th < 1.0))
      fail(ErrorKind::InfeasibleConstants, "θ_" + std::to_string(k) + " = " + std::to_string(th) + " is not below 1");
    double c1 = composition_constant(l.L_m1, M, k);
    double c2 = std::max({1.0, l.norms.Au_inv, c1});
    double c3 = k == 0 ? 0.0 : gbound[k];
    double v = k == 0 ? c2 / (1.0 - th) : std::max(ec.levels.back(), (c2 + c3 * ec.levels.back()) / (1.0 - th));
    ec.C1.push_back(c1);
    ec.C2.push_back(c2);
    ec.C3.push_back(c3);
    ec.theta.push_back(th);
    ec.levels.push_back(v);
  }
  ec.value = ec.levels.back();
  return ec;
}

// Jets of K₀ = ι + (k_c, k_u0, k_s0) and R₀ = A_c + r₀ at x through degree m.
inline TaylorRep approx_K_jet(const ProblemInstance& p, const ConjugacyTriple& L0, const Eigen::VectorXd& x, int m) {
  TaylorRep c = p.k_c.jet(x, m) + TaylorRep::identity(p.dim_c(), m);
  c.coeffs().col(0) += x;
  return TaylorRep::stack({c, L0.k_u.jet(x, m), L0.k_s.jet(x, m)});
}

inline TaylorRep approx_R_jet(const ProblemInstance& p, const ConjugacyTriple& L0, const Eigen::VectorXd& x, int m) {
  TaylorRep R = L0.r.jet(x, m) + TaylorRep::linear(p.linear.A_c, m);
  R.coeffs().col(0) += p.linear.A_c * x;
  return R;
}

// jet at x of F∘K₀ − K₀∘R₀
inline TaylorRep defect_jet(const ProblemInstance& p, const ConjugacyTriple& L0, const Eigen::VectorXd& x, int m) {
  TaylorRep K = approx_K_jet(p, L0, x, m);
  TaylorRep R = approx_R_jet(p, L0, x, m);
  Eigen::VectorXd K0 = K.value_at_zero(), R0 = R.value_at_zero();
  K.coeffs().col(0).setZero();
  R.coeffs().col(0).setZero();
  TaylorRep F = p.g.jet(K0, m) + TaylorRep::linear(p.linear.block_diagonal(), m);
  F.coeffs().col(0) += p.linear.block_diagonal() * K0;
  return F.compose(K, m) - approx_K_jet(p, L0, R0, m).compose(R, m);
}

// max_{j ≤ m} sup over pts of ‖D^j‖ for jets produced by `jet`
inline double sup_cm_norm(const std::function<TaylorRep(const Eigen::VectorXd&)>& jet,
                          const std::vector<Eigen::VectorXd>& pts, int m, const Blocks& out, const Blocks& in) {
  std::vector<double> v(pts.size(), 0.0);
  parallel_for(static_cast<long>(pts.size()), [&](long i) {
    TaylorRep J = jet(pts[i]);
    for (int j = 0; j <= m; ++j) v[i] = std::max(v[i], tensor_norm(J.homogeneous(j), j, out, in));
  });
  double best = 0.0;
  for (double e : v) best = std::max(best, e);
  return best;
}

inline std::vector<Eigen::VectorXd> grid_points(const GridSpec& spec) {
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(spec.nodes());
  for (long j = 0; j < spec.nodes(); ++j) pts.push_back(spec.node(j));
  return pts;
}

// ε_def = ‖F∘K₀ − K₀∘R₀‖_m sampled at the center grid nodes, or on the ball of
// the given radius when radius > 0.
inline double defect_norm(const ProblemInstance& p, const ConjugacyTriple& L0, int m, double radius = 0.0,
                          long budget = 10001) {
  if (m < 0) fail(ErrorKind::ConfigError, "defect order must be nonnegative");
  for (const SmoothMapRep* f : {&L0.r, &L0.k_u, &L0.k_s})
    if (f->kind() == SmoothMapRep::Kind::Sampled && f->grid()->max_derivative() < m)
      fail(ErrorKind::InsufficientSmoothness, "approximation is not resolved to order m on its grid");
  std::vector<Eigen::VectorXd> pts;
  if (radius > 0.0) {
    for (auto& x : sample_box(p.dim_c(), radius, budget))
      if (x.norm() <= radius * (1.0 + 1e-12)) pts.push_back(x);
  } else {
    pts = grid_points(p.center_grid());
  }
  return sup_cm_norm([&](const Eigen::VectorXd& x) { return defect_jet(p, L0, x, m); }, pts, m, p.blocks(),
                     p.center_blocks());
}

// Λ sampled on the center grid of p (Taylor companions kept).
inline ConjugacyTriple sample_triple(const ProblemInstance& p, const ConjugacyTriple& L) {
  const GridSpec spec = p.center_grid();
  const int so = p.settings.stencil_order, cap = p.settings.degree_cap;
  auto one = [&](const SmoothMapRep& f) {
    GridRep g = GridRep::sample(spec, f.codomain_dim(), [&](const Eigen::VectorXd& x) { return f.eval(x); }, so);
    return SmoothMapRep::sampled(f.taylor().with_cap(cap), g);
  };
  ConjugacyTriple out{one(L.r), one(L.k_u), one(L.k_s), zero_field(spec, p.dim_c(), cap, so)};
  out.t = refresh_inverse(p, out.r);
  return out;
}

// a + s·b on sampled triples with a common grid; t recomputed
inline ConjugacyTriple triple_axpy(const ProblemInstance& p, const ConjugacyTriple& a, double s,
                                   const ConjugacyTriple& b) {
  auto one = [&](const SmoothMapRep& f, const SmoothMapRep& g) {
    GridRep v = *f.grid();
    v.values() += s * g.grid()->values();
    return SmoothMapRep::sampled(f.taylor() + s * g.taylor(), v);
  };
  ConjugacyTriple out{one(a.r, b.r), one(a.k_u, b.k_u), one(a.k_s, b.k_s), a.t};
  out.t = refresh_inverse(p, out.r);
  return out;
}

inline double derivative_triple_sup(const DerivativeTriple& M) {
  double s = 0.0;
  for (const SmoothMapRep* f : {&M.rho, &M.kappa_u, &M.kappa_s}) {
    const GridRep& g = *f->grid();
    if (g.codomain_dim() == 0) continue;
    for (long j = 0; j < g.spec().nodes(); ++j) s = std::max(s, g.values().col(j).norm());
  }
  return s;
}

// 𝒞₃(M,k), k = 1..m: sup of ‖D𝒢‖ in the lower-order data along the segment
// Λ₀ + s(Θ(Λ₀) − Λ₀), s ∈ {0, 0.1, …, 1}, with D^kΛ held fixed; directional central
// differences in the direction of the segment, times a safety factor 2.
inline std::vector<double> estimate_gbound(const ProblemInstance& p, const ConstantsLedger& l,
                                           const ConjugacyTriple& L0_sampled, int m, double safety = 2.0) {
  std::vector<double> out(m + 1, 0.0);
  if (m == 0) return out;
  ConjugacyTriple step = theta_apply(L0_sampled, p, l, nullptr, false);
  ConjugacyTriple delta = triple_axpy(p, step, -1.0, L0_sampled);
  const double h = 1e-3;
  for (int k = 1; k <= m; ++k) {
    // ‖Δ‖_{k−1}
    double dnorm = 0.0;
    for (const SmoothMapRep* f : {&delta.r, &delta.k_u, &delta.k_s})
      if (f->grid()->codomain_dim()) dnorm = std::max(dnorm, f->grid()->values().colwise().norm().maxCoeff());
    for (int j = 1; j < k; ++j) dnorm = std::max(dnorm, derivative_triple_sup(fd_derivative(delta, j)));
    if (!(dnorm > 0.0)) continue;
    double best = 0.0;
    for (int si = 0; si <= 10; ++si) {
      ConjugacyTriple Ls = triple_axpy(p, L0_sampled, 0.1 * si, delta);
      DerivativeTriple top = fd_derivative(Ls, k);
      auto G = [&](double eta) {
        ConjugacyTriple Le = triple_axpy(p, Ls, eta, delta);
        std::vector<DerivativeTriple> lower;
        for (int j = 1; j < k; ++j) lower.push_back(fd_derivative(Le, j));
        return theta_level_apply(top, Le, lower, p);
      };
      DerivativeTriple plus = G(h), minus = G(-h);
      double d = derivative_difference(plus, minus).first / (2.0 * h);
      best = std::max(best, d / dnorm);
    }
    out[k] = safety * best;
  }
  return out;
}

struct DefectReport {
  int m = 0;
  double M = 0.0;
  double eps_def = 0.0;
  double C_const = 0.0;
  double bound = 0.0;
  ErrorConstant constants;
  double k0_norm = 0.0, r0_norm = 0.0, Dr0_sup = 0.0;  // measured preconditions
  bool has_reference = false;
  double distance_k = 0.0, distance_r = 0.0;
  double reference_error = 0.0;  // accuracy budget of the reference solution
  bool contained = true;
  std::vector<std::string> caveats;
};

// ‖Λ − Λ₀‖_m on the nodes of the reference grid, split into (k_u, k_s) and r.
inline std::pair<double, double> reference_distance(const ProblemInstance& p, const ConjugacyTriple& ref,
                                                    const ConjugacyTriple& L0, int m) {
  auto diff = [&](const SmoothMapRep& a, const SmoothMapRep& b) {
    GridRep g = *a.grid();
    for (long j = 0; j < g.spec().nodes(); ++j) g.values().col(j) -= b.eval(g.spec().node(j));
    return g;
  };
  const GridSpec spec = ref.r.grid()->spec();
  std::vector<Eigen::VectorXd> pts = grid_points(spec);
  GridRep dr = diff(ref.r, L0.r);
  GridRep dk = ref.k_u.grid()->codomain_dim() ? diff(ref.k_u, L0.k_u) : GridRep(spec, 0);
  GridRep ds = ref.k_s.grid()->codomain_dim() ? diff(ref.k_s, L0.k_s) : GridRep(spec, 0);
  const Blocks in = p.center_blocks();
  double r = sup_cm_norm([&](const Eigen::VectorXd& x) { return dr.jet(x, m); }, pts, m, in, in);
  double k = sup_cm_norm(
      [&](const Eigen::VectorXd& x) { return TaylorRep::stack({dk.jet(x, m), ds.jet(x, m)}); }, pts, m,
      p.hyperbolic_blocks(), in);
  return {k, r};
}

// Accuracy of a computed fixed point as a stand-in for the true Λ: the contraction
// tail d_last·θ/(1−θ) of the last sweep, floored at the solver tolerance.
inline double reference_error(const FixedPointResult& res, const ConstantsLedger& l, int m, double tol) {
  if (res.trace.empty()) return tol;
  double th = l.theta0;
  for (int k = 1; k <= m; ++k) th = std::max(th, l.theta_max(k));
  const TraceRow& last = res.trace.back();
  double d = m == 0 ? last.d0 : last.d1;
  return std::max(tol, th < 1.0 ? d * th / (1.0 - th) : std::numeric_limits<double>::infinity());
}

// Certified distance 𝒞(M,m)·ε_def from an approximate pair to the true (K, R).
// M ≤ 0 uses the measured ‖·‖_{m+1} of the pair. With a reference, containment is
// distance ≤ bound + ref_error.
inline DefectReport certify(const ProblemInstance& p, const ConstantsLedger& l, const ConjugacyTriple& L0, int m,
                            double M, const ConjugacyTriple* reference = nullptr, double ref_error = 0.0) {
  if (m < 0) fail(ErrorKind::ConfigError, "certification order must be nonnegative");
  if (m >= p.n) fail(ErrorKind::InsufficientSmoothness, "certification order must stay below order_n");
  DefectReport rep;
  rep.m = m;
  const std::vector<Eigen::VectorXd> pts = grid_points(p.center_grid());
  const Blocks in = p.center_blocks();

  // k₀(0) = 0, Dk₀(0) = 0 and the same for r₀
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p.dim_c());
  auto flat_at_zero = [&](const SmoothMapRep& f) {
    if (f.codomain_dim() == 0) return true;
    TaylorRep J = f.jet(zero, 1);
    double tol = f.kind() == SmoothMapRep::Kind::Sampled ? 1e-9 : 0.0;
    return J.coeffs().cwiseAbs().maxCoeff() <= tol;
  };
  if (!flat_at_zero(L0.k_u) || !flat_at_zero(L0.k_s) || !flat_at_zero(p.k_c))
    fail(ErrorKind::PreconditionFailed, "k₀(0) = 0, Dk₀(0) = 0 violated");
  if (!flat_at_zero(L0.r)) fail(ErrorKind::PreconditionFailed, "r₀(0) = 0, Dr₀(0) = 0 violated");

  rep.k0_norm = sup_cm_norm(
      [&](const Eigen::VectorXd& x) {
        return TaylorRep::stack({p.k_c.jet(x, m + 1), L0.k_u.jet(x, m + 1), L0.k_s.jet(x, m + 1)});
      },
      pts, m + 1, p.blocks(), in);
  rep.r0_norm = sup_cm_norm([&](const Eigen::VectorXd& x) { return L0.r.jet(x, m + 1); }, pts, m + 1, in, in);
  rep.Dr0_sup = sup_cm_norm([&](const Eigen::VectorXd& x) { return L0.r.jet(x, 1).homogeneous(1); }, pts, 1, in, in);
  rep.M = M > 0.0 ? M : std::max(rep.k0_norm, rep.r0_norm);
  const double margin = 1.0 + 1e-9;
  if (rep.k0_norm > rep.M * margin)
    fail(ErrorKind::PreconditionFailed, "‖k₀‖_{m+1} ≤ M violated (" + std::to_string(rep.k0_norm) + " > " +
                                            std::to_string(rep.M) + ")");
  if (rep.r0_norm > rep.M * margin)
    fail(ErrorKind::PreconditionFailed, "‖r₀‖_{m+1} ≤ M violated (" + std::to_string(rep.r0_norm) + " > " +
                                            std::to_string(rep.M) + ")");
  if (rep.Dr0_sup > l.L_r * margin)
    fail(ErrorKind::PreconditionFailed, "‖Dr₀‖₀ ≤ L_r violated (" + std::to_string(rep.Dr0_sup) + " > " +
                                            std::to_string(l.L_r) + ")");

  rep.eps_def = defect_norm(p, L0, m);
  std::vector<double> gb(m + 1, 0.0);
  if (m >= 1) gb = estimate_gbound(p, l, sample_triple(p, L0), m);
  rep.constants = error_constant(l, rep.M, m, gb);
  rep.C_const = rep.constants.value;
  rep.bound = rep.C_const * rep.eps_def;

  rep.caveats.push_back("norms are sampled at the center grid nodes, not rigorous suprema");
  rep.caveats.push_back("L_g, L_c and ε are sampled estimates of the nonlinearity bounds");
  if (m >= 1) {
    rep.caveats.push_back("𝒞₃ is a directional finite-difference estimate along Λ₀ → Θ(Λ₀), times 2");
    rep.caveats.push_back("derivatives of sampled fields use finite-difference stencils");
  }
  double eps0 = 0.0;
  try {
    eps0 = epsilon_threshold(l, Stage::c1());
  } catch (const Error&) {
  }
  if (l.eps >= eps0)
    rep.caveats.push_back("ε is not below ε₀ for this problem; the contraction on the unscaled problem is not covered");

  if (reference) {
    rep.has_reference = true;
    std::tie(rep.distance_k, rep.distance_r) = reference_distance(p, *reference, L0, m);
    rep.reference_error = ref_error;
    rep.contained = std::max(rep.distance_k, rep.distance_r) <= rep.bound + ref_error;
  }
  return rep;
}

}  // namespace manicore
