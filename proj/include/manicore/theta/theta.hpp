#pragma once

#include <Eigen/Dense>
#include <vector>

#include "manicore/constants/ledger.hpp"
#include "manicore/errors.hpp"
#include "manicore/funcspace/inversion.hpp"
#include "manicore/parallel.hpp"
#include "manicore/theta/triple.hpp"

namespace manicore {

// t for the current r, on the grid of r
inline SmoothMapRep refresh_inverse(const ProblemInstance& p, const SmoothMapRep& r, double* residual = nullptr) {
  const GridSpec spec = r.grid()->spec();
  try {
    InversionResult inv = invert_center_map(r, p.linear.A_c, spec, 1e-12 * (1.0 + spec.half_width), 200,
                                            p.settings.degree_cap);
    if (residual) *residual = inv.residual;
    return inv.t;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoConvergence) fail(ErrorKind::InversionFailure, e.what());
    throw;
  }
}

// One application of Θ. The returned triple carries the t used in the sweep
// (the inverse for the input r).
inline ConjugacyTriple theta_apply(const ConjugacyTriple& L, const ProblemInstance& p, const ConstantsLedger& l,
                                   double* inversion_residual = nullptr, bool check_membership = true) {
  if (check_membership) {
    MembershipReport m = membership(p, L, l);
    if (!m.member) fail(ErrorKind::OutsideGamma0, m.violation);
  }
  ConjugacyTriple in = L;
  in.t = refresh_inverse(p, L.r, inversion_residual);

  const GridSpec spec = L.r.grid()->spec();
  const int dc = p.dim_c(), du = p.dim_u(), ds = p.dim_s();
  const Eigen::MatrixXd& Ac = p.linear.A_c;
  const Eigen::MatrixXd& As = p.linear.A_s;
  const Eigen::MatrixXd Aui = p.linear.A_u_inv();
  const int so = p.settings.stencil_order;
  GridRep r(spec, dc, so), ku(spec, du, so), ks(spec, ds, so);
  parallel_for(spec.nodes(), [&](long j) {
    Eigen::VectorXd x = spec.node(j);
    Eigen::VectorXd Kx = eval_K(p, in, x);
    Eigen::VectorXd gK = p.g.eval(Kx);
    Eigen::VectorXd Rx = Ac * x + in.r.grid()->values().col(j);
    r.values().col(j) = Ac * p.k_c.eval(x) + gK.head(dc) - p.k_c.eval(Rx);
    if (du) ku.values().col(j) = Aui * (in.k_u.eval(Rx) - gK.segment(dc, du));
    if (ds) {
      Eigen::VectorXd Tx = p.linear.A_c_inv() * x + in.t.grid()->values().col(j);
      ks.values().col(j) = As * in.k_s.eval(Tx) + p.g.eval(eval_K(p, in, Tx)).tail(ds);
    }
  });

  // Taylor companion: the same three formulas on truncated tables
  const int cap = p.settings.degree_cap;
  TaylorRep Kt = K_taylor(p, in), Rt = R_taylor(p, in);
  TaylorRep gK = p.g_raw.compose(Kt, cap);
  TaylorRep kc = p.kc_raw.with_cap(cap);
  TaylorRep rt = Ac * kc + gK.rows(0, dc) - kc.compose(Rt, cap);
  TaylorRep kut(dc, du, cap), kst(dc, ds, cap);
  if (du) kut = Aui * (in.k_u.taylor().compose(Rt, cap) - gK.rows(dc, du));
  if (ds) {
    TaylorRep Tt = TaylorRep::linear(p.linear.A_c_inv(), cap) + in.t.taylor().with_cap(cap);
    kst = As * in.k_s.taylor().compose(Tt, cap) + p.g_raw.compose(Kt.compose(Tt, cap), cap).rows(dc + du, ds);
  }
  // orders 0 and 1 vanish exactly
  for (TaylorRep* T : {&rt, &kut, &kst})
    for (int i = 0; i < T->basis().degree_end(1); ++i) T->coeffs().col(i).setZero();

  ConjugacyTriple out;
  out.r = SmoothMapRep::sampled(rt, r);
  out.k_u = SmoothMapRep::sampled(kut, ku);
  out.k_s = SmoothMapRep::sampled(kst, ks);
  out.t = in.t;
  return out;
}

struct TraceRow {
  int sweep = 0;
  double d0 = 0, d1 = 0;          // ‖Λ_k − Λ_{k−1}‖₀, ‖·‖₁ in input coordinates
  double ratio0 = 0, ratio1 = 0;  // successive-difference ratios (0 on the first sweep)
  double inversion_residual = 0;
  double taylor_change = 0;       // max coefficient change of the companion tables
};

struct FixedPointResult {
  ConjugacyTriple triple;         // in input coordinates
  ConjugacyTriple scaled_triple;  // for the problem actually iterated
  ProblemInstance scaled_problem;
  ConstantsLedger scaled_ledger;
  double scale = 1.0;
  double eps0 = 0.0;
  std::vector<TraceRow> trace;
  bool converged = false;
};

inline double field_sup(const GridRep& g, const Blocks& out) {
  double m = 0.0;
  for (long j = 0; j < g.spec().nodes(); ++j) m = std::max(m, block_norm(g.values().col(j), out));
  return m;
}

// C⁰ and C¹ norms of Λ − Λ̃ on the grid nodes (C⁰ part scaled by s to input coordinates)
inline std::pair<double, double> triple_difference(const ProblemInstance& p, const ConjugacyTriple& a,
                                                   const ConjugacyTriple& b, double s = 1.0) {
  const Blocks in = p.center_blocks();
  double d0 = 0.0, dd = 0.0;
  auto one = [&](const SmoothMapRep& f, const SmoothMapRep& g, const Blocks& out) {
    GridRep diff = *f.grid();
    diff.values() -= g.grid()->values();
    d0 = std::max(d0, field_sup(diff, out));
    SmoothMapRep df = SmoothMapRep::sampled(TaylorRep(in[0], diff.codomain_dim(), 1), diff);
    dd = std::max(dd, derivative_sup(df, 1, diff.spec().half_width, out, in).value);
  };
  one(a.r, b.r, in);
  one(a.k_u, b.k_u, {p.dim_u()});
  one(a.k_s, b.k_s, {p.dim_s()});
  return {s * d0, std::max(s * d0, dd)};
}

inline double taylor_change(const ConjugacyTriple& a, const ConjugacyTriple& b) {
  return std::max({(a.r.taylor() - b.r.taylor()).max_abs(), (a.k_u.taylor() - b.k_u.taylor()).max_abs(),
                   (a.k_s.taylor() - b.k_s.taylor()).max_abs()});
}

// Picks the rescaling s so that the iterated problem has ε·s below ε₀.
inline double choose_scale(const ConstantsLedger& l, const Settings& st, double* eps0_out = nullptr) {
  if (!l.feasible()) fail(ErrorKind::InfeasibleConstants, l.first_violation()->name + " violated");
  double eps0 = epsilon_threshold(l, Stage::c1());
  if (eps0_out) *eps0_out = eps0;
  if (l.eps < eps0) return 1.0;
  if (!st.auto_rescale)
    fail(ErrorKind::EpsilonTooLarge, "ε = " + std::to_string(l.eps) + " ≥ ε₀ = " + std::to_string(eps0));
  return 0.5 * eps0 / l.eps;
}

// Λ_{k+1} = Θ(Λ_k) from Λ₀ (zero by default) until ‖Λ_{k+1} − Λ_k‖₁ ≤ tol and the
// Taylor companion has settled. Problems with ε ≥ ε₀ are solved in rescaled form.
inline FixedPointResult solve_fixed_point(const ProblemInstance& p, const ConstantsLedger& l, double tol,
                                          int max_iter, const ConjugacyTriple* seed = nullptr) {
  FixedPointResult res;
  res.scale = choose_scale(l, p.settings, &res.eps0);
  const double s = res.scale;
  res.scaled_problem = s == 1.0 ? p : p.scaled(s);
  res.scaled_ledger = s == 1.0 ? l : derive_ledger(l.norms, l.L_g, l.L_c, l.eps * s, l.n);
  const ProblemInstance& ps = res.scaled_problem;

  ConjugacyTriple L = zero_triple(ps);
  if (seed) {
    // seed given in input coordinates: h ↦ s⁻¹ h(s·) resampled on the scaled grid
    const GridSpec spec = ps.center_grid();
    auto resample = [&](const SmoothMapRep& f, int codim) {
      GridRep g = GridRep::sample(spec, codim, [&](const Eigen::VectorXd& x) { Eigen::VectorXd v = f.eval(s * x) / s; return v; },
                                  ps.settings.stencil_order);
      return SmoothMapRep::sampled(f.taylor().scaled(s).with_cap(ps.settings.degree_cap), g);
    };
    L.r = resample(seed->r, ps.dim_c());
    L.k_u = resample(seed->k_u, ps.dim_u());
    L.k_s = resample(seed->k_s, ps.dim_s());
  }
  double prev0 = 0.0, prev1 = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    TraceRow row;
    row.sweep = k;
    ConjugacyTriple next = theta_apply(L, ps, res.scaled_ledger, &row.inversion_residual);
    std::tie(row.d0, row.d1) = triple_difference(ps, next, L, s);
    row.taylor_change = taylor_change(next, L);
    row.ratio0 = prev0 > 0.0 ? row.d0 / prev0 : 0.0;
    row.ratio1 = prev1 > 0.0 ? row.d1 / prev1 : 0.0;
    prev0 = row.d0;
    prev1 = row.d1;
    res.trace.push_back(row);
    L = next;
    if (row.d1 <= tol && row.taylor_change <= tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) fail(ErrorKind::NoConvergence, "fixed point not reached in " + std::to_string(max_iter) + " sweeps");
  L.t = refresh_inverse(ps, L.r);
  res.scaled_triple = L;
  res.triple = unscale(L, s);
  return res;
}

}  // namespace manicore
