#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/inversion.hpp"
#include "manicore/parallel.hpp"
#include "manicore/theta/theta.hpp"

namespace manicore {

// Tensor fields: at each node a symmetric m-linear map X_c^m → Y stored as the
// degree-m block (rows × N_m, column-major) of a homogeneous table.
inline int monomial_count(int dim, int m) {
  const MonomialBasis& B = *MonomialBasis::get(dim, m);
  return B.degree_end(m) - B.degree_begin(m);
}

inline Eigen::VectorXd flatten_top(const TaylorRep& T, int m) {
  const MonomialBasis& B = T.basis();
  const int b = B.degree_begin(m), N = B.degree_end(m) - b, rows = T.codomain_dim();
  Eigen::VectorXd v(rows * N);
  for (int k = 0; k < N; ++k) v.segment(k * rows, rows) = T.coeffs().col(b + k);
  return v;
}

// adds the flattened degree-m block `v` into T
inline void add_top(TaylorRep& T, const Eigen::VectorXd& v, int m) {
  const MonomialBasis& B = T.basis();
  const int b = B.degree_begin(m), N = B.degree_end(m) - b, rows = T.codomain_dim();
  for (int k = 0; k < N; ++k) T.coeffs().col(b + k) += v.segment(k * rows, rows);
}

inline TaylorRep tensor_table(const Eigen::VectorXd& v, int dim, int rows, int m) {
  TaylorRep T(dim, rows, m);
  add_top(T, v, m);
  return T;
}

struct DerivativeTriple {
  int m = 1;
  SmoothMapRep rho, kappa_u, kappa_s;  // flattened tensor fields
};

// table of x ↦ (∂^β f(x)/β!)_{|β| = m}, flattened like the tensor fields
inline TaylorRep derivative_companion(const TaylorRep& f, int m) {
  const int dim = f.domain_dim(), rows = f.codomain_dim();
  const MonomialBasis& Bm = *MonomialBasis::get(dim, m);
  const int b = Bm.degree_begin(m), N = Bm.degree_end(m) - b;
  const int cap = std::max(0, f.degree_cap() - m);
  TaylorRep out(dim, rows * N, cap, true);
  for (int k = 0; k < N; ++k) {
    const MultiIndex& beta = Bm[b + k];
    TaylorRep d = f;
    for (int v = 0; v < dim; ++v)
      for (int i = 0; i < beta[v]; ++i) d = d.partial(v);
    d = d.with_cap(cap);
    d *= 1.0 / multi_factorial(beta);
    out.coeffs().middleRows(k * rows, rows) = d.coeffs();
  }
  return out;
}

// D^m of a sampled field by finite-difference stencils at the nodes
inline SmoothMapRep fd_tensor_field(const SmoothMapRep& f, int m) {
  const GridRep& g = *f.grid();
  const int dim = g.spec().dim, rows = g.codomain_dim();
  GridRep out(g.spec(), rows * monomial_count(dim, m), g.stencil_order());
  parallel_for(g.spec().nodes(), [&](long j) { out.values().col(j) = flatten_top(g.jet(g.spec().node(j), m), m); });
  return SmoothMapRep::sampled(derivative_companion(f.taylor(), m), out);
}

inline DerivativeTriple fd_derivative(const ConjugacyTriple& L, int m) {
  return {m, fd_tensor_field(L.r, m), fd_tensor_field(L.k_u, m), fd_tensor_field(L.k_s, m)};
}

inline DerivativeTriple zero_derivative(const ProblemInstance& p, const ConjugacyTriple& L, int m) {
  DerivativeTriple z = fd_derivative(L, m);
  for (SmoothMapRep* f : {&z.rho, &z.kappa_u, &z.kappa_s}) {
    GridRep g = *f->grid();
    g.values().setZero();
    *f = SmoothMapRep::sampled(f->taylor(), g);
  }
  (void)p;
  return z;
}

namespace detail {

// Jet of one Λ component at y through degree m: value from Λ, orders 1..m−1 from the
// lower levels, order m from `top`.
struct ComponentFields {
  const SmoothMapRep* base;
  std::vector<const SmoothMapRep*> levels;  // levels[j-1] holds D^j
  const SmoothMapRep* top;
  int rows;
};

inline TaylorRep component_jet(const ComponentFields& c, int dim, int m, const Eigen::VectorXd& y, long node = -1) {
  TaylorRep J(dim, c.rows, m);
  if (c.rows == 0) return J;
  auto at = [&](const SmoothMapRep& f) -> Eigen::VectorXd {
    if (node >= 0) return f.grid()->values().col(node);
    return f.eval(y);
  };
  J.coeffs().col(0) = at(*c.base);
  for (int j = 1; j < m; ++j) add_top(J, at(*c.levels[j - 1]), j);
  add_top(J, at(*c.top), m);
  return J;
}

inline TaylorRep without_constant(TaylorRep T) {
  T.coeffs().col(0).setZero();
  return T;
}

}  // namespace detail

// Q_ρ(x) = (A_c + ρ(T(x)))⁻¹
inline Eigen::MatrixXd P_rho(const ProblemInstance& p, const DerivativeTriple& M, const Eigen::VectorXd& y) {
  return p.linear.A_c + tensor_table(M.rho.eval(y), p.dim_c(), p.dim_c(), 1).linear_part();
}

inline Eigen::MatrixXd Q_rho(const ProblemInstance& p, const ConjugacyTriple& L, const DerivativeTriple& M,
                             const Eigen::VectorXd& x) {
  Eigen::MatrixXd P = P_rho(p, M, eval_T(p, L, x));
  if (condition_number(P) > 1e12) fail(ErrorKind::SingularPRho, "P_ρ(T(x)) is numerically singular");
  return P.inverse();
}

// One application of the derivative operator at level m: Θ^[2] for m = 1, Θ^[m+1] for m ≥ 2.
// `lower` holds the fixed points of the levels 1..m−1 (D^jΛ); Λ is the fixed point of Θ.
// Each component is the degree-m part of the jet identity behind Θ, with the unknown
// order-m derivatives replaced by 𝓜. At m = 1 this is
//   ρ   ↦ A_c Dk_c + Dg_c(K)κ − Dk_c(R) P_ρ
//   κ_u ↦ −A_u⁻¹ Dg_u(K)κ + A_u⁻¹ κ_u(R) P_ρ
//   κ_s ↦ A_s κ_s(T) Q_ρ + Dg_s(K∘T) κ(T) Q_ρ,     κ = (Id + Dk_c, κ_u, κ_s),
// and for m ≥ 2 the forcing terms (partition remainders and D^mT) come out of the
// same jet compositions.
inline DerivativeTriple theta_level_apply(const DerivativeTriple& M, const ConjugacyTriple& L,
                                          const std::vector<DerivativeTriple>& lower, const ProblemInstance& p) {
  const int m = M.m;
  if (m < 1) fail(ErrorKind::InsufficientSmoothness, "derivative level must be at least 1");
  if (static_cast<int>(lower.size()) < m - 1) fail(ErrorKind::InsufficientSmoothness, "missing lower derivative levels");
  const int dc = p.dim_c(), du = p.dim_u(), ds = p.dim_s();
  const Eigen::MatrixXd& Ac = p.linear.A_c;
  const Eigen::MatrixXd Aci = p.linear.A_c_inv();
  const Eigen::MatrixXd Aui = p.linear.A_u_inv();
  const Eigen::MatrixXd& As = p.linear.A_s;

  detail::ComponentFields cr{&L.r, {}, &M.rho, dc}, cu{&L.k_u, {}, &M.kappa_u, du}, cs{&L.k_s, {}, &M.kappa_s, ds};
  for (int j = 1; j < m; ++j) {
    cr.levels.push_back(&lower[j - 1].rho);
    cu.levels.push_back(&lower[j - 1].kappa_u);
    cs.levels.push_back(&lower[j - 1].kappa_s);
  }
  auto Kjet = [&](const Eigen::VectorXd& y, long node) {
    TaylorRep c = p.k_c.jet(y, m) + TaylorRep::identity(dc, m);
    c.coeffs().col(0) += y;
    return TaylorRep::stack({c, detail::component_jet(cu, dc, m, y, node), detail::component_jet(cs, dc, m, y, node)});
  };
  auto Rjet = [&](const Eigen::VectorXd& y, long node) {
    TaylorRep R = detail::component_jet(cr, dc, m, y, node) + TaylorRep::linear(Ac, m);
    R.coeffs().col(0) += Ac * y;
    return R;
  };

  const GridSpec spec = M.rho.grid()->spec();
  const int so = M.rho.grid()->stencil_order();
  GridRep gr(spec, M.rho.grid()->codomain_dim(), so), gu(spec, M.kappa_u.grid()->codomain_dim(), so),
      gs(spec, M.kappa_s.grid()->codomain_dim(), so);
  parallel_for(spec.nodes(), [&](long j) {
    const Eigen::VectorXd x = spec.node(j);
    TaylorRep Kx = Kjet(x, j);
    Eigen::VectorXd K0 = Kx.value_at_zero();
    TaylorRep Kv = detail::without_constant(Kx);
    TaylorRep gK = p.g.jet(K0, m);
    TaylorRep gKv = gK.compose(Kv, m);
    TaylorRep Rx = Rjet(x, j);
    Eigen::VectorXd R0 = Rx.value_at_zero();
    TaylorRep Rv = detail::without_constant(Rx);

    TaylorRep rn = Ac * p.k_c.jet(x, m) + gKv.rows(0, dc) - p.k_c.jet(R0, m).compose(Rv, m);
    gr.values().col(j) = flatten_top(rn, m);
    if (du) {
      TaylorRep un = detail::component_jet(cu, dc, m, R0).compose(Rv, m) - gKv.rows(dc, du);
      gu.values().col(j) = flatten_top(Aui * un, m);
    }
    if (ds) {
      Eigen::VectorXd Tx = Aci * x + L.t.grid()->values().col(j);
      TaylorRep Tv = detail::without_constant(inverse_of_jet(Rjet(Tx, -1), Tx, m));
      TaylorRep KT = Kjet(Tx, -1);
      Eigen::VectorXd KT0 = KT.value_at_zero();
      TaylorRep KTv = detail::without_constant(KT).compose(Tv, m);
      TaylorRep sn = As * detail::component_jet(cs, dc, m, Tx).compose(Tv, m) +
                     p.g.jet(KT0, m).compose(KTv, m).rows(dc + du, ds);
      gs.values().col(j) = flatten_top(sn, m);
    }
  });
  return {m, SmoothMapRep::sampled(M.rho.taylor(), gr), SmoothMapRep::sampled(M.kappa_u.taylor(), gu),
          SmoothMapRep::sampled(M.kappa_s.taylor(), gs)};
}

inline DerivativeTriple theta2_apply(const DerivativeTriple& M, const ConjugacyTriple& L, const ProblemInstance& p) {
  if (M.m != 1) fail(ErrorKind::InsufficientSmoothness, "Θ^[2] acts on first derivatives");
  return theta_level_apply(M, L, {}, p);
}

inline DerivativeTriple theta_m_apply(const DerivativeTriple& M, const ConjugacyTriple& L,
                                      const std::vector<DerivativeTriple>& lower, const ProblemInstance& p) {
  if (M.m < 2 || M.m >= p.n) fail(ErrorKind::InsufficientSmoothness, "Θ^[m+1] needs 2 ≤ m < n");
  return theta_level_apply(M, L, lower, p);
}

// Frobenius norm per output block of the symmetric tensor with table block v
inline double tensor_frobenius(const Eigen::VectorXd& v, int dim, int rows, int m, const Blocks& out) {
  const MonomialBasis& B = *MonomialBasis::get(dim, m);
  const int b = B.degree_begin(m), N = B.degree_end(m) - b;
  double best = 0.0;
  int at = 0;
  for (int bo : out) {
    double s = 0.0;
    for (int k = 0; k < N; ++k) {
      double w = factorial(m) * multi_factorial(B[b + k]);
      s += w * v.segment(k * rows + at, bo).squaredNorm();
    }
    best = std::max(best, std::sqrt(s));
    at += bo;
  }
  return best;
}

struct TensorFieldNorms {
  double sup = 0.0;    // sup_x ‖𝓜(x)‖
  double dsup = 0.0;   // sup_x ‖D𝓜(x)‖ (Frobenius over directions)
  double at_zero = 0.0;
};

inline TensorFieldNorms tensor_field_norms(const SmoothMapRep& f, int m, int rows, const Blocks& out) {
  TensorFieldNorms n;
  if (rows == 0) return n;
  const GridRep& g = *f.grid();
  const int dim = g.spec().dim;
  std::vector<GridRep> dg;
  for (int v = 0; v < dim; ++v) {
    MultiIndex a(dim, 0);
    a[v] = 1;
    dg.push_back(g.derivative_grid(a));
  }
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
  n.at_zero = tensor_frobenius(g.eval(zero), dim, rows, m, out);
  for (long j = 0; j < g.spec().nodes(); ++j) {
    n.sup = std::max(n.sup, tensor_frobenius(g.values().col(j), dim, rows, m, out));
    double s = 0.0;
    for (int v = 0; v < dim; ++v) {
      double e = tensor_frobenius(dg[v].values().col(j), dim, rows, m, out);
      s += e * e;
    }
    n.dsup = std::max(n.dsup, std::sqrt(s));
  }
  return n;
}

// Γ₂(δ): 𝓜(0) = 0, ‖ρ‖₀ ≤ L_r, ‖κ_u‖₀ ≤ L_u, ‖κ_s‖₀ ≤ L_s, ‖D𝓜‖₀ ≤ δ.
// Γ_{m+1} (m ≥ 2) only asks for bounded values and first derivatives.
inline MembershipReport derivative_membership(const ProblemInstance& p, const DerivativeTriple& M,
                                              const ConstantsLedger& l) {
  const double margin = 1.0 + 1e-9;
  const int dc = p.dim_c();
  struct Item {
    const SmoothMapRep* f;
    int rows;
    double L;
    const char* name;
  } items[] = {{&M.rho, dc, l.L_r, "ρ"}, {&M.kappa_u, p.dim_u(), l.L_u, "κ_u"}, {&M.kappa_s, p.dim_s(), l.L_s, "κ_s"}};
  for (const auto& it : items) {
    TensorFieldNorms n = tensor_field_norms(*it.f, M.m, it.rows, {it.rows});
    if (!std::isfinite(n.sup) || !std::isfinite(n.dsup))
      return {false, std::string("bounded C¹ norm (") + it.name + ")"};
    if (M.m != 1) continue;
    if (n.at_zero > 1e-12) return {false, std::string("𝓜(0) = 0 (") + it.name + ")"};
    if (n.sup > it.L * margin)
      return {false, std::string("‖") + it.name + "‖₀ ≤ L (" + std::to_string(n.sup) + " > " + std::to_string(it.L) + ")"};
    if (n.dsup > l.delta * margin)
      return {false, std::string("‖D𝓜‖₀ ≤ δ(ε) (") + it.name + ": " + std::to_string(n.dsup) + " > " +
                         std::to_string(l.delta) + ")"};
  }
  return {};
}

inline std::pair<double, double> derivative_difference(const DerivativeTriple& a, const DerivativeTriple& b) {
  double d0 = 0.0, d1 = 0.0;
  auto one = [&](const SmoothMapRep& f, const SmoothMapRep& g) {
    if (f.grid()->codomain_dim() == 0) return;
    GridRep diff = *f.grid();
    diff.values() -= g.grid()->values();
    for (long j = 0; j < diff.spec().nodes(); ++j) d0 = std::max(d0, diff.values().col(j).norm());
    const int dim = diff.spec().dim;
    for (int v = 0; v < dim; ++v) {
      MultiIndex al(dim, 0);
      al[v] = 1;
      GridRep dd = diff.derivative_grid(al);
      for (long j = 0; j < dd.spec().nodes(); ++j) d1 = std::max(d1, dd.values().col(j).norm());
    }
  };
  one(a.rho, b.rho);
  one(a.kappa_u, b.kappa_u);
  one(a.kappa_s, b.kappa_s);
  return {d0, std::max(d0, d1)};
}

// Agreement of a derivative level with finite differences of Λ. At every node of the
// half-resolution grid the discrepancy |𝓜 − D_h^mΛ| must stay below the resolution
// change |D_h^mΛ − D_{2h}^mΛ| of the stencil itself (plus an absolute floor).
struct StencilCheck {
  double max_diff = 0.0;    // sup |𝓜 − D_h^mΛ|
  double max_excess = 0.0;  // sup of diff − tolerance (≤ 0 on pass)
  double worst_ratio = 0.0; // sup diff / tolerance
  long nodes = 0;
  bool pass = true;
};

inline GridRep coarsen(const GridRep& g) {
  const GridSpec& f = g.spec();
  if (f.points % 2 == 0) fail(ErrorKind::ConfigError, "grid coarsening needs an odd number of points");
  GridSpec c{f.dim, f.half_width, (f.points + 1) / 2};
  GridRep out(c, g.codomain_dim(), g.stencil_order());
  for (long j = 0; j < c.nodes(); ++j) {
    std::vector<int> idx = c.multi(j);
    for (int& i : idx) i *= 2;
    out.values().col(j) = g.values().col(f.flat(idx));
  }
  return out;
}

inline StencilCheck fd_agreement(const DerivativeTriple& M, const ConjugacyTriple& L, double floor) {
  StencilCheck sc;
  auto one = [&](const SmoothMapRep& fixed, const SmoothMapRep& base) {
    if (base.grid()->codomain_dim() == 0) return;
    const GridRep& g = *base.grid();
    const GridRep coarse = coarsen(g);
    const GridSpec& c = coarse.spec();
    for (long j = 0; j < c.nodes(); ++j) {
      std::vector<int> idx = c.multi(j);
      for (int& i : idx) i *= 2;
      const long fj = g.spec().flat(idx);
      const Eigen::VectorXd x = g.spec().node(fj);
      Eigen::VectorXd fine = flatten_top(g.jet(x, M.m), M.m);
      Eigen::VectorXd crs = flatten_top(coarse.jet(x, M.m), M.m);
      double diff = (fixed.grid()->values().col(fj) - fine).norm();
      double tol = (fine - crs).norm() + floor;
      sc.max_diff = std::max(sc.max_diff, diff);
      sc.max_excess = std::max(sc.max_excess, diff - tol);
      sc.worst_ratio = std::max(sc.worst_ratio, diff / tol);
      ++sc.nodes;
    }
  };
  sc.max_excess = -std::numeric_limits<double>::infinity();
  one(M.rho, L.r);
  one(M.kappa_u, L.k_u);
  one(M.kappa_s, L.k_s);
  sc.pass = sc.max_excess <= 0.0;
  return sc;
}

struct LevelResult {
  DerivativeTriple fixed;
  std::vector<TraceRow> trace;
  bool converged = false;
};

// Fixed point of the level-m operator, started from `start`.
inline LevelResult solve_level(const ProblemInstance& p, const ConjugacyTriple& L,
                               const std::vector<DerivativeTriple>& lower, DerivativeTriple start, double tol,
                               int max_iter) {
  LevelResult res;
  DerivativeTriple M = std::move(start);
  double prev0 = 0.0, prev1 = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    DerivativeTriple next = theta_level_apply(M, L, lower, p);
    TraceRow row;
    row.sweep = k;
    std::tie(row.d0, row.d1) = derivative_difference(next, M);
    row.ratio0 = prev0 > 0.0 ? row.d0 / prev0 : 0.0;
    row.ratio1 = prev1 > 0.0 ? row.d1 / prev1 : 0.0;
    prev0 = row.d0;
    prev1 = row.d1;
    res.trace.push_back(row);
    M = std::move(next);
    if (row.d1 <= tol) {
      res.converged = true;
      break;
    }
  }
  res.fixed = std::move(M);
  if (!res.converged) fail(ErrorKind::NoConvergence, "derivative level " + std::to_string(res.fixed.m) + " did not converge");
  return res;
}

// Runs levels 1..levels in order; each level starts from the finite-difference D^mΛ.
inline std::vector<LevelResult> bootstrap(const ProblemInstance& p, const ConjugacyTriple& L, int levels, double tol,
                                          int max_iter = 500) {
  if (levels >= p.n) fail(ErrorKind::InsufficientSmoothness, "bootstrap levels must stay below order_n");
  std::vector<LevelResult> out;
  std::vector<DerivativeTriple> lower;
  for (int m = 1; m <= levels; ++m) {
    out.push_back(solve_level(p, L, lower, fd_derivative(L, m), tol, max_iter));
    lower.push_back(out.back().fixed);
  }
  return out;
}

}  // namespace manicore
