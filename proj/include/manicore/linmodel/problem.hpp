#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "manicore/errors.hpp"
#include "manicore/funcspace/smooth_map.hpp"
#include "manicore/funcspace/taylor_rep.hpp"
#include "manicore/linmodel/cutoff.hpp"
#include "manicore/linmodel/splitting.hpp"

namespace manicore {

struct Settings {
  double unit_circle_tol = 1e-6;
  double tol = 1e-10;       // fixed-point stopping tolerance in the C¹ difference
  int max_iter = 500;
  int grid_points = 81;     // per center axis
  int degree_cap = 6;       // Taylor companion tables
  int cutoff_smoothness = 0;  // 0: max(2, n)
  int stencil_order = 4;
  double rescale_factor = 0.02;
  bool auto_rescale = true;
};

struct ProblemInstance {
  Eigen::MatrixXd A;  // ambient
  SpaceSplitting splitting;
  SplitLinearMap linear;
  TaylorRep g_raw;   // block coordinates, polynomial
  TaylorRep kc_raw;  // X_c → X_c, polynomial
  CutoffFunction cutoff;         // on X, one ball per block
  CutoffFunction center_cutoff;  // on X_c
  SmoothMapRep g;    // g_raw·ξ
  SmoothMapRep k_c;  // kc_raw·ξ_c
  int n = 2;
  Settings settings;
  double scale = 1.0;  // this instance is h ↦ s⁻¹h(s·) of the input when scale = s ≠ 1

  int dim() const { return splitting.dim(); }
  int dim_c() const { return splitting.dim_c; }
  int dim_u() const { return splitting.dim_u; }
  int dim_s() const { return splitting.dim_s; }
  Blocks blocks() const { return splitting.blocks(); }
  Blocks center_blocks() const { return single_block(dim_c()); }
  Blocks hyperbolic_blocks() const { return {dim_u(), dim_s()}; }

  // F(z) = A z + g(z) in block coordinates
  Eigen::VectorXd F(const Eigen::VectorXd& z) const { return linear.block_diagonal() * z + g.eval(z); }

  // grid for the unknowns on X_c, slightly larger than the outer ball
  GridSpec center_grid() const { return GridSpec{dim_c(), 1.05 * cutoff.outer(), settings.grid_points}; }

  ProblemInstance scaled(double s) const;
};

inline SmoothMapRep localize(const TaylorRep& g_raw, const CutoffFunction& cutoff) {
  TaylorRep p = g_raw;
  p.set_truncated(false);
  return SmoothMapRep::localized(std::move(p), cutoff);
}

// Product-rule bounds on the localized map from coefficient majorants of g_raw
// over the box of half-width `outer` and the closed-form cutoff bounds.
struct LocalizedBounds {
  double d1 = 0.0, d2 = 0.0;
};

inline LocalizedBounds product_rule_bounds(const TaylorRep& g_raw, const CutoffFunction& c) {
  const double R = c.outer();
  double g0 = g_raw.derivative_majorant(0, R), g1 = g_raw.derivative_majorant(1, R),
         g2 = g_raw.derivative_majorant(2, R);
  return {g1 + g0 * c.d1_bound(), g2 + 2.0 * g1 * c.d1_bound() + g0 * c.d2_bound()};
}

// f(0) = 0 and Df(0) = 0 on the table, and ‖f(x)‖/‖x‖² stays bounded along rays to 0.
inline bool vanishes_to_second_order(const TaylorRep& f) {
  const MonomialBasis& B = f.basis();
  for (int i = 0; i < B.degree_end(std::min(1, f.degree_cap())); ++i)
    if (!f.coeffs().col(i).isZero(0.0)) return false;
  const int n = f.domain_dim();
  for (int dir = 0; dir < 3; ++dir) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    if (dir == 1) v(0) = -1.0;
    if (dir == 2)
      for (int i = 0; i < n; ++i) v(i) = std::cos(1.0 + i);
    double first = -1.0, last = 0.0;
    for (int k = 10; k <= 30; ++k) {
      Eigen::VectorXd x = std::ldexp(1.0, -k) * v;
      last = f.eval(x).norm() / x.squaredNorm();
      if (first < 0.0) first = last;
    }
    if (last > 4.0 * first + 1e-300) return false;
  }
  return true;
}

inline ProblemInstance make_problem(const Eigen::MatrixXd& A, const TaylorRep& g_ambient, const TaylorRep& kc,
                                    double inner, double outer, int n, Settings settings = {}) {
  if (n < 2) fail(ErrorKind::ConfigError, "order_n must be at least 2");
  const int d = static_cast<int>(A.rows());
  if (g_ambient.domain_dim() != d || g_ambient.codomain_dim() != d)
    fail(ErrorKind::ConfigError, "g_coeffs dimension does not match matrix_A");
  if (settings.cutoff_smoothness == 0) settings.cutoff_smoothness = std::max(2, n);
  if (settings.cutoff_smoothness < n)
    fail(ErrorKind::InsufficientSmoothness, "cutoff smoothness below order_n");
  if (settings.grid_points < 2 * settings.stencil_order + n + 4)
    fail(ErrorKind::InsufficientSmoothness, "grid too coarse for the stencils");

  LinearModel lm = build_splitting(A, settings.unit_circle_tol);
  SplitLinearMap lin = lm.linear;
  if (!gap_condition(lin.norms, n)) {
    SplitLinearMap r = rescale_norm(lin, n, settings.rescale_factor);
    lm.splitting = apply_rescaling(lm.splitting, lin, r);
    lin = r;
  }
  const int dc = lm.splitting.dim_c;
  if (kc.domain_dim() != dc || kc.codomain_dim() != dc)
    fail(ErrorKind::ConfigError, "kc_coeffs dimension does not match the center dimension");

  ProblemInstance p;
  p.A = A;
  p.splitting = lm.splitting;
  p.linear = lin;
  p.n = n;
  p.settings = settings;
  // g in block coordinates: z ↦ P g(P⁻¹ z)
  TaylorRep inner_map = TaylorRep::linear(lm.splitting.basis_change_inv, g_ambient.degree_cap());
  p.g_raw = lm.splitting.basis_change * g_ambient.compose(inner_map, g_ambient.degree_cap());
  p.g_raw.set_truncated(false);
  p.kc_raw = kc;
  p.kc_raw.set_truncated(false);
  if (!vanishes_to_second_order(p.g_raw))
    fail(ErrorKind::InvalidNonlinearity, "g must satisfy g(0) = 0 and Dg(0) = 0");
  if (!vanishes_to_second_order(p.kc_raw))
    fail(ErrorKind::InvalidNonlinearity, "k_c must satisfy k_c(0) = 0 and Dk_c(0) = 0");
  p.cutoff = CutoffFunction(inner, outer, lm.splitting.blocks(), settings.cutoff_smoothness);
  p.center_cutoff = CutoffFunction(inner, outer, {dc}, settings.cutoff_smoothness);
  p.g = localize(p.g_raw, p.cutoff);
  p.k_c = localize(p.kc_raw, p.center_cutoff);
  return p;
}

inline ProblemInstance ProblemInstance::scaled(double s) const {
  ProblemInstance p = *this;
  p.g_raw = g_raw.scaled(s);
  p.kc_raw = kc_raw.scaled(s);
  p.cutoff = cutoff.scaled(s);
  p.center_cutoff = center_cutoff.scaled(s);
  p.g = localize(p.g_raw, p.cutoff);
  p.k_c = localize(p.kc_raw, p.center_cutoff);
  p.scale = scale * s;
  return p;
}

// The scalar inputs of the ledger, estimated from the localized maps.
struct NonlinearityBounds {
  double L_g = 0, L_c = 0, eps = 0;  // sampled estimates used by the ledger
  double D2g = 0, D2kc = 0;
  LocalizedBounds g_product, kc_product;  // product-rule upper bounds, reported only
};

inline NonlinearityBounds estimate_bounds(const ProblemInstance& p) {
  NonlinearityBounds b;
  const double R = p.cutoff.outer();
  if (p.g_raw.max_abs() > 0.0) {
    auto pts = sample_box(p.dim(), R, p.dim() <= 2 ? 40000 : 30000);
    b.L_g = sampled_derivative_sup(p.g, 1, pts, p.blocks(), p.blocks());
    b.D2g = sampled_derivative_sup(p.g, 2, pts, p.blocks(), p.blocks());
    b.g_product = product_rule_bounds(p.g_raw, p.cutoff);
  }
  if (p.kc_raw.max_abs() > 0.0) {
    auto pts = sample_box(p.dim_c(), R, 40000);
    b.L_c = sampled_derivative_sup(p.k_c, 1, pts, p.center_blocks(), p.center_blocks());
    b.D2kc = sampled_derivative_sup(p.k_c, 2, pts, p.center_blocks(), p.center_blocks());
    b.kc_product = product_rule_bounds(p.kc_raw, p.center_cutoff);
  }
  b.eps = std::max(b.D2g, b.D2kc);
  return b;
}

}  // namespace manicore
