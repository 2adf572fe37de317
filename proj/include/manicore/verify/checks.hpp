#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/faa_di_bruno.hpp"
#include "manicore/funcspace/grid_rep.hpp"
#include "manicore/funcspace/smooth_map.hpp"
#include "manicore/linmodel/problem.hpp"
#include "manicore/parallel.hpp"
#include "manicore/theta/triple.hpp"

namespace manicore {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
  std::string detail;
};

// uniform samples in the Euclidean ball of radius ρ
inline std::vector<Eigen::VectorXd> random_ball(int dim, double rho, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v(dim);
    for (int j = 0; j < dim; ++j) v(j) = normal(rng);
    double n = v.norm();
    if (n == 0.0) v(0) = n = 1.0;
    pts.push_back(v * (rho * std::pow(unif(rng), 1.0 / dim) / n));
  }
  return pts;
}

// K(x) = ι x + (k_c, k_u, k_s)(x) for a problem and a triple
inline Eigen::VectorXd graph_point(const SmoothMapRep& kc, const SmoothMapRep& ku, const SmoothMapRep& ks,
                                   const Eigen::VectorXd& x) {
  const int dc = static_cast<int>(x.size()), du = ku.codomain_dim(), ds = ks.codomain_dim();
  Eigen::VectorXd z(dc + du + ds);
  z << x + kc.eval(x), ku.eval(x), ks.eval(x);
  return z;
}

// x' with x' + k_c(x') = y, by Picard sweeps from y
inline Eigen::VectorXd center_projection(const SmoothMapRep& kc, const Eigen::VectorXd& y, double tol = 1e-15,
                                         int max_iter = 200) {
  Eigen::VectorXd x = y;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = y - kc.eval(x);
    double d = (next - x).norm();
    x = next;
    if (d <= tol * (1.0 + y.norm())) return x;
  }
  fail(ErrorKind::ProjectionFailure, "center-coordinate projection did not converge");
}

struct InvarianceReport {
  double graph_deviation = 0.0;      // dist(F(K(x)), Image K) via center projection
  double conjugacy_deviation = 0.0;  // ‖F(K(x)) − K(R(x))‖
  double max() const { return std::max(graph_deviation, conjugacy_deviation); }
};

inline InvarianceReport invariance_check(const ProblemInstance& p, const ConjugacyTriple& L, int samples, double radius,
                                         std::uint64_t seed = 0) {
  if (radius > p.cutoff.inner() * (1.0 + 1e-12))
    fail(ErrorKind::ConfigError, "invariance radius must stay inside the inner cutoff radius");
  const int dc = p.dim_c();
  std::vector<Eigen::VectorXd> pts = random_ball(dc, radius, samples, seed);
  std::vector<double> gd(pts.size()), cd(pts.size());
  parallel_for(static_cast<long>(pts.size()), [&](long i) {
    const Eigen::VectorXd& x = pts[i];
    Eigen::VectorXd z = p.F(graph_point(p.k_c, L.k_u, L.k_s, x));
    Eigen::VectorXd xp = center_projection(p.k_c, z.head(dc));
    Eigen::VectorXd on = graph_point(p.k_c, L.k_u, L.k_s, xp);
    gd[i] = block_norm(z - on, p.blocks());
    Eigen::VectorXd Rx = p.linear.A_c * x + L.r.eval(x);
    cd[i] = block_norm(z - graph_point(p.k_c, L.k_u, L.k_s, Rx), p.blocks());
  });
  InvarianceReport rep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rep.graph_deviation = std::max(rep.graph_deviation, gd[i]);
    rep.conjugacy_deviation = std::max(rep.conjugacy_deviation, cd[i]);
  }
  return rep;
}

// DK(0) = ι exactly in the Taylor tables (K(0) = 0 too)
inline bool tangency_check(const ProblemInstance& p, const ConjugacyTriple& L) {
  for (const TaylorRep* T : {&p.kc_raw, &L.k_u.taylor(), &L.k_s.taylor()}) {
    if (T->codomain_dim() == 0) continue;
    const int end = T->basis().degree_end(std::min(1, T->degree_cap()));
    for (int i = 0; i < end; ++i)
      if (!T->coeffs().col(i).isZero(0.0)) return false;
  }
  return true;
}

// Orbits of K(x) under F against K of the R-orbit of x.
inline double orbit_shadowing(const ProblemInstance& p, const ConjugacyTriple& L, int samples, double radius, int steps,
                              std::uint64_t seed = 0) {
  std::vector<Eigen::VectorXd> pts = random_ball(p.dim_c(), radius, samples, seed);
  std::vector<double> dev(pts.size(), 0.0);
  parallel_for(static_cast<long>(pts.size()), [&](long i) {
    Eigen::VectorXd y = pts[i];
    Eigen::VectorXd z = graph_point(p.k_c, L.k_u, L.k_s, y);
    for (int k = 0; k < steps; ++k) {
      z = p.F(z);
      y = p.linear.A_c * y + L.r.eval(y);
      dev[i] = std::max(dev[i], block_norm(z - graph_point(p.k_c, L.k_u, L.k_s, y), p.blocks()));
    }
  });
  double m = 0.0;
  for (double d : dev) m = std::max(m, d);
  return m;
}

// h^ε(x) = ε⁻¹h(εx) checked three ways: coefficients (order d scales by ε^{d−1}),
// sup norms of Dh^ε and D²h^ε on matched grids, and h₁^ε∘h₂^ε = (h₁∘h₂)^ε.
struct ScalingReport {
  double coeff_error = 0.0;    // max |[h^ε]_α − ε^{|α|−1} h_α| over h₁, h₂, h₁∘h₂
  double compose_coeff_error = 0.0;
  double d1_grid_error = 0.0;  // |‖Dh^ε‖₀ − ‖Dh‖₀|
  double d2_grid_error = 0.0;  // |‖D²h^ε‖₀ − ε‖D²h‖₀|
  double compose_grid_error = 0.0;
  bool pass(double coeff_tol, double grid_tol) const {
    return coeff_error <= coeff_tol && compose_coeff_error <= coeff_tol && d1_grid_error <= grid_tol &&
           d2_grid_error <= grid_tol && compose_grid_error <= grid_tol;
  }
};

inline TaylorRep scale_by_composition(const TaylorRep& h, double eps) {
  const int n = h.domain_dim();
  TaylorRep lin = TaylorRep::linear(eps * Eigen::MatrixXd::Identity(n, n), h.degree_cap());
  return (1.0 / eps) * h.compose(lin, h.degree_cap());
}

inline double coefficient_scaling_error(const TaylorRep& h, const TaylorRep& he, double eps) {
  const MonomialBasis& B = h.basis();
  double err = 0.0;
  for (int i = 0; i < B.size(); ++i) {
    double f = std::pow(eps, B.degree(i) - 1);
    for (int c = 0; c < h.codomain_dim(); ++c) {
      double want = f * h.coeffs()(c, i);
      err = std::max(err, std::abs(he.coeffs()(c, i) - want) / std::max(1.0, std::abs(want)));
    }
  }
  return err;
}

inline double grid_sup_derivative(const GridRep& g, int k) {
  const int dim = g.spec().dim;
  double best = 0.0;
  const Blocks in = single_block(dim), out = single_block(g.codomain_dim());
  for (long j = 0; j < g.spec().nodes(); ++j)
    best = std::max(best, tensor_norm(g.jet(g.spec().node(j), k).homogeneous(k), k, out, in));
  return best;
}

inline ScalingReport scaling_check(const TaylorRep& h1, const TaylorRep& h2, double eps, double a = 1.0,
                                   int points = 41) {
  ScalingReport rep;
  const int cap = h1.degree_cap();
  rep.coeff_error = std::max(coefficient_scaling_error(h1, scale_by_composition(h1, eps), eps),
                             coefficient_scaling_error(h1, h1.scaled(eps), eps));
  rep.coeff_error = std::max(rep.coeff_error, coefficient_scaling_error(h2, scale_by_composition(h2, eps), eps));
  // (iii) on tables: h₁^ε∘h₂^ε against (h₁∘h₂)^ε
  TaylorRep lhs = scale_by_composition(h1, eps).compose(scale_by_composition(h2, eps), cap);
  TaylorRep rhs = scale_by_composition(h1.compose(h2, cap), eps);
  rep.compose_coeff_error = (lhs - rhs).max_abs() / std::max(1.0, rhs.max_abs());

  // (i), (ii) on grids over [−a, a] and [−a/ε, a/ε] with matching nodes
  const int n = h1.domain_dim();
  GridSpec s{n, a, points}, se{n, a / eps, points};
  GridRep g = GridRep::sample(s, h1.codomain_dim(), [&](const Eigen::VectorXd& x) { return h1.eval(x); });
  GridRep ge = GridRep::sample(se, h1.codomain_dim(), [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return h1.eval(eps * x) / eps; });
  double d1 = grid_sup_derivative(g, 1), d1e = grid_sup_derivative(ge, 1);
  double d2 = grid_sup_derivative(g, 2), d2e = grid_sup_derivative(ge, 2);
  rep.d1_grid_error = std::abs(d1e - d1) / std::max(1.0, d1);
  rep.d2_grid_error = std::abs(d2e - eps * d2) / std::max(1.0, d2);
  // (iii) pointwise at the scaled nodes
  for (long j = 0; j < se.nodes(); ++j) {
    Eigen::VectorXd x = se.node(j);
    Eigen::VectorXd inner = h2.eval(eps * x) / eps;
    Eigen::VectorXd l = h1.eval(eps * inner) / eps;
    Eigen::VectorXd r = h1.eval(h2.eval(eps * x)) / eps;
    rep.compose_grid_error = std::max(rep.compose_grid_error, (l - r).norm() / std::max(1.0, r.norm()));
  }
  return rep;
}

// Finite-difference partials ∂^α by tensor products of centered one-dimensional stencils.
inline Eigen::VectorXd fd_partial(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x, const MultiIndex& alpha, double h, int half_width = 5) {
  std::vector<double> nodes;
  for (int j = -half_width; j <= half_width; ++j) nodes.push_back(j * h);
  const int kmax = total_degree(alpha);
  auto w = fornberg_weights(0.0, nodes, kmax);
  const int n = static_cast<int>(x.size());
  const int width = 2 * half_width + 1;
  std::vector<int> active;
  for (int v = 0; v < n; ++v)
    if (alpha[v] > 0) active.push_back(v);
  Eigen::VectorXd acc;
  std::vector<int> pos(active.size(), 0);
  while (true) {
    double c = 1.0;
    Eigen::VectorXd y = x;
    for (std::size_t a = 0; a < active.size(); ++a) {
      c *= w[alpha[active[a]]][pos[a]];
      y(active[a]) += nodes[pos[a]];
    }
    if (c != 0.0) {
      Eigen::VectorXd v = c * f(y);
      if (acc.size() == 0) acc = v;
      else acc += v;
    }
    std::size_t a = 0;
    while (a < active.size() && pos[a] + 1 == width) pos[a++] = 0;
    if (a == active.size()) break;
    ++pos[a];
  }
  if (acc.size() == 0) acc = f(x);
  return acc;
}

// Largest |FD ∂^α − α!·c_α| over |α| = m and the nodes, relative to the largest
// analytic partial seen. `analytic` returns a table whose degree-m block is D^m/α!.
inline double fd_compare(const std::function<TaylorRep(const Eigen::VectorXd&)>& analytic,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const std::vector<Eigen::VectorXd>& pts, int m, double h) {
  if (pts.empty()) return 0.0;
  const int n = static_cast<int>(pts[0].size());
  const MonomialBasis& B = *MonomialBasis::get(n, m);
  double err = 0.0, scale = 0.0;
  for (const auto& x : pts) {
    TaylorRep J = analytic(x);
    for (int i = B.degree_begin(m); i < B.degree_end(m); ++i) {
      const MultiIndex& alpha = B[i];
      Eigen::VectorXd an = multi_factorial(alpha) * J.coeff(alpha);
      Eigen::VectorXd fd = fd_partial(f, x, alpha, h);
      err = std::max(err, (fd - an).cwiseAbs().maxCoeff());
      scale = std::max(scale, an.cwiseAbs().maxCoeff());
    }
  }
  return scale > 0.0 ? err / scale : err;
}

// Analytic D^m of f (Taylor or stencil jets) against centered finite differences at
// random points of the box of half-width a.
inline double fd_derivative_check(const SmoothMapRep& f, int m, int nodes, double a, std::uint64_t seed = 0,
                                  double h = 0.02) {
  const int stencil_support = 10;
  if (m > stencil_support) fail(ErrorKind::InsufficientSmoothness, "derivative order beyond stencil support");
  if (f.kind() == SmoothMapRep::Kind::Sampled && m > f.grid()->max_derivative())
    fail(ErrorKind::InsufficientSmoothness, "derivative order beyond grid stencil support");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < nodes; ++i) {
    Eigen::VectorXd x(f.domain_dim());
    for (int j = 0; j < x.size(); ++j) x(j) = u(rng);
    pts.push_back(x);
  }
  return fd_compare([&](const Eigen::VectorXd& x) { return f.jet(x, m); },
                    [&](const Eigen::VectorXd& x) { return f.eval(x); }, pts, m, h);
}

// Manifold images of two k_c choices. φ is recovered at the grid nodes of `a` by center
// projection, then K_a = K_b∘(Id + φ) and (Id + φ)∘R_a = R_b∘(Id + φ) are checked at random
// points with φ interpolated.
struct KcIndependenceReport {
  double image_distance = 0.0;
  double reparam_residual = 0.0;
  double dynamics_residual = 0.0;
  double phi_sup = 0.0;
};

inline KcIndependenceReport kc_independence(const ProblemInstance& pa, const ConjugacyTriple& La,
                                            const ProblemInstance& pb, const ConjugacyTriple& Lb, int samples,
                                            double radius, std::uint64_t seed = 0) {
  const int dc = pa.dim_c();
  KcIndependenceReport rep;
  std::vector<Eigen::VectorXd> pts = random_ball(dc, radius, samples, seed);
  auto proj = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd z = graph_point(pa.k_c, La.k_u, La.k_s, x);
    return center_projection(pb.k_c, z.head(dc));
  };
  for (const auto& x : pts) {
    Eigen::VectorXd z = graph_point(pa.k_c, La.k_u, La.k_s, x);
    Eigen::VectorXd xp = proj(x);
    rep.image_distance =
        std::max(rep.image_distance, block_norm(z - graph_point(pb.k_c, Lb.k_u, Lb.k_s, xp), pa.blocks()));
  }
  // φ on the nodes of a's grid restricted to the sampling ball's bounding box
  const GridSpec full = La.r.grid()->spec();
  const double step = full.step();
  int half = static_cast<int>(std::ceil(radius * 1.5 / step)) + 6;
  GridSpec local{dc, half * step, 2 * half + 1};
  GridRep phi = GridRep::sample(local, dc, [&](const Eigen::VectorXd& x) { Eigen::VectorXd v = proj(x) - x; return v; },
                                pa.settings.stencil_order);
  for (long j = 0; j < local.nodes(); ++j) rep.phi_sup = std::max(rep.phi_sup, phi.values().col(j).norm());
  for (const auto& x : pts) {
    Eigen::VectorXd y = x + phi.eval(x);
    Eigen::VectorXd Ka = graph_point(pa.k_c, La.k_u, La.k_s, x);
    rep.reparam_residual =
        std::max(rep.reparam_residual, block_norm(Ka - graph_point(pb.k_c, Lb.k_u, Lb.k_s, y), pa.blocks()));
    Eigen::VectorXd Rax = pa.linear.A_c * x + La.r.eval(x);
    Eigen::VectorXd lhs = Rax + phi.eval(Rax);
    Eigen::VectorXd rhs = pb.linear.A_c * y + Lb.r.eval(y);
    rep.dynamics_residual = std::max(rep.dynamics_residual, (lhs - rhs).norm());
  }
  return rep;
}

}  // namespace manicore
