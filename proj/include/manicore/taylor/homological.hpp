#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/funcspace/inversion.hpp"
#include "manicore/funcspace/norms.hpp"
#include "manicore/linmodel/problem.hpp"
#include "manicore/parallel.hpp"
#include "manicore/theta/triple.hpp"

namespace manicore {

// Order-d part of the conjugacy equation in the hyperbolic blocks:
//   k_d∘A_c − A_h k_d = [g_h∘K − k_h^{<d}∘R]_d,   h ∈ {u, s}.
// On coefficient blocks C (rows × N_d) this is C·S_d − A_h·C with S_d the matrix of
// p ↦ p∘A_c on degree-d monomials.
struct HomologicalSystem {
  int degree = 0;
  double cond_u = 1.0, cond_s = 1.0;
};

// mon(A_c x) = S·mon(x) on degree-d monomials
inline Eigen::MatrixXd monomial_substitution(const Eigen::MatrixXd& Ac, int d) {
  const int dc = static_cast<int>(Ac.rows());
  const MonomialBasis& B = *MonomialBasis::get(dc, d);
  const int b = B.degree_begin(d), N = B.degree_end(d) - b;
  Eigen::MatrixXd S(N, N);
  TaylorRep lin = TaylorRep::linear(Ac, d);
  for (int k = 0; k < N; ++k) {
    TaylorRep mono(dc, 1, d);
    mono.coeffs()(0, b + k) = 1.0;
    TaylorRep img = mono.compose(lin, d);
    S.row(k) = img.coeffs().block(0, b, 1, N);
  }
  return S;
}

namespace detail {

// solves C·S − A·C = Rhs; fails with the multi-index carrying the weakest direction
inline Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& S, const Eigen::MatrixXd& A, const Eigen::MatrixXd& Rhs,
                                       int d, int dc, double* cond) {
  const int h = static_cast<int>(A.rows()), N = static_cast<int>(S.rows());
  // vec(C·S − A·C) = (Sᵀ ⊗ I − I ⊗ A) vec(C), column-major
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(h * N, h * N);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k) L.block(j * h, k * h, h, h).diagonal().array() += S(k, j);
  for (int j = 0; j < N; ++j) L.block(j * h, j * h, h, h) -= A;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double c = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (cond) *cond = c;
  if (!(c <= 1e12)) {
    Eigen::Index at = 0;
    svd.matrixV().col(sv.size() - 1).cwiseAbs().maxCoeff(&at);
    const MonomialBasis& B = *MonomialBasis::get(dc, d);
    const MultiIndex& alpha = B[B.degree_begin(d) + static_cast<int>(at) / h];
    std::string a;
    for (std::size_t i = 0; i < alpha.size(); ++i) a += (i ? "," : "") + std::to_string(alpha[i]);
    fail(ErrorKind::ResonantOrder, "order " + std::to_string(d) + " is resonant at α = (" + a + "), condition " +
                                       std::to_string(c));
  }
  Eigen::VectorXd x = svd.solve(Rhs.reshaped());
  return x.reshaped(h, N);
}

}  // namespace detail

// Polynomial pair (K₀, R₀) as tables: r, k_u, k_s with cap `cap`.
struct TaylorPair {
  TaylorRep r, k_u, k_s;
  int degree = 1;
};

inline TaylorPair zero_pair(const ProblemInstance& p, int cap) {
  return {TaylorRep(p.dim_c(), p.dim_c(), cap), TaylorRep(p.dim_c(), p.dim_u(), cap),
          TaylorRep(p.dim_c(), p.dim_s(), cap), 1};
}

inline TaylorRep pair_K(const ProblemInstance& p, const TaylorPair& q) {
  const int cap = q.r.degree_cap();
  TaylorRep c = TaylorRep::identity(p.dim_c(), cap) + p.kc_raw.with_cap(cap);
  return TaylorRep::stack({c, q.k_u, q.k_s});
}

inline TaylorRep pair_R(const ProblemInstance& p, const TaylorPair& q) {
  return TaylorRep::linear(p.linear.A_c, q.r.degree_cap()) + q.r;
}

inline void set_degree(TaylorRep& dst, const TaylorRep& src, int d) {
  const MonomialBasis& B = dst.basis();
  for (int i = B.degree_begin(d); i < B.degree_end(d); ++i) dst.coeffs().col(i) = src.coeffs().col(i);
}

// Solves order d given all orders below d; k_c stays the given data.
inline TaylorPair solve_order(const ProblemInstance& p, int d, const TaylorPair& lower,
                              HomologicalSystem* sys = nullptr) {
  if (d < 2) fail(ErrorKind::ConfigError, "solve_order needs d ≥ 2");
  if (lower.degree != d - 1) fail(ErrorKind::ConfigError, "solve_order needs every order below d");
  const int cap = lower.r.degree_cap();
  if (d > cap) fail(ErrorKind::ConfigError, "order exceeds the table cap");
  const int dc = p.dim_c(), du = p.dim_u(), ds = p.dim_s();
  const Eigen::MatrixXd& Ac = p.linear.A_c;
  TaylorPair out = lower;
  out.degree = d;

  TaylorRep K = pair_K(p, lower).with_cap(d);
  TaylorRep R = pair_R(p, lower).with_cap(d);
  TaylorRep gK = p.g_raw.compose(K, d);
  TaylorRep kc = p.kc_raw.with_cap(d);

  // center block: explicit assignment
  TaylorRep rd = Ac * kc + gK.rows(0, dc) - kc.compose(R, d);
  set_degree(out.r, rd.with_cap(cap), d);

  HomologicalSystem hs;
  hs.degree = d;
  const MonomialBasis& B = *MonomialBasis::get(dc, d);
  const int b = B.degree_begin(d), N = B.degree_end(d) - b;
  const Eigen::MatrixXd S = monomial_substitution(Ac, d);
  auto hyperbolic = [&](const TaylorRep& kh, const Eigen::MatrixXd& Ah, int at, int rows, TaylorRep& dst,
                        double* cond) {
    if (rows == 0) return;
    TaylorRep rhs = gK.rows(at, rows) - kh.with_cap(d).compose(R, d);
    Eigen::MatrixXd C = detail::solve_sylvester(S, Ah, rhs.coeffs().middleCols(b, N), d, dc, cond);
    dst.coeffs().middleCols(b, N) = C;
  };
  hyperbolic(lower.k_u, p.linear.A_u, dc, du, out.k_u, &hs.cond_u);
  hyperbolic(lower.k_s, p.linear.A_s, dc + du, ds, out.k_s, &hs.cond_s);
  if (sys) *sys = hs;
  return out;
}

// F∘K₀ − K₀∘R₀ at a center point, with the localized nonlinearity
inline Eigen::VectorXd pair_defect_at(const ProblemInstance& p, const TaylorRep& K, const TaylorRep& R,
                                      const Eigen::VectorXd& x) {
  return p.F(K.eval(x)) - K.eval(R.eval(x));
}

// points of the center ball of radius ρ
inline std::vector<Eigen::VectorXd> ball_samples(int dim, double rho, long budget = 4001) {
  std::vector<Eigen::VectorXd> pts;
  for (auto& x : sample_box(dim, rho, budget))
    if (x.norm() <= rho * (1.0 + 1e-12)) pts.push_back(x);
  return pts;
}

inline double pair_defect_sup(const ProblemInstance& p, const TaylorPair& q, double rho, long budget = 4001) {
  TaylorRep K = pair_K(p, q), R = pair_R(p, q);
  std::vector<Eigen::VectorXd> pts = ball_samples(p.dim_c(), rho, budget);
  std::vector<double> v(pts.size());
  parallel_for(static_cast<long>(pts.size()),
               [&](long i) { v[i] = block_norm(pair_defect_at(p, K, R, pts[i]), p.blocks()); });
  double m = 0.0;
  for (double e : v) m = std::max(m, e);
  return m;
}

struct DefectRow {
  double radius = 0, defect = 0;
};

struct TaylorResult {
  TaylorPair pair;
  std::vector<HomologicalSystem> systems;
  std::vector<DefectRow> defects;
  double slope = 0;  // least-squares log-log slope of the defect table
};

inline double loglog_slope(const std::vector<DefectRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (!(r.defect > 0.0)) continue;
    double x = std::log(r.radius), y = std::log(r.defect);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::vector<double> default_defect_radii(const ProblemInstance& p) {
  const double a = p.cutoff.inner();
  return {0.5 * a, 0.25 * a, 0.125 * a};
}

inline TaylorResult taylor_pipeline(const ProblemInstance& p, int max_degree, std::vector<double> radii = {}) {
  if (max_degree < 2) fail(ErrorKind::ConfigError, "taylor degree must be at least 2");
  if (max_degree > p.settings.degree_cap)
    fail(ErrorKind::ConfigError, "taylor degree " + std::to_string(max_degree) + " exceeds degree_cap " +
                                     std::to_string(p.settings.degree_cap));
  TaylorResult res;
  res.pair = zero_pair(p, max_degree);
  for (int d = 2; d <= max_degree; ++d) {
    HomologicalSystem hs;
    res.pair = solve_order(p, d, res.pair, &hs);
    res.systems.push_back(hs);
  }
  if (radii.empty()) radii = default_defect_radii(p);
  for (double rho : radii) res.defects.push_back({rho, pair_defect_sup(p, res.pair, rho)});
  res.slope = loglog_slope(res.defects);
  return res;
}

// (K₀, R₀) as a ConjugacyTriple, with t from the Taylor inverse. With `localized` the
// polynomials are multiplied by the center cutoff, matching the localized problem
// away from the inner ball.
inline ConjugacyTriple pair_to_triple(const ProblemInstance& p, const TaylorPair& q, bool localized = false) {
  const int cap = q.r.degree_cap();
  auto wrap = [&](const TaylorRep& f) {
    return localized ? SmoothMapRep::localized(f, p.center_cutoff) : SmoothMapRep::polynomial(f);
  };
  return {wrap(q.r), wrap(q.k_u), wrap(q.k_s), SmoothMapRep::polynomial(invert_taylor(q.r, p.linear.A_c, cap))};
}

inline TaylorPair truncate_pair(const TaylorPair& q, int d) {
  return {q.r.degree_range(0, d), q.k_u.degree_range(0, d), q.k_s.degree_range(0, d), d};
}

}  // namespace manicore
