#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "manicore/funcspace/faa_di_bruno.hpp"
#include "manicore/funcspace/grid_rep.hpp"
#include "manicore/funcspace/inversion.hpp"
#include "manicore/funcspace/norms.hpp"
#include "manicore/funcspace/smooth_map.hpp"
#include "manicore/funcspace/taylor_rep.hpp"
#include "manicore/linmodel/cutoff.hpp"

using namespace manicore;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(v.size());
  int i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

// f(x, y) = (1 + 2x − y + 3xy + x²y, x² − y³)
TaylorRep sample_poly() {
  TaylorRep f(2, 2, 3);
  f.set_coeff(0, {0, 0}, 1.0);
  f.set_coeff(0, {1, 0}, 2.0);
  f.set_coeff(0, {0, 1}, -1.0);
  f.set_coeff(0, {1, 1}, 3.0);
  f.set_coeff(0, {2, 1}, 1.0);
  f.set_coeff(1, {2, 0}, 1.0);
  f.set_coeff(1, {0, 3}, -1.0);
  f.set_truncated(false);
  return f;
}

Eigen::VectorXd sample_direct(const Eigen::VectorXd& p) {
  double x = p(0), y = p(1);
  return vec({1 + 2 * x - y + 3 * x * y + x * x * y, x * x - y * y * y});
}

}  // namespace

TEST(MonomialBasis, SizeMatchesBinomialCount) {
  for (int n = 1; n <= 3; ++n)
    for (int cap = 0; cap <= 5; ++cap) {
      const MonomialBasis& B = *MonomialBasis::get(n, cap);
      EXPECT_EQ(B.size(), static_cast<int>(std::lround(binomial(n + cap, cap))));
      for (int i = 0; i < B.size(); ++i) EXPECT_EQ(B.index(B[i]), i);
    }
}

TEST(MonomialBasis, GradedOrder) {
  const MonomialBasis& B = *MonomialBasis::get(3, 4);
  for (int d = 0; d <= 4; ++d)
    for (int i = B.degree_begin(d); i < B.degree_end(d); ++i) EXPECT_EQ(total_degree(B[i]), d);
}

TEST(TaylorRep, EvalMatchesClosedForm) {
  TaylorRep f = sample_poly();
  for (auto p : {vec({0.3, -0.7}), vec({-1.2, 0.4}), vec({0.0, 0.0})})
    EXPECT_LT((f.eval(p) - sample_direct(p)).norm(), 1e-14);
}

TEST(TaylorRep, ComposeMatchesPointwise) {
  TaylorRep f = sample_poly();
  // g(u) = (u + u², −2u³), polynomial of one variable
  TaylorRep g(1, 2, 3);
  g.set_coeff(0, {1}, 1.0);
  g.set_coeff(0, {2}, 1.0);
  g.set_coeff(1, {3}, -2.0);
  g.set_truncated(false);
  TaylorRep h = f.compose(g, 9);
  for (double u : {-0.8, -0.1, 0.35, 1.1}) {
    Eigen::VectorXd uu = vec({u});
    EXPECT_NEAR((h.eval(uu) - f.eval(g.eval(uu))).norm(), 0.0, 1e-12);
  }
}

TEST(TaylorRep, ShiftReexpands) {
  TaylorRep f = sample_poly();
  Eigen::VectorXd x0 = vec({0.4, -0.25});
  TaylorRep s = f.shift(x0);
  for (auto v : {vec({0.1, 0.2}), vec({-0.3, 0.05})}) EXPECT_NEAR((s.eval(v) - f.eval(x0 + v)).norm(), 0.0, 1e-13);
}

TEST(TaylorRep, PartialDerivative) {
  TaylorRep f = sample_poly();
  TaylorRep fx = f.partial(0);
  Eigen::VectorXd p = vec({0.5, -0.6});
  // ∂x: (2 + 3y + 2xy, 2x)
  EXPECT_NEAR(fx.eval(p)(0), 2 + 3 * p(1) + 2 * p(0) * p(1), 1e-14);
  EXPECT_NEAR(fx.eval(p)(1), 2 * p(0), 1e-14);
}

TEST(TaylorRep, ZeroCodimensionTablesAreHarmless) {
  TaylorRep z(1, 0, 4);
  EXPECT_EQ(z.with_cap(2).codomain_dim(), 0);
  EXPECT_EQ(z.max_abs(), 0.0);
  TaylorRep id0 = TaylorRep::identity(1, 0);
  EXPECT_TRUE(id0.truncated());
}

TEST(GridRep, PolynomialsReproducedExactly) {
  GridSpec spec{2, 1.0, 21};
  auto f = [](const Eigen::VectorXd& p) { return vec({p(0) * p(0) * p(1) - 2 * p(1) * p(1) * p(1) + p(0)}); };
  GridRep g = GridRep::sample(spec, 1, f);
  Eigen::VectorXd y = vec({0.137, -0.411});
  EXPECT_NEAR(g.eval(y)(0), f(y)(0), 1e-12);
  // ∂x∂y = 2x, ∂yy = −12y
  EXPECT_NEAR(g.derivative(y, {1, 1})(0), 2 * y(0), 1e-9);
  EXPECT_NEAR(g.derivative(y, {0, 2})(0), -12 * y(1), 1e-9);
}

TEST(GridRep, OutsideBoxIsZero) {
  GridSpec spec{1, 1.0, 21};
  GridRep g = GridRep::sample(spec, 1, [](const Eigen::VectorXd& p) { return vec({1.0 + p(0)}); });
  EXPECT_EQ(g.eval(vec({1.5}))(0), 0.0);
}

TEST(Norms, BlockNormIsMaxOfEuclideanBlocks) {
  Eigen::VectorXd v = vec({3, 4, 1, 1, 1});
  EXPECT_DOUBLE_EQ(block_norm(v, {2, 3}), 5.0);
  EXPECT_NEAR(block_norm(v, {2, 3}), std::max(5.0, std::sqrt(3.0)), 1e-15);
}

TEST(Norms, SpectralNormAndCondition) {
  Eigen::MatrixXd M(2, 2);
  M << 3, 0, 0, 0.5;
  EXPECT_NEAR(spectral_norm(M), 3.0, 1e-14);
  EXPECT_NEAR(condition_number(M), 6.0, 1e-12);
}

TEST(FaaDiBruno, FirstOrderIsChainRule) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  TaylorRep f1 = sample_poly();
  TaylorRep f2(3, 2, 2);
  for (int i = 0; i < f2.basis().size(); ++i)
    for (int c = 0; c < 2; ++c) f2.coeffs()(c, i) = u(rng);
  f2.set_truncated(false);
  Eigen::VectorXd x = vec({0.2, -0.3, 0.1});
  SymTensor d = faa_di_bruno(SmoothMapRep::polynomial(f1), SmoothMapRep::polynomial(f2), 1, x);
  // Df1(f2(x)) · Df2(x) from partial tables
  Eigen::MatrixXd J1(2, 2), J2(2, 3);
  Eigen::VectorXd y = f2.eval(x);
  for (int v = 0; v < 2; ++v) J1.col(v) = f1.partial(v).eval(y);
  for (int v = 0; v < 3; ++v) J2.col(v) = f2.partial(v).eval(x);
  Eigen::MatrixXd want = J1 * J2;
  EXPECT_LT((d.derivatives() - want).norm(), 1e-12);
}

TEST(FaaDiBruno, ScalarThirdOrderClosedForm) {
  // f(y) = y³ + 2y², g(x) = sin-like cubic x − x³/6
  TaylorRep f(1, 1, 3), g(1, 1, 3);
  f.set_coeff(0, {3}, 1.0);
  f.set_coeff(0, {2}, 2.0);
  g.set_coeff(0, {1}, 1.0);
  g.set_coeff(0, {3}, -1.0 / 6);
  f.set_truncated(false);
  g.set_truncated(false);
  const double x = 0.7, gx = x - x * x * x / 6, g1 = 1 - x * x / 2, g2 = -x, g3 = -1;
  const double f1 = 3 * gx * gx + 4 * gx, f2 = 6 * gx + 4, f3 = 6;
  const double d3 = f3 * g1 * g1 * g1 + 3 * f2 * g1 * g2 + f1 * g3;
  SymTensor t = faa_di_bruno(SmoothMapRep::polynomial(f), SmoothMapRep::polynomial(g), 3, vec({x}));
  EXPECT_NEAR(t.derivatives()(0, 0), d3, 1e-12);
  // 𝒫₃ is the middle term 3 f''(g) g' g''
  SymTensor p = partition_remainder(SmoothMapRep::polynomial(f), SmoothMapRep::polynomial(g), 3, vec({x}));
  EXPECT_NEAR(p.derivatives()(0, 0), 3 * f2 * g1 * g2, 1e-12);
}

TEST(FaaDiBruno, SecondOrderRemainderVanishes) {
  TaylorRep f = sample_poly();
  SymTensor p = partition_remainder(SmoothMapRep::polynomial(f), SmoothMapRep::polynomial(f), 2, vec({0.3, 0.9}));
  EXPECT_TRUE(p.table.coeffs().isZero(0.0));
}

TEST(Inversion, TaylorInverseOfCubic) {
  // (x + a x³)⁻¹ = x − a x³ + 3a² x⁵ − 12a³ x⁷ + …
  const double a = 0.1;
  TaylorRep r(1, 1, 7);
  r.set_coeff(0, {3}, a);
  TaylorRep t = invert_taylor(r, Eigen::MatrixXd::Identity(1, 1), 7);
  EXPECT_NEAR(t.coeff(0, {3}), -a, 1e-15);
  EXPECT_NEAR(t.coeff(0, {5}), 3 * a * a, 1e-15);
  EXPECT_NEAR(t.coeff(0, {7}), -12 * a * a * a, 1e-15);
}

TEST(Inversion, GridInverseResidual) {
  TaylorRep r(2, 2, 3);
  r.set_coeff(0, {2, 0}, 0.05);
  r.set_coeff(1, {1, 1}, -0.04);
  r.set_truncated(false);
  Eigen::MatrixXd Ac(2, 2);
  Ac << 0.6, -0.8, 0.8, 0.6;  // rotation
  InversionResult inv = invert_center_map(SmoothMapRep::polynomial(r), Ac, GridSpec{2, 0.5, 21});
  EXPECT_LT(inv.residual, 1e-13);
}

TEST(Inversion, ContractionRequired) {
  TaylorRep r(1, 1, 2);
  r.set_coeff(0, {2}, 5.0);
  EXPECT_THROW(
      {
        try {
          invert_center_map(SmoothMapRep::polynomial(r), Eigen::MatrixXd::Identity(1, 1), GridSpec{1, 1.0, 21});
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::NotAContraction);
          throw;
        }
      },
      Error);
}

TEST(Inversion, JetOfInverseComposesToIdentity) {
  TaylorRep r(1, 1, 3);
  r.set_coeff(0, {2}, 0.3);
  r.set_coeff(0, {3}, -0.2);
  r.set_truncated(false);
  SmoothMapRep rm = SmoothMapRep::polynomial(r);
  const Eigen::MatrixXd Ac = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd y = vec({0.2});
  Eigen::VectorXd x = Ac * y + r.eval(y);
  TaylorRep T = inverse_jet(rm, Ac, y, 4);
  // R(T(x + v)) = x + v through order 4
  TaylorRep Rj = rm.jet(y, 4) + TaylorRep::linear(Ac, 4);
  Rj.coeffs().col(0) += Ac * y;
  TaylorRep Tv = T;
  Tv.coeffs().col(0).setZero();
  TaylorRep id = Rj.compose(Tv, 4);
  EXPECT_NEAR(id.coeff(0, {0}), x(0), 1e-14);
  EXPECT_NEAR(id.coeff(0, {1}), 1.0, 1e-13);
  for (int d = 2; d <= 4; ++d) EXPECT_NEAR(id.coeff(0, {d}), 0.0, 1e-12);
}

TEST(SmoothMap, LocalizedEqualsPolynomialInsideAndVanishesOutside) {
  TaylorRep p(1, 1, 3);
  p.set_coeff(0, {2}, 1.0);
  p.set_truncated(false);
  CutoffFunction c(0.25, 0.75, {1}, 3);
  SmoothMapRep f = SmoothMapRep::localized(p, c);
  EXPECT_DOUBLE_EQ(f.eval(vec({0.2}))(0), 0.04);
  EXPECT_DOUBLE_EQ(f.eval(vec({0.8}))(0), 0.0);
  double mid = f.eval(vec({0.5}))(0);
  EXPECT_GT(mid, 0.0);
  EXPECT_LT(mid, 0.25);
}
