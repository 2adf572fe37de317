#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "manicore/linmodel/problem_io.hpp"
#include "manicore/taylor/homological.hpp"

using namespace manicore;

namespace {

// F(x, y) = (x + μxy, y/2 + μx²)
ProblemInstance map_a_with(double mu) {
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 0.5).asDiagonal();
  TaylorRep g(2, 2, 6);
  g.set_coeff(0, {1, 1}, mu);
  g.set_coeff(1, {2, 0}, mu);
  return make_problem(A, g, TaylorRep(1, 1, 6), 0.25, 0.75, 3);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::VerificationFailure;
}

}  // namespace

TEST(MonomialSubstitution, RotationMatchesComposition) {
  Eigen::MatrixXd Ac(2, 2);
  Ac << 0.6, -0.8, 0.8, 0.6;
  const int d = 3;
  Eigen::MatrixXd S = monomial_substitution(Ac, d);
  const MonomialBasis& B = *MonomialBasis::get(2, d);
  const int b = B.degree_begin(d), N = B.degree_end(d) - b;
  ASSERT_EQ(S.rows(), N);
  Eigen::Vector2d x(0.3, -0.7);
  auto mono = [&](int k, const Eigen::VectorXd& z) {
    TaylorRep m(2, 1, d);
    m.coeffs()(0, b + k) = 1.0;
    return m.eval(z)(0);
  };
  for (int k = 0; k < N; ++k) {
    double want = mono(k, Ac * x), got = 0.0;
    for (int j = 0; j < N; ++j) got += S(k, j) * mono(j, x);
    EXPECT_NEAR(got, want, 1e-14) << "k = " << k;
  }
}

TEST(Sylvester, ScalarSolveAndResonance) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Constant(1, 1, 2.0), A = Eigen::MatrixXd::Constant(1, 1, 0.5);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Constant(1, 1, 3.0);
  double cond = 0;
  Eigen::MatrixXd C = detail::solve_sylvester(S, A, rhs, 2, 1, &cond);
  EXPECT_NEAR(C(0, 0), 2.0, 1e-14);  // 2C − C/2 = 3
  EXPECT_NEAR(cond, 1.0, 1e-14);

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(1, 1);
  EXPECT_EQ(kind_of([&] { detail::solve_sylvester(I, I, rhs, 2, 1, nullptr); }), ErrorKind::ResonantOrder);
}

TEST(TaylorPipeline, MapACoefficientsForAnotherMu) {
  // k_s = 2μx² − 16μ³x⁴ + …, r = 2μ²x³ + …
  const double mu = 0.03;
  ProblemInstance p = map_a_with(mu);
  TaylorResult res = taylor_pipeline(p, 5);
  EXPECT_NEAR(res.pair.k_s.coeff(0, {2}), 2 * mu, 1e-14);
  EXPECT_NEAR(res.pair.k_s.coeff(0, {3}), 0.0, 1e-14);
  EXPECT_NEAR(res.pair.k_s.coeff(0, {4}), -16 * mu * mu * mu, 1e-14);
  EXPECT_NEAR(res.pair.r.coeff(0, {2}), 0.0, 1e-14);
  EXPECT_NEAR(res.pair.r.coeff(0, {3}), 2 * mu * mu, 1e-14);
  EXPECT_EQ(res.systems.size(), 4u);
  EXPECT_NEAR(res.slope, 6.0, 0.2);
}

TEST(TaylorPipeline, MapBDefectVanishes) {
  ProblemInstance p = load_problem(std::string(MANICORE_PROBLEMS_DIR) + "/map_b.json");
  TaylorResult res = taylor_pipeline(p, 4);
  EXPECT_NEAR(res.pair.k_u.coeff(0, {2}), -0.05, 1e-15);
  for (const DefectRow& row : res.defects) EXPECT_LT(row.defect, 1e-15) << "ρ = " << row.radius;
}

TEST(TaylorPipeline, DegreeLimits) {
  ProblemInstance p = map_a_with(0.05);
  EXPECT_EQ(kind_of([&] { taylor_pipeline(p, 7); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([&] { taylor_pipeline(p, 1); }), ErrorKind::ConfigError);
  TaylorPair q = zero_pair(p, 4);
  EXPECT_EQ(kind_of([&] { solve_order(p, 3, q); }), ErrorKind::ConfigError);
}

TEST(TaylorPipeline, TripleCarriesInverse) {
  ProblemInstance p = map_a_with(0.05);
  TaylorResult res = taylor_pipeline(p, 4);
  ConjugacyTriple T = pair_to_triple(p, res.pair);
  TaylorRep R = pair_R(p, res.pair);
  // (A_c + r)∘(A_c⁻¹ + t) = Id through the table cap
  TaylorRep Tm = TaylorRep::linear(p.linear.A_c.inverse(), 4) + T.t.taylor();
  TaylorRep id = R.compose(Tm, 4) - TaylorRep::identity(1, 4);
  EXPECT_LT(id.max_abs(), 1e-16);
  EXPECT_NEAR(T.t.taylor().coeff(0, {3}), -2 * 0.05 * 0.05, 1e-16);
}
