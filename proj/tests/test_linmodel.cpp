#include <gtest/gtest.h>

#include <string>

#include "manicore/linmodel/cutoff.hpp"
#include "manicore/linmodel/problem.hpp"
#include "manicore/linmodel/problem_io.hpp"
#include "manicore/linmodel/splitting.hpp"

using namespace manicore;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::VerificationFailure;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Splitting, DiagonalDimensionsAndNorms) {
  Eigen::MatrixXd A = Eigen::Vector3d(0.5, 1.0, 2.0).asDiagonal();
  LinearModel lm = build_splitting(A);
  EXPECT_EQ(lm.splitting.dim_c, 1);
  EXPECT_EQ(lm.splitting.dim_u, 1);
  EXPECT_EQ(lm.splitting.dim_s, 1);
  EXPECT_NEAR(lm.linear.norms.Ac, 1.0, 1e-12);
  EXPECT_NEAR(lm.linear.norms.Au_inv, 0.5, 1e-12);
  EXPECT_NEAR(lm.linear.norms.As, 0.5, 1e-12);
}

TEST(Splitting, ReassemblesA) {
  Eigen::MatrixXd A(3, 3);
  A << 1.0, 0.3, 0.0, 0.0, 2.0, 0.1, 0.0, 0.0, 0.4;
  LinearModel lm = build_splitting(A);
  const auto& sp = lm.splitting;
  Eigen::MatrixXd back = sp.basis_change_inv * lm.linear.block_diagonal() * sp.basis_change;
  // undo any norm rescaling, which is a block-diagonal similarity
  EXPECT_LT((back - A).norm(), 1e-10);
  // projectors sum to the identity
  EXPECT_LT((sp.P_c + sp.P_u + sp.P_s - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-10);
}

TEST(Splitting, RotationIsCenter) {
  Eigen::MatrixXd A(2, 2);
  A << 0.6, -0.8, 0.8, 0.6;
  LinearModel lm = build_splitting(A);
  EXPECT_EQ(lm.splitting.dim_c, 2);
  EXPECT_NEAR(lm.linear.norms.Ac, 1.0, 1e-10);
  EXPECT_NEAR(lm.linear.norms.Ac_inv, 1.0, 1e-10);
}

TEST(Splitting, SpectrumErrors) {
  const double tol = 1e-6;
  Eigen::MatrixXd band = Eigen::Vector2d(1.0, 1.0 + 1.5 * tol).asDiagonal();
  EXPECT_EQ(kind_of([&] { build_splitting(band, tol); }), ErrorKind::NonCleanSpectrum);
  Eigen::MatrixXd none = Eigen::Vector2d(0.5, 2.0).asDiagonal();
  EXPECT_EQ(kind_of([&] { build_splitting(none, tol); }), ErrorKind::NonCleanSpectrum);
  Eigen::MatrixXd singular = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  EXPECT_EQ(kind_of([&] { build_splitting(singular, tol); }), ErrorKind::SingularBlock);
}

TEST(Cutoff, OneInsideZeroOutside) {
  CutoffFunction c(0.25, 0.75, {1, 1}, 3);
  EXPECT_DOUBLE_EQ(c.eval(Eigen::Vector2d(0.2, -0.1)), 1.0);
  EXPECT_DOUBLE_EQ(c.eval(Eigen::Vector2d(0.8, 0.0)), 0.0);
  EXPECT_DOUBLE_EQ(c.eval(Eigen::Vector2d(0.0, -0.9)), 0.0);
  double mid = c.eval(Eigen::Vector2d(0.5, 0.0));
  EXPECT_GT(mid, 0.0);
  EXPECT_LT(mid, 1.0);
}

TEST(Cutoff, ProfileSmoothAtEdges) {
  CutoffFunction c(0.25, 0.75, {1}, 3);
  for (int k = 1; k <= 3; ++k) {
    EXPECT_NEAR(c.profile(0.25, k), 0.0, 1e-9) << "k = " << k;
    EXPECT_NEAR(c.profile(0.75, k), 0.0, 1e-9) << "k = " << k;
  }
}

TEST(Cutoff, JetMatchesFiniteDifference) {
  CutoffFunction c(0.25, 0.75, {1}, 3);
  Eigen::VectorXd x(1);
  x << 0.45;
  TaylorRep J = c.jet(x, 2);
  const double h = 1e-5;
  Eigen::VectorXd xp = x, xm = x;
  xp(0) += h;
  xm(0) -= h;
  EXPECT_NEAR(J.coeff(0, {1}), (c.eval(xp) - c.eval(xm)) / (2 * h), 1e-7);
  EXPECT_NEAR(2 * J.coeff(0, {2}), (c.eval(xp) - 2 * c.eval(x) + c.eval(xm)) / (h * h), 1e-3);
}

TEST(Cutoff, BadRadii) {
  EXPECT_EQ(kind_of([] { CutoffFunction(0.5, 0.25, {1}); }), ErrorKind::ConfigError);
}

TEST(ProblemIO, LoadsMapA) {
  ProblemInstance p = load_problem(std::string(MANICORE_PROBLEMS_DIR) + "/map_a.json");
  EXPECT_EQ(p.dim_c(), 1);
  EXPECT_EQ(p.dim_u(), 0);
  EXPECT_EQ(p.dim_s(), 1);
  EXPECT_EQ(p.n, 3);
  EXPECT_NEAR(p.g_raw.coeff(0, {1, 1}), 0.05, 1e-15);
  EXPECT_NEAR(p.g_raw.coeff(1, {2, 0}), 0.05, 1e-15);
  // F agrees with A z + g(z) inside the inner ball
  Eigen::Vector2d z(0.1, -0.05);
  Eigen::Vector2d want(0.1 + 0.05 * 0.1 * -0.05, 0.5 * -0.05 + 0.05 * 0.01);
  EXPECT_LT((p.F(z) - want).norm(), 1e-15);
}

TEST(ProblemIO, SchemaErrorsCarryLines) {
  const std::string text = "{\n  \"matrix_A\": [[1.0, 0.0], [0.0, 0.5]],\n  \"g_coeffs\": {\"2,0,1\": [0.0, 1.0]},\n"
                           "  \"kc_coeffs\": {},\n  \"cutoff_inner\": 0.25,\n  \"cutoff_outer\": 0.75,\n  \"order_n\": 3\n}\n";
  std::string msg = message_of([&] { parse_problem(text); });
  EXPECT_NE(msg.find("ConfigError"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ProblemIO, MissingKeyAndBadJson) {
  EXPECT_EQ(kind_of([] { parse_problem("{\"matrix_A\": [[1.0]]}"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_problem("{ not json"); }), ErrorKind::ConfigError);
}

TEST(ProblemIO, LinearTermsRejected) {
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 0.5).asDiagonal();
  TaylorRep g(2, 2, 2);
  g.set_coeff(1, {1, 0}, 0.1);
  EXPECT_EQ(kind_of([&] { make_problem(A, g, TaylorRep(1, 1, 2), 0.25, 0.75, 2); }), ErrorKind::InvalidNonlinearity);
}

TEST(ProblemIO, CoefficientRoundTrip) {
  TaylorRep f(2, 1, 3);
  f.set_coeff(0, {2, 1}, -0.125);
  f.set_coeff(0, {0, 2}, 3.5);
  nlohmann::json j = taylor_to_json(f);
  std::string text = j.dump();
  TaylorRep g = table_to_taylor(parse_coeff_table(j, text, "t", 2, 1), 2, 1);
  EXPECT_EQ(g.coeff(0, {2, 1}), -0.125);
  EXPECT_EQ(g.coeff(0, {0, 2}), 3.5);
}

TEST(Problem, GapRescalingKeepsSpectrum) {
  // a Jordan-like stable block with large norm gets rescaled
  Eigen::MatrixXd A(3, 3);
  A << 1.0, 0.0, 0.0, 0.0, 0.5, 50.0, 0.0, 0.0, 0.5;
  ProblemInstance p = make_problem(A, TaylorRep(3, 3, 2), TaylorRep(1, 1, 2), 0.25, 0.75, 2);
  EXPECT_TRUE(gap_condition(p.linear.norms, 2));
  Eigen::VectorXcd ev = p.linear.A_s.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) EXPECT_NEAR(std::abs(ev(i)), 0.5, 1e-9);
}
