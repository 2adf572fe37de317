#include <gtest/gtest.h>

#include <string>

#include "manicore/linmodel/problem_io.hpp"
#include "manicore/theta/bootstrap.hpp"
#include "manicore/theta/theta.hpp"

using namespace manicore;

namespace {

struct Loaded {
  ProblemInstance p;
  ConstantsLedger l;
};

Loaded setup(const std::string& name) {
  Loaded s;
  s.p = load_problem(std::string(MANICORE_PROBLEMS_DIR) + "/" + name + ".json");
  NonlinearityBounds b = estimate_bounds(s.p);
  s.l = derive_ledger(s.p.linear, b.L_g, b.L_c, b.eps, s.p.n);
  return s;
}

double sup_diff(const SmoothMapRep& a, const SmoothMapRep& b) {
  if (a.grid()->values().size() == 0) return 0.0;
  return (a.grid()->values() - b.grid()->values()).cwiseAbs().maxCoeff();
}

double triple_c0(const ConjugacyTriple& a, const ConjugacyTriple& b) {
  return std::max({sup_diff(a.r, b.r), sup_diff(a.k_u, b.k_u), sup_diff(a.k_s, b.k_s)});
}

}  // namespace

TEST(Theta, ZeroProblemFixedInOneSweep) {
  Loaded s = setup("zero");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-12, 10);
  ASSERT_EQ(res.trace.size(), 1u);
  EXPECT_EQ(res.trace[0].d1, 0.0);
  EXPECT_EQ(res.scale, 1.0);
}

TEST(Theta, MapBCoefficientsExact) {
  // K = (x, −μx²), R = x solves F∘K = K∘R for F = (x, 2y + μx²)
  Loaded s = setup("map_b");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-12, 500);
  EXPECT_NEAR(res.triple.k_u.taylor().coeff(0, {2}), -0.05, 1e-10);
  EXPECT_LT(res.triple.r.taylor().max_abs(), 1e-10);
  // inside the inner ball the grid solution is the polynomial one
  Eigen::VectorXd x(1);
  x << 0.1;
  EXPECT_NEAR(res.triple.k_u.eval(x)(0), -0.05 * 0.01, 1e-10);
}

TEST(Theta, FixedPointIsFixed) {
  Loaded s = setup("map_a");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-12, 500);
  ConjugacyTriple again = theta_apply(res.scaled_triple, res.scaled_problem, res.scaled_ledger);
  EXPECT_LT(triple_c0(again, res.scaled_triple), 1e-11);
}

TEST(Theta, ContractsAtRateTheta0) {
  Loaded s = setup("map_a");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-10, 500);
  const ProblemInstance& ps = res.scaled_problem;
  // two members of Γ₀: zero and the fixed point; one sweep brings them closer by θ₀
  ConjugacyTriple a = zero_triple(ps), b = res.scaled_triple;
  double before = triple_c0(a, b);
  ConjugacyTriple ta = theta_apply(a, ps, res.scaled_ledger), tb = theta_apply(b, ps, res.scaled_ledger);
  double after = triple_c0(ta, tb);
  EXPECT_LE(after, res.scaled_ledger.theta0 * before * 1.05);
}

TEST(Theta, RescalingTriggersAboveThreshold) {
  Loaded s = setup("map_a");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-10, 500);
  EXPECT_GT(s.l.eps, res.eps0);
  EXPECT_LT(res.scale, 1.0);
  EXPECT_LT(res.scaled_ledger.eps, res.eps0);
}

TEST(Theta, EpsilonTooLargeWithoutRescale) {
  Loaded s = setup("map_a");
  s.p.settings.auto_rescale = false;
  try {
    solve_fixed_point(s.p, s.l, 1e-10, 500);
    FAIL() << "expected EpsilonTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EpsilonTooLarge);
  }
}

TEST(Theta, NonMemberRejected) {
  Loaded s = setup("map_b");
  ConjugacyTriple L = zero_triple(s.p);
  // a steep r violates ‖Dr‖₀ ≤ L_r
  L.r = SmoothMapRep::sampled(L.r.taylor(), GridRep::sample(L.r.grid()->spec(), 1, [](const Eigen::VectorXd& x) {
                                return Eigen::VectorXd::Constant(1, 0.9 * x(0) * x(0));
                              }));
  try {
    theta_apply(L, s.p, s.l);
    FAIL() << "expected OutsideGamma0";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutsideGamma0);
  }
}

TEST(Theta, NoConvergenceReported) {
  Loaded s = setup("map_a");
  try {
    solve_fixed_point(s.p, s.l, 1e-14, 3);
    FAIL() << "expected NoConvergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
  }
}

TEST(Bootstrap, FirstLevelMatchesDifferentiatedSolution) {
  Loaded s = setup("map_b");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-12, 500);
  std::vector<LevelResult> lv = bootstrap(res.scaled_problem, res.scaled_triple, 1, 1e-11);
  ASSERT_EQ(lv.size(), 1u);
  // scaled k_u(x) = s⁻¹k_u(sx) = −μs x², so Dk_u(x) = −2μs x in the inner ball
  Eigen::VectorXd x(1);
  x << 0.1;
  EXPECT_NEAR(lv[0].fixed.kappa_u.eval(x)(0), -2 * 0.05 * res.scale * 0.1, 1e-8);
  EXPECT_TRUE(fd_agreement(lv[0].fixed, res.scaled_triple, 1e-9).pass);
}

TEST(Bootstrap, LevelsBelowOrder) {
  Loaded s = setup("map_b");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-10, 500);
  try {
    bootstrap(res.scaled_problem, res.scaled_triple, s.p.n, 1e-10);
    FAIL() << "expected InsufficientSmoothness";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSmoothness);
  }
}

TEST(Bootstrap, DerivativeMembershipAtFixedPoint) {
  Loaded s = setup("map_a");
  FixedPointResult res = solve_fixed_point(s.p, s.l, 1e-12, 500);
  std::vector<LevelResult> lv = bootstrap(res.scaled_problem, res.scaled_triple, 1, 1e-11);
  MembershipReport m = derivative_membership(res.scaled_problem, lv[0].fixed, res.scaled_ledger);
  EXPECT_TRUE(m.member) << m.violation;
}
