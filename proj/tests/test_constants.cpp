#include <gtest/gtest.h>

#include <cmath>

#include "manicore/constants/ledger.hpp"

using namespace manicore;

namespace {

// A = diag(1, 2, 1/2), ‖Dg‖ ≤ 1/20, k_c = 0
OperatorNorms example_norms() {
  OperatorNorms q;
  q.Ac = 1.0, q.Ac_inv = 1.0, q.Au = 2.0, q.Au_inv = 0.5, q.As = 0.5, q.A = 2.0;
  return q;
}

}  // namespace

TEST(Ledger, HandValuesExampleTwo) {
  ConstantsLedger l = derive_ledger(example_norms(), 0.05, 0.0, 0.01, 2);
  // L_r = L_g; L_t = L_r/(1 − L_r) = 1/19; L_u = (1/2)(1/20)/(1 − 1/40 − 1/2) = 1/19;
  // L_s = (1/20)/(1 − 1/20 − 1/2) = 1/9
  EXPECT_NEAR(l.L_r, 0.05, 1e-15);
  EXPECT_NEAR(l.L_t, 1.0 / 19.0, 1e-15);
  EXPECT_NEAR(l.L_u, 1.0 / 19.0, 1e-15);
  EXPECT_NEAR(l.L_s, 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(l.L_m1, 20.0 / 19.0, 1e-15);
  // θ_{1,3} = (20/19)(1/2 (1 + 20/171) + 1/20 (1 + 20/19)) = 0.695906…
  const double th13 = (20.0 / 19.0) * (0.5 * (1.0 + 20.0 / 171.0) + 0.05 * (39.0 / 19.0));
  EXPECT_NEAR(l.th(1, 3), th13, 1e-14);
  EXPECT_NEAR(l.th(1, 3), 0.6959064327, 1e-9);
  // θ_{0,i}: L_g, (1/2)(1 + 1/20 + 1/19), (1/2)(1 + 20/171) + (1/20)(39/19)
  EXPECT_NEAR(l.th(0, 1), 0.05, 1e-15);
  EXPECT_NEAR(l.th(0, 2), 0.5 * (1.0 + 0.05 + 1.0 / 19.0), 1e-15);
  EXPECT_NEAR(l.theta0, th13 * 19.0 / 20.0, 1e-14);
  EXPECT_TRUE(l.feasible());
}

TEST(Ledger, ThetaGrowsWithOrder) {
  ConstantsLedger l = derive_ledger(example_norms(), 0.05, 0.0, 0.01, 3);
  for (int k = 1; k <= 3; ++k) EXPECT_GE(l.theta_max(k), l.theta_max(k - 1));
}

TEST(Ledger, DeltaAbsorbsTheSecondDerivativeDefect) {
  for (double e : {1e-4, 1e-3, 5e-3, 1e-2, 2e-2}) {
    ConstantsLedger l = derive_ledger(example_norms(), 0.05, 0.0, e, 2);
    const double C[3] = {l.C1, l.C2, l.C3};
    for (int i = 1; i <= 3; ++i) EXPECT_LE(l.th(2, i) * l.delta + C[i - 1], l.delta * (1 + 1e-15)) << "ε = " << e;
    EXPECT_NEAR(l.gamma, std::max(e, l.delta), 0.0);
  }
}

TEST(Ledger, CConstantsScaleLinearlyInEps) {
  ConstantsLedger a = derive_ledger(example_norms(), 0.05, 0.0, 0.01, 2);
  ConstantsLedger b = derive_ledger(example_norms(), 0.05, 0.0, 0.02, 2);
  EXPECT_NEAR(b.C1, 2 * a.C1, 1e-15);
  EXPECT_NEAR(b.C2, 2 * a.C2, 1e-15);
  EXPECT_NEAR(b.C3, 2 * a.C3, 1e-15);
}

TEST(Ledger, InfeasibleIsReportedNotThrown) {
  ConstantsLedger l = derive_ledger(example_norms(), 0.6, 0.0, 0.01, 2);
  EXPECT_FALSE(l.feasible());
  ASSERT_NE(l.first_violation(), nullptr);
  EXPECT_FALSE(l.first_violation()->holds);
  // every field still filled
  EXPECT_FALSE(std::isnan(l.L_s));
}

TEST(Ledger, EpsilonThresholdBracketsStageConstant) {
  ConstantsLedger l = derive_ledger(example_norms(), 0.05, 0.0, 0.01, 2);
  double e0 = epsilon_threshold(l, Stage::c1());
  ASSERT_GT(e0, 0.0);
  auto at = [&](double e) { return stage_constant(derive_ledger(example_norms(), 0.05, 0.0, e, 2), Stage::c1()); };
  EXPECT_LT(at(0.99 * e0), 1.0);
  EXPECT_GE(at(1.01 * e0), 1.0);
}

TEST(Ledger, EntriesCoverEveryConstant) {
  ConstantsLedger l = derive_ledger(example_norms(), 0.05, 0.0, 0.01, 2);
  auto e = ledger_entries(l);
  auto has = [&](const std::string& k) {
    for (const auto& x : e)
      if (x.key == k) return true;
    return false;
  };
  for (const char* k : {"L_r", "L_t", "L_u", "L_s", "theta0", "delta", "C_1", "C_2", "C_3", "theta_1_3", "feasible"})
    EXPECT_TRUE(has(k)) << k;
}

TEST(GapCondition, ExampleNormsPass) {
  EXPECT_TRUE(gap_condition(example_norms(), 2));
  OperatorNorms q = example_norms();
  q.As = 1.2;
  EXPECT_FALSE(gap_condition(q, 2));
}
