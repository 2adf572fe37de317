#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "manicore/errors.hpp"
#include "manicore/linmodel/splitting.hpp"

namespace manicore {

struct Condition {
  std::string name;  // the inequality, as text
  double lhs = 0.0;  // value that has to stay below 1 (or above 0 for denominators)
  bool holds = false;
};

// Scalar constants of the existence proof. Unusable quantities (zero or
// negative denominators) are stored as +inf so every field still fills in.
struct ConstantsLedger {
  OperatorNorms norms;
  double L_g = 0, L_c = 0, eps = 0;
  int n = 2;

  double L_r = 0, L_t = 0, L_u = 0, L_s = 0, L_m1 = 0;
  // theta[k][i-1] = θ_{k,i}, 0 ≤ k ≤ n + 2
  std::vector<std::array<double, 3>> theta;
  double C1 = 0, C2 = 0, C3 = 0, delta = 0, gamma = 0;

  double theta0 = 0;                  // max_i θ_{0,i}
  std::array<double, 3> C1i{};        // C_{1,i}(ε)
  double theta1_eps = 0, lambda1 = 0;
  std::array<double, 3> C2i{};        // C_{2,i}(ε)
  double theta2_eps = 0, lambda2 = 0;
  // per m = 2..n: θ_m = max_i θ_{m,i}; for m̃ = m + 1: C_{m̃,i}(ε), θ_{m̃}(ε), λ_{m̃}
  std::vector<double> theta_m;
  std::vector<std::array<double, 3>> Cmi;
  std::vector<double> thetam_eps, lambdam;

  std::vector<Condition> conditions;

  bool feasible() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.holds; });
  }
  const Condition* first_violation() const {
    for (const auto& c : conditions)
      if (!c.holds) return &c;
    return nullptr;
  }
  double th(int k, int i) const { return theta.at(k)[i - 1]; }
  double theta_max(int k) const { return std::max({th(k, 1), th(k, 2), th(k, 3)}); }
  // θ_1(0): the ε → 0 limit of θ_1(ε)
  double theta1_zero() const { return theta_max(1); }
  double theta_m_at(int m) const { return theta_max(m); }
  double thetam_eps_at(int mt) const { return thetam_eps.at(mt - 3); }
};

namespace detail {
inline double positive_ratio(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}
}  // namespace detail

inline ConstantsLedger derive_ledger(const OperatorNorms& q, double L_g, double L_c, double eps, int n) {
  if (!(std::isfinite(L_g) && std::isfinite(L_c) && std::isfinite(eps)) || L_g < 0 || L_c < 0 || eps < 0)
    fail(ErrorKind::ConfigError, "ledger inputs must be finite and nonnegative");
  if (n < 1) fail(ErrorKind::ConfigError, "smoothness order must be at least 1");
  ConstantsLedger l;
  l.norms = q;
  l.L_g = L_g;
  l.L_c = L_c;
  l.eps = eps;
  l.n = n;
  const double Ac = q.Ac, Aci = q.Ac_inv, Aui = q.Au_inv, As = q.As;
  using detail::positive_ratio;

  l.L_r = positive_ratio(L_g + L_c * (2.0 * Ac + L_g), 1.0 - L_c);
  l.L_t = positive_ratio(Aci * Aci * l.L_r, 1.0 - Aci * l.L_r);
  l.L_u = positive_ratio(Aui * (1.0 + L_c) * L_g, 1.0 - l.L_r * Aui - Ac * Aui);
  if (Aui == 0.0 && std::isfinite(l.L_r)) l.L_u = 0.0;
  l.L_s = positive_ratio(Aci * (1.0 + L_c) * L_g, 1.0 - l.L_r * Aci - As * Aci);
  l.L_m1 = Aci + l.L_t;

  auto add = [&](std::string name, double lhs, bool holds) { l.conditions.push_back({std::move(name), lhs, holds}); };
  add("1 − L_c > 0", 1.0 - L_c, 1.0 - L_c > 0.0);
  add("1 − L_r‖A_c⁻¹‖ > 0", 1.0 - l.L_r * Aci, 1.0 - l.L_r * Aci > 0.0);
  add("1 − L_r‖A_u⁻¹‖ − ‖A_c‖‖A_u⁻¹‖ > 0", 1.0 - l.L_r * Aui - Ac * Aui, 1.0 - l.L_r * Aui - Ac * Aui > 0.0);
  add("1 − L_r‖A_c⁻¹‖ − ‖A_s‖‖A_c⁻¹‖ > 0", 1.0 - l.L_r * Aci - As * Aci, 1.0 - l.L_r * Aci - As * Aci > 0.0);

  const double Lm1 = l.L_m1;
  l.theta.resize(n + 3);
  for (int k = 0; k <= n + 2; ++k) {
    l.theta[k][0] = L_g + L_c;
    l.theta[k][1] = Aui * (std::pow(Ac + l.L_r, k) + L_g + l.L_u);
    if (Aui == 0.0) l.theta[k][1] = 0.0;
    l.theta[k][2] = std::pow(Lm1, k) * (As * (1.0 + Lm1 * l.L_s) + L_g * (1.0 + Lm1 * (1.0 + L_c)));
    for (double& v : l.theta[k])
      if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
  }
  for (int k = 0; k <= n; ++k)
    for (int i = 1; i <= 3; ++i) {
      double v = l.th(k, i);
      add("θ_{" + std::to_string(k) + "," + std::to_string(i) + "} < 1", v, v < 1.0);
    }

  const double a = 1.0 + L_c;
  l.C1 = (Ac + a * a + L_g + (Ac + l.L_r) * (Ac + l.L_r)) * eps;
  l.C2 = Aui * (a * a + L_g) * eps;
  l.C3 = Lm1 * Lm1 * (a * a + L_g) * eps;
  l.delta = std::max({positive_ratio(l.C1, 1.0 - l.th(2, 1)), positive_ratio(l.C2, 1.0 - l.th(2, 2)),
                      positive_ratio(l.C3, 1.0 - l.th(2, 3))});
  l.gamma = std::max(eps, l.delta);
  const double delta = l.delta, gamma = l.gamma;

  l.theta0 = l.theta_max(0);

  l.C1i = {(a + Ac + l.L_r) * eps, Aui * (L_g * a * eps + (Ac + l.L_r) * delta),
           l.th(2, 3) * gamma + Lm1 * a * eps + Lm1 * Lm1 * a * a * eps};
  if (Aui == 0.0) l.C1i[1] = 0.0;
  l.theta1_eps = l.theta_max(1) + *std::max_element(l.C1i.begin(), l.C1i.end());
  l.lambda1 = std::max(l.theta0, l.theta1_eps);

  l.C2i = {(a + Ac + l.L_r) * eps, Aui * ((2.0 + L_c) * eps + (Ac + l.L_r) * delta),
           2.0 * l.th(3, 3) * gamma + Lm1 * Lm1 * a * eps + std::pow(Lm1, 3) * a * a * eps};
  if (Aui == 0.0) l.C2i[1] = 0.0;
  l.theta2_eps = l.theta_max(2) + *std::max_element(l.C2i.begin(), l.C2i.end());
  l.lambda2 = std::max(l.theta1_zero(), l.theta2_eps);

  for (int m = 2; m <= n; ++m) l.theta_m.push_back(l.theta_max(m));
  for (int mt = 3; mt <= n + 1; ++mt) {
    const int m = mt - 1;
    std::array<double, 3> C{(a + Ac + l.L_r) * eps,
                            Aui * (a * eps + (Ac + l.L_r + m * std::pow(Ac + l.L_r, m - 1)) * delta),
                            mt * l.th(mt + 1, 3) * gamma + std::pow(Lm1, mt) * a * eps + std::pow(Lm1, mt + 1) * a * a * eps};
    if (Aui == 0.0) C[1] = 0.0;
    l.Cmi.push_back(C);
    double te = l.theta_max(mt) + *std::max_element(C.begin(), C.end());
    l.thetam_eps.push_back(te);
    l.lambdam.push_back(std::max(l.theta_max(m), te));
  }
  return l;
}

inline ConstantsLedger derive_ledger(const SplitLinearMap& L, double L_g, double L_c, double eps, int n) {
  return derive_ledger(L.norms, L_g, L_c, eps, n);
}

// Stage of the contraction argument whose ε-dependent constant must stay below 1.
struct Stage {
  enum Kind { C1, C2, Cm } kind = C1;
  int m = 3;  // m̃ for Cm
  static Stage c1() { return {C1, 0}; }
  static Stage c2() { return {C2, 0}; }
  static Stage cm(int mt) { return {Cm, mt}; }
};

inline double stage_constant(const ConstantsLedger& l, Stage s) {
  switch (s.kind) {
    case Stage::C1: return l.theta1_eps;
    case Stage::C2: return l.theta2_eps;
    case Stage::Cm:
      if (s.m < 3 || s.m - 3 >= static_cast<int>(l.thetam_eps.size()))
        fail(ErrorKind::ConfigError, "stage order outside the ledger");
      return l.thetam_eps_at(s.m);
  }
  return 0.0;
}

// Largest ε with stage constant < 1 on [0, ε₀), by bisection to 1e-6 relative.
// Returns +inf when the constant stays below 1 for every ε tried.
inline double epsilon_threshold(const std::function<ConstantsLedger(double)>& family, Stage stage) {
  auto val = [&](double e) { return stage_constant(family(e), stage); };
  if (!(val(0.0) < 1.0)) fail(ErrorKind::NoThreshold, "stage constant is not below 1 even at ε = 0");
  double lo = 0.0, hi = 1e-6;
  while (val(hi) < 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > 1e-6 * hi) {
    double mid = 0.5 * (lo + hi);
    if (val(mid) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline double epsilon_threshold(const ConstantsLedger& base, Stage stage) {
  return epsilon_threshold(
      [&](double e) { return derive_ledger(base.norms, base.L_g, base.L_c, e, base.n); }, stage);
}

struct LedgerEntry {
  std::string key;
  double value;
  std::string formula;
};

// Flat key/value view; one entry per constant with its defining formula.
inline std::vector<LedgerEntry> ledger_entries(const ConstantsLedger& l) {
  std::vector<LedgerEntry> e{
      {"norm_Ac", l.norms.Ac, "‖A_c‖"},
      {"norm_Ac_inv", l.norms.Ac_inv, "‖A_c⁻¹‖"},
      {"norm_Au", l.norms.Au, "‖A_u‖"},
      {"norm_Au_inv", l.norms.Au_inv, "‖A_u⁻¹‖"},
      {"norm_As", l.norms.As, "‖A_s‖"},
      {"norm_A", l.norms.A, "‖A‖"},
      {"L_g", l.L_g, "sup ‖Dg‖"},
      {"L_c", l.L_c, "sup ‖Dk_c‖"},
      {"eps", l.eps, "max(sup ‖D²g‖, sup ‖D²k_c‖)"},
      {"n", static_cast<double>(l.n), "smoothness order"},
      {"L_r", l.L_r, "(L_g + L_c(2‖A_c‖ + L_g)) / (1 − L_c)"},
      {"L_t", l.L_t, "‖A_c⁻¹‖² L_r / (1 − ‖A_c⁻¹‖ L_r)"},
      {"L_u", l.L_u, "‖A_u⁻¹‖(1 + L_c)L_g / (1 − L_r‖A_u⁻¹‖ − ‖A_c‖‖A_u⁻¹‖)"},
      {"L_s", l.L_s, "‖A_c⁻¹‖(1 + L_c)L_g / (1 − L_r‖A_c⁻¹‖ − ‖A_s‖‖A_c⁻¹‖)"},
      {"L_m1", l.L_m1, "‖A_c⁻¹‖ + L_t"},
  };
  for (int k = 0; k <= l.n; ++k) {
    e.push_back({"theta_" + std::to_string(k) + "_1", l.th(k, 1), "L_g + L_c"});
    e.push_back({"theta_" + std::to_string(k) + "_2", l.th(k, 2), "‖A_u⁻¹‖((‖A_c‖ + L_r)^k + L_g + L_u)"});
    e.push_back({"theta_" + std::to_string(k) + "_3", l.th(k, 3),
                 "L_m1^k(‖A_s‖(1 + L_m1 L_s) + L_g(1 + L_m1(1 + L_c)))"});
  }
  e.push_back({"C_1", l.C1, "(‖A_c‖ + (1 + L_c)² + L_g + (‖A_c‖ + L_r)²)ε"});
  e.push_back({"C_2", l.C2, "‖A_u⁻¹‖((1 + L_c)² + L_g)ε"});
  e.push_back({"C_3", l.C3, "L_m1²((1 + L_c)² + L_g)ε"});
  e.push_back({"delta", l.delta, "max_i C_i / (1 − θ_{2,i})"});
  e.push_back({"gamma", l.gamma, "max(ε, δ)"});
  e.push_back({"theta0", l.theta0, "max_i θ_{0,i}"});
  e.push_back({"theta1_eps", l.theta1_eps, "max_i θ_{1,i} + max_i C_{1,i}(ε)"});
  e.push_back({"lambda1", l.lambda1, "max(θ_0, θ_1(ε))"});
  e.push_back({"theta2_eps", l.theta2_eps, "max_i θ_{2,i} + max_i C_{2,i}(ε)"});
  e.push_back({"lambda2", l.lambda2, "max(θ_1(0), θ_2(ε))"});
  for (std::size_t j = 0; j < l.theta_m.size(); ++j)
    e.push_back({"theta_m_" + std::to_string(j + 2), l.theta_m[j], "max_i θ_{m,i}"});
  for (std::size_t j = 0; j < l.thetam_eps.size(); ++j) {
    e.push_back({"theta_mt_" + std::to_string(j + 3), l.thetam_eps[j], "max_i θ_{m̃,i} + max_i C_{m̃,i}(ε)"});
    e.push_back({"lambda_mt_" + std::to_string(j + 3), l.lambdam[j], "max(θ_m, θ_{m̃}(ε))"});
  }
  e.push_back({"feasible", l.feasible() ? 1.0 : 0.0, "all conditions hold"});
  return e;
}

}  // namespace manicore
