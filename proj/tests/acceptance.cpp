// Acceptance run: one line per criterion, nonzero exit if any fails.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "manicore/manicore.hpp"

#ifndef MANICORE_PROBLEMS_DIR
#define MANICORE_PROBLEMS_DIR "problems"
#endif

using namespace manicore;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string problem_path(const std::string& name) { return std::string(MANICORE_PROBLEMS_DIR) + "/" + name + ".json"; }

struct Loaded {
  ProblemInstance p;
  ConstantsLedger l;
};

Loaded load(const std::string& name) {
  Loaded x;
  x.p = load_problem(problem_path(name));
  NonlinearityBounds b = estimate_bounds(x.p);
  x.l = derive_ledger(x.p.linear, b.L_g, b.L_c, b.eps, x.p.n);
  return x;
}

double grid_sup(const SmoothMapRep& f) {
  return f.grid()->values().size() ? f.grid()->values().cwiseAbs().maxCoeff() : 0.0;
}

double coeff(const TaylorRep& T, int comp, MultiIndex a) {
  return total_degree(a) <= T.degree_cap() ? T.coeff(comp, a) : 0.0;
}

// max |T_α − want_α| over |α| ≤ deg for a 1-variable table
double coeff_error_1d(const TaylorRep& T, int comp, const std::vector<double>& want) {
  double e = 0.0;
  for (int d = 0; d < static_cast<int>(want.size()); ++d) e = std::max(e, std::abs(coeff(T, comp, {d}) - want[d]));
  return e;
}

// ---------------------------------------------------------------------------

Outcome zero_identity() {
  Loaded z = load("zero");
  FixedPointResult res = solve_fixed_point(z.p, z.l, 1e-12, 50);
  const ConjugacyTriple& L = res.triple;
  double sup = std::max({grid_sup(L.r), grid_sup(L.k_u), grid_sup(L.k_s), grid_sup(L.t)});
  double tab = std::max({L.r.taylor().max_abs(), L.k_u.taylor().max_abs(), L.k_s.taylor().max_abs()});
  bool ok = res.trace.size() == 1 && sup <= 1e-12 && tab <= 1e-12;
  return {ok, "sweeps " + std::to_string(res.trace.size()) + ", sup |Λ| " + f("%.1e", std::max(sup, tab))};
}

Outcome exact_conjugacy() {
  const double mu = 0.05;
  Loaded b = load("map_b");
  FixedPointResult res = solve_fixed_point(b.p, b.l, 1e-13, 500);
  const std::vector<double> ku{0.0, 0.0, -mu, 0.0, 0.0, 0.0, 0.0};
  const std::vector<double> r0(7, 0.0);
  double solver = std::max(coeff_error_1d(res.triple.k_u.taylor(), 0, ku), coeff_error_1d(res.triple.r.taylor(), 0, r0));
  TaylorResult tp = taylor_pipeline(b.p, b.p.settings.degree_cap);
  double taylor = std::max(coeff_error_1d(tp.pair.k_u, 0, ku), coeff_error_1d(tp.pair.r, 0, r0));
  InvarianceReport inv = invariance_check(b.p, res.triple, 200, 0.5 * b.p.cutoff.inner(), 0);
  bool ok = solver <= 1e-10 && taylor <= 1e-10 && inv.max() <= 1e-12;
  return {ok, "coeff err solver " + f("%.1e", solver) + " taylor " + f("%.1e", taylor) + ", invariance " +
                  f("%.1e", inv.max())};
}

Outcome order_matching() {
  const double mu = 0.05;
  Loaded a = load("map_a");
  TaylorResult tp = taylor_pipeline(a.p, 4);
  // k_s = 2μx² − 16μ³x⁴, r = 2μ²x³
  const std::vector<double> ks{0.0, 0.0, 2 * mu, 0.0, -16 * mu * mu * mu};
  const std::vector<double> r{0.0, 0.0, 0.0, 2 * mu * mu, 0.0};
  double te = std::max(coeff_error_1d(tp.pair.k_s, 0, ks), coeff_error_1d(tp.pair.r, 0, r));
  FixedPointResult res = solve_fixed_point(a.p, a.l, 1e-10, 500);
  double agree = 0.0;
  for (int d = 0; d <= 4; ++d) {
    agree = std::max(agree, std::abs(coeff(res.triple.k_s.taylor(), 0, {d}) - coeff(tp.pair.k_s, 0, {d})));
    agree = std::max(agree, std::abs(coeff(res.triple.r.taylor(), 0, {d}) - coeff(tp.pair.r, 0, {d})));
  }
  bool ok = te <= 1e-12 && agree <= 1e-6;
  return {ok, "b2 " + f("%.6g", coeff(tp.pair.k_s, 0, {2})) + " b3 " + f("%.3g", coeff(tp.pair.k_s, 0, {3})) + " b4 " +
                  f("%.6g", coeff(tp.pair.k_s, 0, {4})) + " (−16μ³), r3 " + f("%.6g", coeff(tp.pair.r, 0, {3})) +
                  " (2μ²); oracle err " + f("%.1e", te) + ", solver agreement " + f("%.1e", agree)};
}

Outcome defect_decay() {
  Loaded a = load("map_a");
  bool ok = true;
  std::string d;
  for (int deg = 2; deg <= 5; ++deg) {
    TaylorResult tp = taylor_pipeline(a.p, deg, {0.0625, 0.125, 0.25});
    ok = ok && std::abs(tp.slope - (deg + 1)) <= 0.5;
    d += "d=" + std::to_string(deg) + ": " + f("%.3f", tp.slope) + (deg < 5 ? ", " : "");
  }
  return {ok, "slopes " + d};
}

Outcome contraction_rate() {
  Loaded a = load("map_a");
  FixedPointResult res = solve_fixed_point(a.p, a.l, 1e-10, 500);
  const double theta0 = res.scaled_ledger.theta0;
  double worst = 0.0;
  for (const auto& row : res.trace)
    if (row.sweep >= 2 && row.d0 > 1e-12) worst = std::max(worst, row.ratio0);
  bool ok = worst <= 1.05 * theta0;
  return {ok, "max C0 ratio " + f("%.4f", worst) + ", θ₀ " + f("%.4f", theta0) + ", limit " + f("%.4f", 1.05 * theta0)};
}

Outcome ledger_arithmetic() {
  OperatorNorms q;
  q.Ac = 1.0, q.Ac_inv = 1.0, q.Au = 2.0, q.Au_inv = 0.5, q.As = 0.5, q.A = 2.0;
  const double Lg = 0.05;
  ConstantsLedger l = derive_ledger(q, Lg, 0.0, 0.01, 2);
  // hand values
  const double Lr = 0.05, Lt = 1.0 / 19.0, Lu = 1.0 / 19.0, Ls = 1.0 / 9.0;
  const double Lm1 = 1.0 + Lt;
  const double th13 = Lm1 * (0.5 * (1.0 + Lm1 * Ls) + Lg * (1.0 + Lm1));
  double err = std::max({std::abs(l.L_r - Lr), std::abs(l.L_t - Lt), std::abs(l.L_u - Lu), std::abs(l.L_s - Ls),
                         std::abs(l.th(1, 3) - th13)});
  bool sweep_ok = true;
  for (double e : {1e-4, 1e-3, 5e-3, 1e-2, 2e-2}) {
    ConstantsLedger le = derive_ledger(q, Lg, 0.0, e, 2);
    const double Ci[3] = {le.C1, le.C2, le.C3};
    for (int i = 1; i <= 3; ++i) sweep_ok = sweep_ok && le.th(2, i) * le.delta + Ci[i - 1] <= le.delta * (1 + 1e-15);
  }
  bool ok = err <= 1e-12 && sweep_ok;
  return {ok, "max hand-value error " + f("%.1e", err) + ", θ_{1,3} " + f("%.6f", l.th(1, 3)) +
                  ", δ-inequality over 5 ε " + (sweep_ok ? "holds" : "fails")};
}

Outcome inversion() {
  const double mu = 0.05;
  const Eigen::MatrixXd Ac = Eigen::MatrixXd::Identity(1, 1);
  TaylorRep r(1, 1, 6);
  r.coeffs()(0, 3) = 2 * mu;
  r.set_truncated(false);
  SmoothMapRep rm = SmoothMapRep::polynomial(r);
  GridSpec spec{1, 1.0, 81};
  InversionResult inv = invert_center_map(rm, Ac, spec, 1e-12, 200, 6);
  double resid = 0.0, d2T = 0.0, dr = 0.0, d2r = 0.0;
  for (long j = 0; j < spec.nodes(); ++j) {
    Eigen::VectorXd x = spec.node(j);
    Eigen::VectorXd y = x + inv.t.grid()->values().col(j);
    resid = std::max(resid, std::abs((y + r.eval(y) - x)(0)));
    d2T = std::max(d2T, inverse_derivative_tensor(rm, inv.t, Ac, 2, x).norm({1}, {1}));
    dr = std::max(dr, std::abs(6 * mu * x(0) * x(0)));
    d2r = std::max(d2r, std::abs(12 * mu * x(0)));
  }
  // L_t and L₋₁ from ‖Dr‖₀; δ from ‖D²r‖₀
  const double Lt = dr / (1.0 - dr), Lm1 = 1.0 + Lt;
  bool ok = resid <= 1e-10 && inv.dt_sup <= Lt && d2T <= Lm1 * Lm1 * Lm1 * d2r;
  return {ok, "residual " + f("%.1e", resid) + ", ‖Dt‖₀ " + f("%.4f", inv.dt_sup) + " ≤ L_t " + f("%.4f", Lt) +
                  ", ‖D²T‖₀ " + f("%.4f", d2T) + " ≤ " + f("%.4f", Lm1 * Lm1 * Lm1 * d2r)};
}

TaylorRep random_poly(std::mt19937_64& rng, int n, int k, int deg) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TaylorRep p(n, k, deg);
  for (int i = 0; i < p.basis().size(); ++i)
    for (int c = 0; c < k; ++c) p.coeffs()(c, i) = u(rng);
  p.set_truncated(false);
  return p;
}

Outcome faa_di_bruno_check() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst = 0.0;
  bool p2_zero = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = dim(rng), k = dim(rng), j = dim(rng);
    SmoothMapRep f2 = SmoothMapRep::polynomial(random_poly(rng, n, k, 3));
    SmoothMapRep f1 = SmoothMapRep::polynomial(random_poly(rng, k, j, 3));
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    for (int m = 1; m <= 4; ++m) {
      double e = fd_compare([&](const Eigen::VectorXd& y) { return faa_di_bruno(f1, f2, m, y).table; },
                            [&](const Eigen::VectorXd& y) { return f1.eval(f2.eval(y)); }, {x}, m, 0.02);
      worst = std::max(worst, e);
    }
    p2_zero = p2_zero && partition_remainder(f1, f2, 2, x).table.coeffs().isZero(0.0);
  }
  return {worst <= 1e-5 && p2_zero,
          "max relative error " + f("%.1e", worst) + " over 50 pairs, m ≤ 4; 𝒫₂ " + (p2_zero ? "≡ 0" : "nonzero")};
}

Outcome derivative_bootstrap() {
  Loaded a = load("map_a");
  FixedPointResult res = solve_fixed_point(a.p, a.l, 1e-12, 500);
  std::vector<LevelResult> lv = bootstrap(res.scaled_problem, res.scaled_triple, 2, 1e-11, 500);
  bool ok = true;
  std::string d;
  for (const auto& r : lv) {
    StencilCheck sc = fd_agreement(r.fixed, res.scaled_triple, 1e-9);
    ok = ok && sc.pass;
    d += "level " + std::to_string(r.fixed.m) + ": worst diff/tolerance " + f("%.3f", sc.worst_ratio) + " ";
  }
  return {ok, d};
}

TaylorPair perturb(const TaylorPair& q, std::mt19937_64& rng, double size) {
  std::uniform_real_distribution<double> u(-size, size);
  TaylorPair out = q;
  for (TaylorRep* T : {&out.r, &out.k_s, &out.k_u}) {
    const MonomialBasis& B = T->basis();
    for (int i = B.degree_begin(2); i < B.size(); ++i)
      for (int c = 0; c < T->codomain_dim(); ++c) T->coeffs()(c, i) += u(rng);
  }
  return out;
}

Outcome containment() {
  Loaded a = load("map_a");
  const double tol = 1e-12;
  FixedPointResult ref = solve_fixed_point(a.p, a.l, tol, 500);
  TaylorPair base = taylor_pipeline(a.p, 3).pair;
  std::mt19937_64 rng(7);
  int violations = 0, runs = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    ConjugacyTriple L0 = pair_to_triple(a.p, perturb(base, rng, 0.01), true);
    for (int m : {0, 1}) {
      DefectReport rep = certify(a.p, a.l, L0, m, 0.0, &ref.triple, reference_error(ref, a.l, m, tol));
      ++runs;
      if (!rep.contained) ++violations;
      worst = std::max(worst, std::max(rep.distance_k, rep.distance_r) / (rep.bound + rep.reference_error));
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(runs) +
                               " runs, worst distance/bound " + f("%.3f", worst)};
}

Outcome scaling_lemma() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> eps_u(0.05, 0.9);
  double coeff = 0.0, grid = 0.0;
  int fails = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim(rng);
    TaylorRep h1 = random_poly(rng, n, n, 4), h2 = random_poly(rng, n, n, 4);
    // vanish at 0 with zero derivative, as the lemma's maps do
    for (TaylorRep* h : {&h1, &h2})
      for (int i = 0; i < h->basis().degree_end(1); ++i) h->coeffs().col(i).setZero();
    ScalingReport s = scaling_check(h1, h2, eps_u(rng), 0.5, n == 3 ? 15 : 31);
    coeff = std::max({coeff, s.coeff_error, s.compose_coeff_error});
    grid = std::max({grid, s.d1_grid_error, s.d2_grid_error, s.compose_grid_error});
    if (!s.pass(1e-13, 1e-8)) ++fails;
  }
  return {fails == 0, "coefficient error " + f("%.1e", coeff) + ", grid error " + f("%.1e", grid) + " over 20 pairs"};
}

Outcome kc_independence_check() {
  Loaded a = load("map_a"), b = load("map_a_kc");
  const double tol = 1e-10;
  FixedPointResult ra = solve_fixed_point(a.p, a.l, tol, 500), rb = solve_fixed_point(b.p, b.l, tol, 500);
  KcIndependenceReport k = kc_independence(a.p, ra.triple, b.p, rb.triple, 200, 0.5 * a.p.cutoff.inner(), 0);
  bool ok = k.image_distance <= 10 * tol && k.reparam_residual <= 10 * tol;
  return {ok, "image distance " + f("%.1e", k.image_distance) + ", reparameterization " + f("%.1e", k.reparam_residual) +
                  ", dynamics " + f("%.1e", k.dynamics_residual) + ", budget " + f("%.0e", 10 * tol)};
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Item> items{
      {"zero-nonlinearity identity", zero_identity},
      {"exact conjugacy (MAP-B)", exact_conjugacy},
      {"order matching (MAP-A)", order_matching},
      {"defect decay", defect_decay},
      {"contraction rate", contraction_rate},
      {"ledger arithmetic", ledger_arithmetic},
      {"inversion", inversion},
      {"Faà di Bruno", faa_di_bruno_check},
      {"derivative bootstrap", derivative_bootstrap},
      {"a-posteriori containment", containment},
      {"scaling lemma", scaling_lemma},
      {"k_c independence", kc_independence_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Outcome o;
    try {
      o = items[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, items[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria pass\n", items.size() - failed, items.size());
  return failed ? 1 : 0;
}
