#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "manicore/manicore.hpp"

namespace manicore::cli {
namespace {

struct Options {
  std::string config;
  int threads = 0;
  std::uint64_t seed = 0;
  int degree = -1;
  double tol = -1.0;
  int max_iter = -1;
  int bootstrap = 0;
  int order = 0;
  double M = 0.0;
  std::string pair;
  int count = 100;
  double radius = -1.0;
};

struct Session {
  std::string text;
  ProblemSpec spec;
  ProblemInstance p;
  NonlinearityBounds bounds;
  ConstantsLedger ledger;
};

Session open(const std::string& path) {
  Session s;
  s.text = read_text_file(path);
  s.spec = parse_problem(s.text);
  s.p = build_problem(s.spec);
  s.bounds = estimate_bounds(s.p);
  s.ledger = derive_ledger(s.p.linear, s.bounds.L_g, s.bounds.L_c, s.bounds.eps, s.p.n);
  return s;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string yes(bool b) { return b ? "true" : "false"; }

double solve_tol(const Session& s, const Options& o) { return o.tol > 0.0 ? o.tol : s.p.settings.tol; }
int solve_iter(const Session& s, const Options& o) { return o.max_iter > 0 ? o.max_iter : s.p.settings.max_iter; }

// ---- ledger ----

int cmd_ledger(const Session& s, io::RunWriter& w, std::ostream& out) {
  const ConstantsLedger& l = s.ledger;
  out << "problem " << (s.spec.name.empty() ? "(unnamed)" : s.spec.name) << "  dim_c " << s.p.dim_c() << "  dim_u "
      << s.p.dim_u() << "  dim_s " << s.p.dim_s() << "  n " << s.p.n << "\n";
  out << "config " << w.hash() << "\n\n";
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& e : ledger_entries(l)) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-14s %-22s %s\n", e.key.c_str(), fixed(e.value, 10).c_str(), e.formula.c_str());
    out << line;
    kv.emplace_back(e.key, io::num(e.value));
  }
  out << "\nconditions\n";
  for (const auto& c : l.conditions) {
    out << (c.holds ? "  [ok]        " : "  [VIOLATED]  ") << c.name << "   (" << fixed(c.lhs, 8) << ")\n";
    kv.emplace_back("condition " + c.name, std::string(c.holds ? "ok " : "violated ") + io::num(c.lhs));
  }
  double eps0 = 0.0;
  bool has_eps0 = false;
  if (l.feasible()) {
    try {
      eps0 = epsilon_threshold(l, Stage::c1());
      has_eps0 = true;
    } catch (const Error&) {
    }
  }
  out << "\nfeasible=" << yes(l.feasible()) << "\n";
  out << "theta0=" << fixed(l.theta0, 6) << "   (max_i θ_{0,i})\n";
  out << "theta1(0)=" << fixed(l.theta1_zero(), 6) << "   (max_i θ_{1,i})\n";
  if (has_eps0) {
    out << "eps0=" << fixed(eps0, 6) << "   eps=" << fixed(l.eps, 6)
        << (l.eps < eps0 ? "   (no rescaling needed)\n" : "   (solve rescales the problem)\n");
    kv.emplace_back("eps0", io::num(eps0));
  }
  if (!l.feasible()) out << "first violation: " << l.first_violation()->name << "\n";
  w.key_values("ledger.txt", kv);
  w.results()["feasible"] = l.feasible();
  w.results()["theta0"] = l.theta0;
  return l.feasible() ? 0 : exit_code(ErrorKind::InfeasibleConstants);
}

// ---- taylor ----

nlohmann::json pair_json(const TaylorPair& q) {
  return {{"degree", q.degree}, {"r", taylor_to_json(q.r)}, {"k_u", taylor_to_json(q.k_u)}, {"k_s", taylor_to_json(q.k_s)}};
}

int cmd_taylor(const Session& s, const Options& o, io::RunWriter& w, std::ostream& out) {
  const int d = o.degree > 0 ? o.degree : s.p.settings.degree_cap;
  TaylorResult res = taylor_pipeline(s.p, d);
  out << "taylor pipeline through degree " << d << "\n";
  for (const auto& h : res.systems)
    out << "  order " << h.degree << "  cond(u) " << fixed(h.cond_u, 4) << "  cond(s) " << fixed(h.cond_s, 4) << "\n";
  std::vector<std::vector<double>> rows;
  for (const auto& r : res.defects) {
    out << "  radius " << fixed(r.radius) << "  sup defect " << fixed(r.defect) << "\n";
    rows.push_back({r.radius, r.defect});
  }
  out << "log-log slope " << fixed(res.slope, 4) << " (order d+1 = " << d + 1 << ")\n";
  w.json("taylor_coeffs.json", pair_json(res.pair));
  w.columns("taylor_defect.txt", {"radius", "defect"}, rows);
  w.results()["degree"] = d;
  w.results()["slope"] = std::isfinite(res.slope) ? nlohmann::json(res.slope) : nlohmann::json(nullptr);
  return 0;
}

// ---- solve ----

void write_trace(io::RunWriter& w, const std::string& name, const std::vector<TraceRow>& trace) {
  std::vector<std::vector<double>> rows;
  for (const auto& t : trace)
    rows.push_back({double(t.sweep), t.d0, t.d1, t.ratio0, t.ratio1, t.inversion_residual, t.taylor_change});
  w.columns(name, {"sweep", "d0", "d1", "ratio0", "ratio1", "inversion_residual", "taylor_change"}, rows);
}

double max_ratio(const std::vector<TraceRow>& trace) {
  // last half of the sweeps, where the rate has settled; tiny differences are noise
  double r = 0.0;
  for (std::size_t i = trace.size() / 2; i < trace.size(); ++i)
    if (trace[i].d0 > 1e-13) r = std::max(r, trace[i].ratio0);
  return r;
}

int cmd_solve(const Session& s, const Options& o, io::RunWriter& w, std::ostream& out) {
  const double tol = solve_tol(s, o);
  FixedPointResult res = solve_fixed_point(s.p, s.ledger, tol, solve_iter(s, o));
  out << "converged in " << res.trace.size() << " sweep" << (res.trace.size() == 1 ? "" : "s") << "  (tol "
      << fixed(tol, 3) << ", scale " << fixed(res.scale) << ", eps0 " << fixed(res.eps0) << ")\n";
  const TraceRow& last = res.trace.back();
  out << "last difference  C0 " << fixed(last.d0, 4) << "  C1 " << fixed(last.d1, 4) << "\n";
  out << "observed C0 ratio " << fixed(max_ratio(res.trace), 4) << "  theta0 " << fixed(s.ledger.theta0, 4) << "\n";

  const ConjugacyTriple& L = res.triple;
  w.grid("solve_r.txt", *L.r.grid(), "r");
  w.grid("solve_k_u.txt", *L.k_u.grid(), "k_u");
  w.grid("solve_k_s.txt", *L.k_s.grid(), "k_s");
  w.grid("solve_t.txt", *L.t.grid(), "t");
  w.json("solve_taylor.json", {{"r", taylor_to_json(L.r.taylor())},
                               {"k_u", taylor_to_json(L.k_u.taylor())},
                               {"k_s", taylor_to_json(L.k_s.taylor())},
                               {"t", taylor_to_json(L.t.taylor())}});
  write_trace(w, "solve_trace.txt", res.trace);
  auto& R = w.results();
  R["converged"] = res.converged;
  R["sweeps"] = res.trace.size();
  R["scale"] = res.scale;
  R["final_d0"] = last.d0;
  R["final_d1"] = last.d1;

  if (o.bootstrap > 0) {
    out << "derivative bootstrap, levels 1.." << o.bootstrap << "\n";
    std::vector<LevelResult> lv = bootstrap(res.scaled_problem, res.scaled_triple, o.bootstrap, tol, solve_iter(s, o));
    bool all = true;
    for (const auto& r : lv) {
      StencilCheck sc = fd_agreement(r.fixed, res.scaled_triple, 1e-9);
      all = all && sc.pass;
      out << "  level " << r.fixed.m << ": " << r.trace.size() << " sweeps, stencil agreement "
          << (sc.pass ? "pass" : "FAIL") << " (max diff " << fixed(sc.max_diff, 3) << ", worst ratio "
          << fixed(sc.worst_ratio, 3) << ")\n";
      write_trace(w, "bootstrap_" + std::to_string(r.fixed.m) + "_trace.txt", r.trace);
      w.grid("bootstrap_" + std::to_string(r.fixed.m) + "_rho.txt", *r.fixed.rho.grid(), "rho");
      R["bootstrap"][std::to_string(r.fixed.m)] = {{"sweeps", r.trace.size()}, {"stencil_pass", sc.pass},
                                                   {"max_diff", sc.max_diff}};
    }
    if (!all) return exit_code(ErrorKind::VerificationFailure);
  }
  return 0;
}

// ---- certify ----

TaylorPair read_pair(const ProblemInstance& p, const std::string& path) {
  std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::ConfigError, path + ": " + e.what());
  }
  const int dc = p.dim_c();
  auto table = [&](const char* key, int codim) {
    if (!j.contains(key)) return TaylorRep(dc, codim, 2);
    return table_to_taylor(parse_coeff_table(j[key], text, key, dc, codim), dc, codim);
  };
  TaylorPair q{table("r", dc), table("k_u", p.dim_u()), table("k_s", p.dim_s()), 1};
  int cap = std::max({q.r.degree_cap(), q.k_u.degree_cap(), q.k_s.degree_cap()});
  q.r = q.r.with_cap(cap);
  q.k_u = q.k_u.with_cap(cap);
  q.k_s = q.k_s.with_cap(cap);
  q.degree = cap;
  return q;
}

int cmd_certify(const Session& s, const Options& o, io::RunWriter& w, std::ostream& out) {
  const ProblemInstance& p = s.p;
  TaylorPair q;
  if (!o.pair.empty()) {
    q = read_pair(p, o.pair);
    out << "pair from " << o.pair << " (degree " << q.degree << ")\n";
  } else {
    const int d = std::min(p.settings.degree_cap, p.n + 2);
    q = taylor_pipeline(p, d).pair;
    out << "pair from the taylor pipeline (degree " << d << ")\n";
  }
  ConjugacyTriple L0 = pair_to_triple(p, q, true);
  const double tol = solve_tol(s, o);
  FixedPointResult ref = solve_fixed_point(p, s.ledger, tol, solve_iter(s, o));
  double ref_err = reference_error(ref, s.ledger, o.order, tol);
  DefectReport rep = certify(p, s.ledger, L0, o.order, o.M, &ref.triple, ref_err);

  out << "\ncertification, order m = " << rep.m << "\n";
  out << "  M                " << fixed(rep.M) << (o.M > 0.0 ? "" : "  (measured)") << "\n";
  out << "  defect eps_def   " << fixed(rep.eps_def) << "\n";
  out << "  C(M, m)          " << fixed(rep.C_const) << "\n";
  out << "  bound            " << fixed(rep.bound) << "\n";
  out << "  distance k, r    " << fixed(rep.distance_k) << ", " << fixed(rep.distance_r) << "\n";
  out << "  reference error  " << fixed(rep.reference_error) << "\n";
  out << "  contained        " << yes(rep.contained) << "\n";
  for (const auto& c : rep.caveats) out << "  caveat: " << c << "\n";

  std::vector<std::pair<std::string, std::string>> kv{
      {"order", std::to_string(rep.m)},          {"M", io::num(rep.M)},
      {"eps_def", io::num(rep.eps_def)},         {"C", io::num(rep.C_const)},
      {"bound", io::num(rep.bound)},             {"k0_norm", io::num(rep.k0_norm)},
      {"r0_norm", io::num(rep.r0_norm)},         {"Dr0_sup", io::num(rep.Dr0_sup)},
      {"distance_k", io::num(rep.distance_k)},   {"distance_r", io::num(rep.distance_r)},
      {"reference_error", io::num(rep.reference_error)}, {"contained", yes(rep.contained)}};
  for (std::size_t k = 0; k < rep.constants.levels.size(); ++k) {
    const std::string i = std::to_string(k);
    kv.emplace_back("C1_" + i, io::num(rep.constants.C1[k]));
    kv.emplace_back("C2_" + i, io::num(rep.constants.C2[k]));
    kv.emplace_back("C3_" + i, io::num(rep.constants.C3[k]));
    kv.emplace_back("C_level_" + i, io::num(rep.constants.levels[k]));
  }
  for (std::size_t k = 0; k < rep.caveats.size(); ++k) kv.emplace_back("caveat_" + std::to_string(k), rep.caveats[k]);
  w.key_values("certify.txt", kv);
  w.results()["contained"] = rep.contained;
  w.results()["bound"] = rep.bound;
  w.results()["eps_def"] = rep.eps_def;
  return rep.contained ? 0 : exit_code(ErrorKind::VerificationFailure);
}

// ---- verify ----

int cmd_verify(const Session& s, const Options& o, io::RunWriter& w, std::ostream& out) {
  const ProblemInstance& p = s.p;
  const int steps = 10;
  const double tol = solve_tol(s, o);
  // orbit errors grow like ‖A_u‖^steps, so the reference solve runs tighter than the budget
  const double growth = std::pow(std::max(1.0, p.linear.norms.Au), steps);
  const double inner_tol = std::max(1e-14, tol / growth);
  FixedPointResult res = solve_fixed_point(p, s.ledger, inner_tol, solve_iter(s, o));
  const ConjugacyTriple& L = res.triple;
  const double radius = 0.5 * p.cutoff.inner();
  std::vector<CheckResult> checks;

  checks.push_back({"tangency", tangency_check(p, L) ? 0.0 : 1.0, 0.0, tangency_check(p, L), "K(0) = 0, DK(0) = ι"});
  InvarianceReport inv = invariance_check(p, L, 200, radius, o.seed);
  checks.push_back({"invariance", inv.max(), 10 * tol, inv.max() <= 10 * tol, "F∘K − K∘R and graph distance"});
  double orb = orbit_shadowing(p, L, 100, radius, steps, o.seed);
  checks.push_back({"orbit_shadowing", orb, 10 * tol, orb <= 10 * tol, std::to_string(steps) + " steps"});

  // D^m(g∘K) from jets against finite differences, K the Taylor companion
  SmoothMapRep Kt = SmoothMapRep::polynomial(K_taylor(p, L));
  std::vector<Eigen::VectorXd> pts = random_ball(p.dim_c(), radius, 20, o.seed);
  double fdb = 0.0;
  for (int m = 1; m <= std::min(p.n, 4); ++m)
    fdb = std::max(fdb, fd_compare([&](const Eigen::VectorXd& x) { return faa_di_bruno(p.g, Kt, m, x).table; },
                                   [&](const Eigen::VectorXd& x) { return p.g.eval(Kt.eval(x)); }, pts, m, 0.02));
  checks.push_back({"faa_di_bruno", fdb, 1e-5, fdb <= 1e-5, "relative, m ≤ min(n, 4)"});

  // scaling lemma on the center dynamics table
  TaylorRep rt = L.r.taylor().with_cap(std::min(4, p.settings.degree_cap));
  rt.set_truncated(false);
  ScalingReport sc = scaling_check(rt, rt, 0.1, radius);
  double coeff = std::max(sc.coeff_error, sc.compose_coeff_error);
  double grid = std::max({sc.d1_grid_error, sc.d2_grid_error, sc.compose_grid_error});
  checks.push_back({"scaling_coefficients", coeff, 1e-12, coeff <= 1e-12, "h^ε = ε⁻¹h(ε·)"});
  checks.push_back({"scaling_grid", grid, 1e-8, grid <= 1e-8, "sup norms on the grid"});

  if (p.n >= 2) {
    std::vector<LevelResult> lv = bootstrap(res.scaled_problem, res.scaled_triple, 1, 1e-11, solve_iter(s, o));
    StencilCheck st = fd_agreement(lv[0].fixed, res.scaled_triple, 1e-9);
    checks.push_back({"derivative_bootstrap", st.worst_ratio, 1.0, st.pass, "Θ^[2] fixed point against FD"});
  }

  bool all = true;
  std::vector<std::pair<std::string, std::string>> kv;
  out << "verify  (reference solve tol " << fixed(inner_tol, 3) << ", radius " << fixed(radius) << ", seed " << o.seed
      << ")\n";
  for (const auto& c : checks) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-22s %-5s value %-12s threshold %-10s %s\n", c.name.c_str(),
                  c.pass ? "pass" : "FAIL", fixed(c.value, 4).c_str(), fixed(c.threshold, 3).c_str(), c.detail.c_str());
    out << line;
    all = all && c.pass;
    kv.emplace_back(c.name, std::string(c.pass ? "pass " : "fail ") + io::num(c.value) + " " + io::num(c.threshold));
    w.results()["checks"][c.name] = {{"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}};
  }
  out << (all ? "all checks pass\n" : "some checks failed\n");
  w.key_values("verify.txt", kv);
  w.results()["pass"] = all;
  return all ? 0 : exit_code(ErrorKind::VerificationFailure);
}

// ---- sample ----

int cmd_sample(const Session& s, const Options& o, io::RunWriter& w, std::ostream& out) {
  const ProblemInstance& p = s.p;
  const double radius = o.radius > 0.0 ? o.radius : p.cutoff.inner();
  if (radius > p.center_grid().half_width)
    fail(ErrorKind::DomainEscape, "sample radius exceeds the computational box");
  if (o.count < 1) fail(ErrorKind::ConfigError, "--count must be positive");
  FixedPointResult res = solve_fixed_point(p, s.ledger, solve_tol(s, o), solve_iter(s, o));
  std::vector<Eigen::VectorXd> pts = random_ball(p.dim_c(), radius, o.count, o.seed);
  std::vector<std::string> cols;
  for (int i = 0; i < p.dim_c(); ++i) cols.push_back("x" + std::to_string(i));
  for (int i = 0; i < p.dim(); ++i) cols.push_back("K" + std::to_string(i));
  for (int i = 0; i < p.dim_c(); ++i) cols.push_back("R" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  for (const auto& x : pts) {
    Eigen::VectorXd K = eval_K(p, res.triple, x), R = eval_R(p, res.triple, x);
    std::vector<double> r(x.data(), x.data() + x.size());
    r.insert(r.end(), K.data(), K.data() + K.size());
    r.insert(r.end(), R.data(), R.data() + R.size());
    rows.push_back(std::move(r));
  }
  w.columns("sample.txt", cols, rows);
  out << "wrote " << rows.size() << " samples within radius " << fixed(radius) << "\n";
  w.results()["count"] = rows.size();
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"manicore: center manifolds by the parameterization method"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "cap on parallel width (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", o.seed, "RNG seed for sampling");

  auto sub = [&](const char* name, const char* help) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("config", o.config, "problem file")->required()->check(CLI::ExistingFile);
    c->fallthrough();
    return c;
  };
  sub("ledger", "print the constants ledger with feasibility verdicts");
  CLI::App* taylor = sub("taylor", "order-by-order Taylor solve and defect table");
  taylor->add_option("--degree", o.degree, "highest order");
  CLI::App* solve = sub("solve", "fixed point of Θ on the grid");
  solve->add_option("--tol", o.tol, "stopping tolerance on the C¹ difference");
  solve->add_option("--max-iter", o.max_iter, "sweep limit");
  solve->add_option("--bootstrap", o.bootstrap, "derivative levels to solve after Θ");
  CLI::App* cert = sub("certify", "a-posteriori bound for a Taylor pair");
  cert->add_option("--order", o.order, "norm order m");
  cert->add_option("--M", o.M, "bound on the pair's C^{m+1} norm (measured if omitted)");
  cert->add_option("--pair", o.pair, "pair file (as written by taylor); computed if omitted")->check(CLI::ExistingFile);
  sub("verify", "run the verification suite");
  CLI::App* sample = sub("sample", "export (x, K(x), R(x)) samples");
  sample->add_option("--count", o.count, "number of points");
  sample->add_option("--radius", o.radius, "sampling radius (default: inner cutoff radius)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code(ErrorKind::ConfigError);
  }

  set_threads(o.threads);
  std::string command = "manicore";
  for (int i = 1; i < argc; ++i) command += std::string(" ") + argv[i];
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    Session s = open(o.config);
    io::RunWriter w(io::output_dir(), o.config, s.text, command);
    int status = 0;
    if (name == "ledger") status = cmd_ledger(s, w, out);
    else if (name == "taylor") status = cmd_taylor(s, o, w, out);
    else if (name == "solve") status = cmd_solve(s, o, w, out);
    else if (name == "certify") status = cmd_certify(s, o, w, out);
    else if (name == "verify") status = cmd_verify(s, o, w, out);
    else if (name == "sample") status = cmd_sample(s, o, w, out);
    w.results()["exit_status"] = status;
    w.manifest(name);
    return status;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace manicore::cli
