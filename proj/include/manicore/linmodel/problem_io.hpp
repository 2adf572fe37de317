#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "manicore/errors.hpp"
#include "manicore/linmodel/problem.hpp"

namespace manicore {

// Problem file (JSON, comments allowed):
//   "matrix_A":     rows of A
//   "g_coeffs":     {"i,j,...": [ambient vector]}  coefficient of x^α in ambient coordinates
//   "kc_coeffs":    {"i,...":   [center vector]}   coefficient of x^α in center block coordinates
//   "cutoff_inner", "cutoff_outer", "order_n"
// optional: "tolerances": {"unit_circle", "solver", "max_iter"}, "grid_points",
//   "degree_cap", "cutoff_smoothness", "stencil_order", "auto_rescale", "name", "description"
struct ProblemSpec {
  Eigen::MatrixXd A;
  std::map<MultiIndex, Eigen::VectorXd> g, kc;
  double inner = 0, outer = 0;
  int n = 2;
  Settings settings;
  std::string name;
};

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t off) {
  int line = 1;
  for (std::size_t i = 0; i < std::min(off, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline int line_of_key(const std::string& text, const std::string& key) {
  auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

[[noreturn]] inline void schema_error(const std::string& text, const std::string& key, const std::string& what) {
  int line = line_of_key(text, key);
  fail(ErrorKind::ConfigError, (line ? "line " + std::to_string(line) + ": " : std::string()) + what);
}

inline MultiIndex parse_multi_index(const std::string& s) {
  MultiIndex a;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (v < 0) throw std::invalid_argument("negative exponent");
    a.push_back(v);
  }
  if (a.empty()) throw std::invalid_argument("empty multi-index");
  return a;
}

inline std::string format_multi_index(const MultiIndex& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

}  // namespace detail

inline std::map<MultiIndex, Eigen::VectorXd> parse_coeff_table(const nlohmann::json& j, const std::string& text,
                                                               const std::string& key, int nvars, int codim) {
  std::map<MultiIndex, Eigen::VectorXd> out;
  if (!j.is_object()) detail::schema_error(text, key, "\"" + key + "\" must be an object of multi-index keys");
  for (auto it = j.begin(); it != j.end(); ++it) {
    MultiIndex a;
    try {
      a = detail::parse_multi_index(it.key());
    } catch (const std::exception&) {
      detail::schema_error(text, it.key(), "bad multi-index \"" + it.key() + "\" in \"" + key + "\"");
    }
    if (static_cast<int>(a.size()) != nvars)
      detail::schema_error(text, it.key(),
                           "multi-index \"" + it.key() + "\" needs " + std::to_string(nvars) + " entries");
    const auto& v = it.value();
    if (!v.is_array() || static_cast<int>(v.size()) != codim)
      detail::schema_error(text, it.key(),
                           "coefficient of \"" + it.key() + "\" must be a vector of length " + std::to_string(codim));
    Eigen::VectorXd c(codim);
    for (int i = 0; i < codim; ++i) {
      if (!v[i].is_number()) detail::schema_error(text, it.key(), "non-numeric coefficient in \"" + it.key() + "\"");
      c(i) = v[i].get<double>();
    }
    if (out.count(a)) out[a] += c;
    else out[a] = c;
  }
  return out;
}

inline TaylorRep table_to_taylor(const std::map<MultiIndex, Eigen::VectorXd>& t, int nvars, int codim, int min_cap = 2) {
  int cap = min_cap;
  for (const auto& [a, c] : t) cap = std::max(cap, total_degree(a));
  TaylorRep f(nvars, codim, cap);
  for (const auto& [a, c] : t)
    for (int i = 0; i < codim; ++i) f.set_coeff(i, a, c(i));
  return f;
}

inline nlohmann::json taylor_to_json(const TaylorRep& f, double drop_below = 0.0) {
  nlohmann::json j = nlohmann::json::object();
  const MonomialBasis& B = f.basis();
  for (int i = 0; i < B.size(); ++i) {
    Eigen::VectorXd c = f.coeffs().col(i);
    if (c.size() == 0 || c.cwiseAbs().maxCoeff() <= drop_below) continue;
    j[detail::format_multi_index(B[i])] = std::vector<double>(c.data(), c.data() + c.size());
  }
  return j;
}

inline ProblemSpec parse_problem(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::ConfigError,
         "line " + std::to_string(detail::line_of_offset(text, e.byte ? e.byte - 1 : 0)) + ": malformed JSON");
  }
  if (!j.is_object()) fail(ErrorKind::ConfigError, "line 1: problem file must be a JSON object");
  static const std::set<std::string> known{"matrix_A", "g_coeffs", "kc_coeffs", "cutoff_inner", "cutoff_outer",
                                           "order_n", "tolerances", "grid_points", "degree_cap",
                                           "cutoff_smoothness", "stencil_order", "auto_rescale", "name",
                                           "description"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) detail::schema_error(text, it.key(), "unknown key \"" + it.key() + "\"");
  for (const char* k : {"matrix_A", "g_coeffs", "kc_coeffs", "cutoff_inner", "cutoff_outer", "order_n"})
    if (!j.contains(k)) fail(ErrorKind::ConfigError, std::string("missing required key \"") + k + "\"");

  ProblemSpec s;
  const auto& jA = j["matrix_A"];
  if (!jA.is_array() || jA.empty()) detail::schema_error(text, "matrix_A", "\"matrix_A\" must be a list of rows");
  const int d = static_cast<int>(jA.size());
  s.A.resize(d, d);
  for (int r = 0; r < d; ++r) {
    if (!jA[r].is_array() || static_cast<int>(jA[r].size()) != d)
      detail::schema_error(text, "matrix_A", "\"matrix_A\" must be square");
    for (int c = 0; c < d; ++c) {
      if (!jA[r][c].is_number()) detail::schema_error(text, "matrix_A", "non-numeric entry in \"matrix_A\"");
      s.A(r, c) = jA[r][c].get<double>();
    }
  }
  auto number = [&](const char* key) {
    if (!j[key].is_number()) detail::schema_error(text, key, std::string("\"") + key + "\" must be a number");
    return j[key].get<double>();
  };
  auto integer = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) detail::schema_error(text, key, "\"" + key + "\" must be an integer");
    return v.get<int>();
  };
  s.inner = number("cutoff_inner");
  s.outer = number("cutoff_outer");
  if (!(s.inner > 0.0 && s.outer > s.inner))
    detail::schema_error(text, "cutoff_outer", "cutoff radii need 0 < cutoff_inner < cutoff_outer");
  s.n = integer(j["order_n"], "order_n");
  if (s.n < 2) detail::schema_error(text, "order_n", "\"order_n\" must be at least 2");

  s.g = parse_coeff_table(j["g_coeffs"], text, "g_coeffs", d, d);

  // center dimension from the kc keys when present, otherwise from the spectrum
  int dc = -1;
  if (!j["kc_coeffs"].is_object()) detail::schema_error(text, "kc_coeffs", "\"kc_coeffs\" must be an object");
  if (!j["kc_coeffs"].empty()) {
    try {
      dc = static_cast<int>(detail::parse_multi_index(j["kc_coeffs"].begin().key()).size());
    } catch (const std::exception&) {
      detail::schema_error(text, "kc_coeffs", "bad multi-index in \"kc_coeffs\"");
    }
    s.kc = parse_coeff_table(j["kc_coeffs"], text, "kc_coeffs", dc, dc);
  }

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (!t.is_object()) detail::schema_error(text, "tolerances", "\"tolerances\" must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (it.key() == "unit_circle" && it->is_number()) s.settings.unit_circle_tol = it->get<double>();
      else if (it.key() == "solver" && it->is_number()) s.settings.tol = it->get<double>();
      else if (it.key() == "max_iter") s.settings.max_iter = integer(*it, "max_iter");
      else detail::schema_error(text, it.key(), "bad tolerance entry \"" + it.key() + "\"");
    }
    if (!(s.settings.unit_circle_tol > 0.0) || !(s.settings.tol > 0.0) || s.settings.max_iter < 1)
      detail::schema_error(text, "tolerances", "tolerances must be positive");
  }
  if (j.contains("grid_points")) s.settings.grid_points = integer(j["grid_points"], "grid_points");
  if (j.contains("degree_cap")) s.settings.degree_cap = integer(j["degree_cap"], "degree_cap");
  if (j.contains("cutoff_smoothness")) s.settings.cutoff_smoothness = integer(j["cutoff_smoothness"], "cutoff_smoothness");
  if (j.contains("stencil_order")) {
    s.settings.stencil_order = integer(j["stencil_order"], "stencil_order");
    if (s.settings.stencil_order != 2 && s.settings.stencil_order != 4)
      detail::schema_error(text, "stencil_order", "\"stencil_order\" must be 2 or 4");
  }
  if (j.contains("auto_rescale")) {
    if (!j["auto_rescale"].is_boolean()) detail::schema_error(text, "auto_rescale", "\"auto_rescale\" must be true or false");
    s.settings.auto_rescale = j["auto_rescale"].get<bool>();
  }
  if (s.settings.degree_cap < s.n + 1) detail::schema_error(text, "degree_cap", "\"degree_cap\" must be at least order_n + 1");
  if (j.contains("name") && j["name"].is_string()) s.name = j["name"].get<std::string>();
  return s;
}

inline ProblemInstance build_problem(const ProblemSpec& s) {
  const int d = static_cast<int>(s.A.rows());
  TaylorRep g = table_to_taylor(s.g, d, d);
  // center dimension is fixed by the spectrum; an empty kc table becomes the zero map
  LinearModel lm = build_splitting(s.A, s.settings.unit_circle_tol);
  const int dc = lm.splitting.dim_c;
  if (!s.kc.empty() && static_cast<int>(s.kc.begin()->first.size()) != dc)
    fail(ErrorKind::ConfigError, "kc_coeffs use " + std::to_string(s.kc.begin()->first.size()) +
                                     " variables but the center dimension is " + std::to_string(dc));
  TaylorRep kc = table_to_taylor(s.kc, dc, dc);
  return make_problem(s.A, g, kc, s.inner, s.outer, s.n, s.settings);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ProblemInstance load_problem(const std::string& path) { return build_problem(parse_problem(read_text_file(path))); }

}  // namespace manicore
