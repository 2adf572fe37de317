#pragma once

#include <Eigen/Dense>
#include <string>

#include "manicore/constants/ledger.hpp"
#include "manicore/funcspace/smooth_map.hpp"
#include "manicore/linmodel/problem.hpp"

namespace manicore {

// Λ = (r, k_u, k_s) on the center grid, with t the offset of (A_c + r)⁻¹ = A_c⁻¹ + t.
struct ConjugacyTriple {
  SmoothMapRep r, k_u, k_s, t;
};

inline SmoothMapRep zero_field(const GridSpec& spec, int codim, int cap, int stencil_order) {
  return SmoothMapRep::sampled(TaylorRep(spec.dim, codim, cap), GridRep(spec, codim, stencil_order));
}

inline ConjugacyTriple zero_triple(const ProblemInstance& p) {
  const GridSpec spec = p.center_grid();
  const int cap = p.settings.degree_cap, so = p.settings.stencil_order;
  return {zero_field(spec, p.dim_c(), cap, so), zero_field(spec, p.dim_u(), cap, so),
          zero_field(spec, p.dim_s(), cap, so), zero_field(spec, p.dim_c(), cap, so)};
}

// K(y) = ι y + (k_c, k_u, k_s)(y) in block coordinates
inline Eigen::VectorXd eval_K(const ProblemInstance& p, const ConjugacyTriple& L, const Eigen::VectorXd& y) {
  Eigen::VectorXd z(p.dim());
  z << y + p.k_c.eval(y), L.k_u.eval(y), L.k_s.eval(y);
  return z;
}

inline Eigen::VectorXd eval_R(const ProblemInstance& p, const ConjugacyTriple& L, const Eigen::VectorXd& y) {
  return p.linear.A_c * y + L.r.eval(y);
}

inline Eigen::VectorXd eval_T(const ProblemInstance& p, const ConjugacyTriple& L, const Eigen::VectorXd& y) {
  return p.linear.A_c_inv() * y + L.t.eval(y);
}

inline TaylorRep K_taylor(const ProblemInstance& p, const ConjugacyTriple& L) {
  const int cap = p.settings.degree_cap;
  TaylorRep c = TaylorRep::identity(p.dim_c(), cap) + p.kc_raw.with_cap(cap);
  return TaylorRep::stack({c, L.k_u.taylor().with_cap(cap), L.k_s.taylor().with_cap(cap)});
}

inline TaylorRep R_taylor(const ProblemInstance& p, const ConjugacyTriple& L) {
  return TaylorRep::linear(p.linear.A_c, p.settings.degree_cap) + L.r.taylor().with_cap(p.settings.degree_cap);
}

// Λ of the problem scaled by s → Λ of the original problem
inline ConjugacyTriple unscale(const ConjugacyTriple& L, double s) {
  if (s == 1.0) return L;
  return {L.r.scaled(1.0 / s), L.k_u.scaled(1.0 / s), L.k_s.scaled(1.0 / s), L.t.scaled(1.0 / s)};
}

// sup over grid nodes of ‖D^k‖ for each component, max over components
inline double triple_derivative_sup(const ProblemInstance& p, const ConjugacyTriple& L, int k) {
  const double a = p.center_grid().half_width;
  const Blocks in = p.center_blocks();
  return std::max({derivative_sup(L.r, k, a, in, in).value, derivative_sup(L.k_u, k, a, {p.dim_u()}, in).value,
                   derivative_sup(L.k_s, k, a, {p.dim_s()}, in).value});
}

struct MembershipReport {
  bool member = true;
  std::string violation;
};

// Γ₀: Λ(0) = 0, DΛ(0) = 0 in the table; ‖Dr‖₀ ≤ L_r, ‖Dk_u‖₀ ≤ L_u, ‖Dk_s‖₀ ≤ L_s.
// Γ₁(δ) adds ‖D²r‖₀, ‖D²k_u‖₀, ‖D²k_s‖₀ ≤ δ.
inline MembershipReport membership(const ProblemInstance& p, const ConjugacyTriple& L, const ConstantsLedger& l,
                                   bool gamma1 = false, double delta = -1.0) {
  const double margin = 1.0 + 1e-9;
  const double a = p.center_grid().half_width;
  const Blocks in = p.center_blocks();
  struct Item {
    const SmoothMapRep* f;
    Blocks out;
    double L;
    const char* name;
  } items[] = {{&L.r, in, l.L_r, "r"}, {&L.k_u, {p.dim_u()}, l.L_u, "k_u"}, {&L.k_s, {p.dim_s()}, l.L_s, "k_s"}};
  for (const auto& it : items) {
    const TaylorRep& T = it.f->taylor();
    for (int i = 0; i < T.basis().degree_end(std::min(1, T.degree_cap())); ++i)
      if (T.codomain_dim() && T.coeffs().col(i).cwiseAbs().maxCoeff() != 0.0)
        return {false, std::string("Λ(0) = 0, DΛ(0) = 0 (") + it.name + ")"};
  }
  for (const auto& it : items) {
    double d1 = derivative_sup(*it.f, 1, a, it.out, in).value;
    if (d1 > it.L * margin)
      return {false, std::string("‖D") + it.name + "‖₀ ≤ L_" + (it.name[0] == 'r' ? "r" : it.name + 2) + " (" +
                         std::to_string(d1) + " > " + std::to_string(it.L) + ")"};
  }
  if (gamma1) {
    if (delta < 0.0) delta = l.delta;
    for (const auto& it : items) {
      double d2 = derivative_sup(*it.f, 2, a, it.out, in).value;
      if (d2 > delta * margin)
        return {false, std::string("‖D²") + it.name + "‖₀ ≤ δ(ε) (" + std::to_string(d2) + " > " +
                           std::to_string(delta) + ")"};
    }
  }
  return {};
}

}  // namespace manicore
