#pragma once
// Derivation of the one-step flow table from the contraction calculus, and
// the reference table it is checked against.
#include <array>
#include <map>
#include <string>

#include "rg/symbolic.hpp"

namespace rg::sym {

// Pieces of the one-step perturbative map at a given anchor tag:
// w_part   (1/2) Loc of the current-scale truncated pair,
// P        the second-order correction polynomial,
// v_pt     the evolved local interaction e^L V - P.
struct PerturbativeParts {
  Expr w_part;
  Expr P;
  Expr v_pt;
};

// anchor: 'x' for the bulk rows, 'a' / 'b' for the observable rows.
PerturbativeParts perturbative_map(Phase phase, char anchor);

// Coefficients of a local polynomial on the interaction basis at `anchor`.
// Throws verification_error when the expression has a residual outside the
// basis (this also enforces the boson/fermion coefficient ties).
struct LocalProjection {
  Poly c_tau2, c_tau, c_nn, c_lap, c_one;
  Poly c_obs_a, c_obs_b, c_ss;
};
LocalProjection project_local(const Expr& e, char anchor);

// coupling name -> next-scale value as a polynomial in the couplings and the
// kernel moment symbols (w1, w2, ..., w1p, ..., C00, Cab).
struct FlowTable {
  std::map<std::string, Poly> rows;
};

inline constexpr std::array<const char*, 8> kFlowRowOrder = {
    "g", "nu", "y", "z", "lam_a", "lam_b", "q_a", "q_b"};

// Runs the contraction calculus end to end and extracts every row.
FlowTable derive_flow_table(Phase phase);

// The same table transcribed directly from the closed-form step
// (identical to the numeric phi_pt), with nu_plus expanded.
FlowTable hardcoded_flow_table(Phase phase);

// Structured row-by-row difference; empty string when the tables agree.
std::string compare_tables(const FlowTable& got, const FlowTable& expected);

}  // namespace rg::sym
