#include "rg/flow_table.hpp"

#include <sstream>

#include "rg/errors.hpp"

namespace rg::sym {

namespace {

Expr one_expr(const Poly& c) {
  Expr e;
  e.add(TermKey{}, c);
  return e;
}

FieldAtom mk(Species sp, char pos, Deco d = Deco::none, int dvar = -1,
             int dsign = 0) {
  FieldAtom a;
  a.sp = sp;
  a.pos = pos;
  a.deco = d;
  a.dvar = dvar;
  a.dsign = dsign;
  return a;
}

TermKey key_of(std::vector<FieldAtom> atoms) {
  TermKey k;
  k.atoms = std::move(atoms);
  return k;
}

}  // namespace

LocalProjection project_local(const Expr& e, char anchor) {
  const char t = anchor;
  LocalProjection p;
  p.c_tau2 = e.coefficient(key_of({mk(Species::phi, t), mk(Species::phi, t),
                                   mk(Species::phibar, t),
                                   mk(Species::phibar, t)}));
  p.c_tau = e.coefficient(key_of({mk(Species::phi, t), mk(Species::phibar, t)}));
  p.c_nn = e.coefficient(key_of({mk(Species::phi, t, Deco::grad, 0, 1),
                                 mk(Species::phibar, t, Deco::grad, 0, 1)}));
  p.c_lap =
      e.coefficient(key_of({mk(Species::phi, t, Deco::lap),
                            mk(Species::phibar, t)})) *
      Rational(2);
  p.c_one = e.coefficient(TermKey{});
  p.c_obs_a =
      e.coefficient(key_of({mk(Species::sigma, 'a'), mk(Species::phibar, 'a')}));
  p.c_obs_b = e.coefficient(
      key_of({mk(Species::sigmabar, 'b'), mk(Species::phi, 'b')}));
  p.c_ss = e.coefficient(
      key_of({mk(Species::sigma, 'a'), mk(Species::sigmabar, 'b')}));

  Expr rebuilt = tau2(t) * p.c_tau2 + tau(t) * p.c_tau + tau_nn(t) * p.c_nn +
                 tau_lap(t) * p.c_lap + one_expr(p.c_one) +
                 obs_sigma_phibar('a') * p.c_obs_a +
                 obs_sigmabar_phi('b') * p.c_obs_b +
                 obs_sigma_sigmabar() * p.c_ss;
  Expr residual = e - rebuilt;
  if (!residual.is_zero())
    throw verification_error("local projection residual:\n" + residual.str());
  return p;
}

PerturbativeParts perturbative_map(Phase phase, char anchor) {
  Expr v_t = interaction(anchor, anchor == 'a' || anchor == 'b');
  Expr partner = interaction('y', false);
  if (anchor == 'a') partner += pi_obs(interaction('b', true));
  if (anchor == 'b') partner += pi_obs(interaction('a', true));

  Expr f_w = truncated_pair(v_t, partner, 'w', true);
  Expr e_t = wick_exp(v_t, 'C', +1);
  Expr e_partner = wick_exp(partner, 'C', +1);
  Expr f_wp = truncated_pair(e_t, e_partner, 'p', true);

  PerturbativeParts parts;
  parts.w_part = loc_reduce(f_w, phase, anchor) * Rational(1, 2);
  Expr wp_part = loc_reduce(f_wp, phase, anchor) * Rational(1, 2);
  parts.P = wp_part - wick_exp(parts.w_part, 'C', +1);
  parts.v_pt = e_t - parts.P;
  return parts;
}

namespace {

Poly sym(const char* n) { return Poly::symbol(n); }

void subst_next_scale_pair(Poly& p) {
  p = p.substituted("wp_ab", sym("w_ab") + sym("Cab"));
}

}  // namespace

FlowTable derive_flow_table(Phase phase) {
  PerturbativeParts px = perturbative_map(phase, 'x');
  LocalProjection vx = project_local(px.v_pt, 'x');
  LocalProjection pxp = project_local(px.P, 'x');
  if (!pxp.c_one.is_zero())
    throw verification_error("correction polynomial has a constant part: " +
                             pxp.c_one.str());

  PerturbativeParts pa = perturbative_map(phase, 'a');
  PerturbativeParts pb = perturbative_map(phase, 'b');
  LocalProjection va = project_local(pa.v_pt, 'a');
  LocalProjection vb = project_local(pb.v_pt, 'b');

  // The bulk rows must not depend on the anchor.
  if (va.c_tau2 != vx.c_tau2 || va.c_tau != vx.c_tau || va.c_nn != vx.c_nn ||
      va.c_lap != vx.c_lap || vb.c_tau2 != vx.c_tau2 || vb.c_tau != vx.c_tau ||
      vb.c_nn != vx.c_nn || vb.c_lap != vx.c_lap)
    throw verification_error("anchor-dependent bulk rows");

  FlowTable t;
  t.rows["g"] = vx.c_tau2;
  t.rows["nu"] = vx.c_tau;
  t.rows["y"] = vx.c_nn;
  t.rows["z"] = vx.c_lap;
  t.rows["lam_a"] = -va.c_obs_a;
  t.rows["lam_b"] = -vb.c_obs_b;
  t.rows["q_a"] = sym("q_a") - va.c_ss * Rational(2);
  t.rows["q_b"] = sym("q_b") - vb.c_ss * Rational(2);
  for (auto& [name, row] : t.rows) subst_next_scale_pair(row);
  return t;
}

FlowTable hardcoded_flow_table(Phase phase) {
  Poly g = sym("g"), nu = sym("nu"), y = sym("y"), z = sym("z");
  Poly nu_plus = nu + sym("C00") * g * Rational(2);

  Poly d_nu_w1 = nu_plus * sym("w1p") - nu * sym("w1");
  Poly d_nu2_w1 = nu_plus * nu_plus * sym("w1p") - nu * nu * sym("w1");
  Poly d_nu2_wss = nu_plus * nu_plus * sym("wssp") - nu * nu * sym("wss");
  Poly d_nu_w2ss = nu_plus * sym("w2ssp") - nu * sym("w2ss");

  Poly beta = (sym("w2p") - sym("w2")) * Rational(8);
  Poly theta = (sym("w3ssp") - sym("w3ss")) * Rational(2);
  Poly etap = sym("C00") * Rational(2);
  Poly xip = (sym("w3p") - sym("w3") - sym("w2") * sym("C00") * Rational(3)) *
                 Rational(4) +
             beta * etap * Rational(1, 4);
  Poly pip = (sym("wdw1p") - sym("wdw1")) * Rational(2);
  Poly sigma = sym("wdwssp") - sym("wdwss");
  Poly zeta = sym("gwssp") - sym("gwss");

  FlowTable t;
  t.rows["g"] = g - beta * g * g - g * d_nu_w1 * Rational(4);
  t.rows["nu"] = nu + etap * (g + g * nu * sym("w1") * Rational(4)) -
                 xip * g * g - beta * g * nu * Rational(1, 4) -
                 pip * g * (z + y) - d_nu2_w1;
  Poly y_row = y + sigma * g * z - zeta * g * y - g * d_nu_w2ss;
  t.rows["y"] = y_row;
  t.rows["z"] = z - theta * g * g - d_nu2_wss * Rational(1, 2) -
                z * d_nu_w1 * Rational(2) - (y_row - y);
  Poly lam_factor = (phase == Phase::below_jab)
                        ? Poly::constant(1) - d_nu_w1
                        : Poly::constant(1);
  t.rows["lam_a"] = lam_factor * sym("lam_a");
  t.rows["lam_b"] = lam_factor * sym("lam_b");
  t.rows["q_a"] = sym("q_a") + sym("lam_a") * sym("lam_b") * sym("Cab");
  t.rows["q_b"] = sym("q_b") + sym("lam_a") * sym("lam_b") * sym("Cab");
  return t;
}

std::string compare_tables(const FlowTable& got, const FlowTable& expected) {
  std::ostringstream os;
  for (const char* name : kFlowRowOrder) {
    auto ig = got.rows.find(name);
    auto ie = expected.rows.find(name);
    if (ig == got.rows.end() || ie == expected.rows.end()) {
      os << "row " << name << ": missing\n";
      continue;
    }
    Poly diff = ig->second - ie->second;
    if (!diff.is_zero())
      os << "row " << name << ": derived - reference = " << diff.str() << "\n";
  }
  return os.str();
}

}  // namespace rg::sym
