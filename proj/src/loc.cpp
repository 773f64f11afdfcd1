// Localisation: reduce kernel-weighted sums over the bulk tag to local
// monomials at the anchor, via moment symbols and a second-order difference
// expansion of the moved field factors.
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rg/symbolic.hpp"

namespace rg::sym {

namespace {

[[noreturn]] void no_rule(const std::string& what, const TermKey& k) {
  TermKey copy = k;
  Expr e;
  e.add(copy, Poly::constant(1));
  throw std::logic_error("no Loc rule (" + what + ") for term: " + e.str());
}

struct KernelPattern {
  int n = 0;           // number of kernel factors
  int nplain = 0;      // factors without decorations
  int nlap = 0;        // total lap decorations
  int ngrad = 0;       // total grad decorations
  bool single_factor_derived = false;  // one factor carrying every decoration
  bool grad_pair = false;  // two factors with one grad each, same variable,
                           // same orientation, variable not used elsewhere
  bool double_lap_single = false;  // one factor with exactly two laps
  char base = 'w';
};

KernelPattern classify(const TermKey& k) {
  KernelPattern p;
  p.n = static_cast<int>(k.kernels.size());
  p.base = k.kernels.front().base;
  std::vector<int> grad_vars;
  int decorated_factors = 0;
  for (const auto& kf : k.kernels) {
    if (kf.base != p.base) no_rule("mixed kernel bases", k);
    if (kf.decos.empty()) {
      ++p.nplain;
      continue;
    }
    ++decorated_factors;
    for (const auto& d : kf.decos) {
      if (d.kind == Deco::lap) ++p.nlap;
      if (d.kind == Deco::grad) {
        ++p.ngrad;
        grad_vars.push_back(d.dvar);
      }
    }
  }
  int ndecos = p.nlap + p.ngrad;
  p.single_factor_derived = (p.n == 1 && ndecos >= 1);
  p.double_lap_single =
      (p.n == 1 && decorated_factors == 1 && p.nlap == 2 && p.ngrad == 0);
  if (p.ngrad == 2 && p.nlap == 0 && p.n == 2 && decorated_factors == 2 &&
      grad_vars[0] == grad_vars[1]) {
    // Orientations were normalised term-wide; a shared variable must also not
    // appear on any remaining atom for the directional sum to factor out.
    bool on_atom = false;
    for (const auto& a : k.atoms)
      if (a.dvar == grad_vars[0]) on_atom = true;
    int sign_product = 1;
    for (const auto& kf : k.kernels)
      for (const auto& d : kf.decos)
        if (d.kind == Deco::grad) sign_product *= d.dsign;
    if (!on_atom && sign_product > 0) p.grad_pair = true;
  }
  return p;
}

std::string suffixed(const char* stem, char base) {
  return base == 'p' ? std::string(stem) + "p" : std::string(stem);
}

// Zeroth moment of the kernel product (sum over the bulk tag).
Poly moment0(const KernelPattern& p, const TermKey& k) {
  if (p.n == 0) return Poly::constant(1);
  if (p.nlap + p.ngrad == 0) {
    switch (p.n) {
      case 1: return Poly::symbol(suffixed("w1", p.base));
      case 2: return Poly::symbol(suffixed("w2", p.base));
      case 3: return Poly::symbol(suffixed("w3", p.base));
      default: no_rule("plain kernel power", k);
    }
  }
  // Any full lattice difference sums to zero over the torus.
  if (p.single_factor_derived) return Poly{};
  if (p.n == 2 && p.nlap == 1 && p.ngrad == 0)
    return Poly::symbol(suffixed("wdw1", p.base));
  // Summation by parts: (1/2) sum_e sum (grad_e w)^2 = sum w (D w).
  if (p.grad_pair) return Poly::symbol(suffixed("wdw1", p.base));
  no_rule("zeroth kernel moment", k);
}

// Second moment (axis-squared weight) of the kernel product.
Poly moment_second(const KernelPattern& p, const TermKey& k) {
  if (p.nlap + p.ngrad == 0) {
    switch (p.n) {
      case 1: return Poly::symbol(suffixed("wss", p.base));
      case 2: return Poly::symbol(suffixed("w2ss", p.base));
      case 3: return Poly::symbol(suffixed("w3ss", p.base));
      default: no_rule("plain second moment", k);
    }
  }
  if (p.double_lap_single) return Poly{};  // sum u1^2 (DDw) = -2 sum Dw = 0
  if (p.n == 2 && p.nlap == 1 && p.ngrad == 0) {
    // The second moment of the w(Dw) product enters the reduction with a
    // reversed orientation relative to the plain-kernel rule; this is what
    // the closed-form step uses (cf. the sign of the gz term in the y row).
    return Poly::symbol(suffixed("wdwss", p.base)) * Rational(-1);
  }
  if (p.grad_pair) return Poly::symbol(suffixed("gwss", p.base));
  no_rule("second kernel moment", k);
}

bool is_observable(const FieldAtom& a) {
  return a.sp == Species::sigma || a.sp == Species::sigmabar;
}

int fresh_dvar(const TermKey& k) {
  int m = -1;
  for (const auto& kf : k.kernels)
    for (const auto& d : kf.decos) m = std::max(m, d.dvar);
  for (const auto& a : k.atoms) m = std::max(m, a.dvar);
  return m + 1;
}

}  // namespace

Expr loc_reduce(const Expr& summed, Phase phase, char anchor) {
  Expr out;
  for (const auto& [k, c] : summed.terms()) {
    bool has_sigma = false, has_sigmabar = false;
    int dim = 0, n_bulk_tag = 0;
    for (const auto& a : k.atoms) {
      if (a.sp == Species::sigma) has_sigma = true;
      if (a.sp == Species::sigmabar) has_sigmabar = true;
      if (is_observable(a)) continue;
      dim += a.dimension();
      if (a.pos == 'y') {
        ++n_bulk_tag;
      } else if (a.pos != anchor) {
        no_rule("stray site tag", k);
      }
    }

    if (k.kernels.empty()) {
      if (n_bulk_tag > 0) no_rule("kernel-free bulk sum", k);
      out.add(k, c);  // already local
      continue;
    }
    for (const auto& kf : k.kernels) {
      char lo = std::min(anchor, 'y'), hi = std::max(anchor, 'y');
      if (kf.p1 != lo || kf.p2 != hi) no_rule("kernel off the anchor pair", k);
    }

    TermKey term = k;
    // A lone kernel factor carrying a single Laplacian is summed by parts
    // before any moment is read off: the difference operator moves from the
    // kernel onto the one plain field factor left at the bulk tag. With no
    // receiving factor the full-lattice sum vanishes; any other arrangement
    // lands beyond the degree cap after the transfer.
    if (term.kernels.size() == 1 && term.kernels[0].decos.size() == 1 &&
        term.kernels[0].decos[0].kind == Deco::lap) {
      int plain_y = -1, y_count = 0;
      for (int i = 0; i < static_cast<int>(term.atoms.size()); ++i) {
        const FieldAtom& a = term.atoms[i];
        if (is_observable(a) || a.pos != 'y') continue;
        ++y_count;
        if (a.deco == Deco::none) plain_y = i;
      }
      if (y_count == 1 && plain_y >= 0) {
        term.kernels[0].decos.clear();
        term.atoms[plain_y].deco = Deco::lap;
        dim += 2;
      } else if (y_count == 0) {
        continue;  // full difference summed over the torus
      } else if (dim + 2 > 4) {
        continue;
      } else {
        no_rule("Laplacian kernel transfer", term);
      }
    }

    KernelPattern pat = classify(term);

    auto moved_atoms = [&]() {
      std::vector<FieldAtom> atoms = term.atoms;
      for (auto& a : atoms)
        if (!is_observable(a)) a.pos = anchor;
      return atoms;
    };

    if (has_sigma || has_sigmabar) {
      int cap = (has_sigma && has_sigmabar)
                    ? 0
                    : (phase == Phase::below_jab ? 1 : 0);
      if (dim > cap) continue;
      Poly m0 = moment0(pat, term);
      if (m0.is_zero()) continue;
      TermKey key;
      key.atoms = moved_atoms();
      out.add(std::move(key), c * m0);
      continue;
    }

    if (dim > 4) continue;

    Poly m0 = moment0(pat, term);
    if (!m0.is_zero()) {
      TermKey key;
      key.atoms = moved_atoms();
      out.add(std::move(key), c * m0);
    }

    // Second-order difference correction, only for a remainder of two plain
    // factors (dimension two); higher corrections are beyond the cap.
    if (dim != 2 || term.atoms.size() != 2) continue;
    if (term.atoms[0].deco != Deco::none || term.atoms[1].deco != Deco::none)
      continue;
    if (n_bulk_tag == 0) continue;  // fully anchored: the moment was exact

    Poly mss = moment_second(pat, term);
    if (mss.is_zero()) continue;

    if (n_bulk_tag == 2) {
      FieldAtom u = term.atoms[0], v = term.atoms[1];
      u.pos = v.pos = anchor;
      int d = fresh_dvar(term);
      // gradient-pair term
      {
        TermKey key;
        FieldAtom gu = u, gv = v;
        gu.deco = gv.deco = Deco::grad;
        gu.dvar = gv.dvar = d;
        gu.dsign = gv.dsign = 1;
        key.atoms = {gu, gv};
        out.add(std::move(key), c * mss);
      }
      // minus half of each one-sided Laplacian pairing
      for (int which = 0; which < 2; ++which) {
        TermKey key;
        FieldAtom lu = u, lv = v;
        (which == 0 ? lu : lv).deco = Deco::lap;
        key.atoms = {lu, lv};
        out.add(std::move(key), c * mss * Rational(-1, 2));
      }
    } else if (n_bulk_tag == 1) {
      FieldAtom u = (term.atoms[0].pos == 'y') ? term.atoms[1] : term.atoms[0];
      FieldAtom v = (term.atoms[0].pos == 'y') ? term.atoms[0] : term.atoms[1];
      v.pos = anchor;
      v.deco = Deco::lap;
      TermKey key;
      key.atoms = {u, v};
      out.add(std::move(key), c * mss * Rational(1, 2));
    }
  }
  return out;
}

}  // namespace rg::sym
