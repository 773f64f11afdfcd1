// Graded monomial algebra and Gaussian contraction operators.
#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rg/symbolic.hpp"

namespace rg::sym {

// ---------------------------------------------------------------------------
// Poly
// ---------------------------------------------------------------------------

void Poly::add_term(const Term& t, const Rational& c) {
  if (c == 0) return;
  auto it = terms_.find(t);
  if (it == terms_.end()) {
    terms_.emplace(t, c);
  } else {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly Poly::constant(const Rational& c) {
  Poly p;
  p.add_term(Term{}, c);
  return p;
}

Poly Poly::symbol(const std::string& name, int power) {
  Poly p;
  if (power == 0) return constant(1);
  Term t;
  t[name] = power;
  p.add_term(t, 1);
  return p;
}

Poly& Poly::operator+=(const Poly& o) {
  for (const auto& [t, c] : o.terms_) add_term(t, c);
  return *this;
}

Poly& Poly::operator-=(const Poly& o) {
  for (const auto& [t, c] : o.terms_) add_term(t, -c);
  return *this;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r += o;
  return r;
}

Poly Poly::operator-(const Poly& o) const {
  Poly r = *this;
  r -= o;
  return r;
}

Poly Poly::operator-() const {
  Poly r;
  for (const auto& [t, c] : terms_) r.add_term(t, -c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (const auto& [ta, ca] : terms_) {
    for (const auto& [tb, cb] : o.terms_) {
      Term t = ta;
      for (const auto& [name, pow] : tb) {
        t[name] += pow;
        if (t[name] == 0) t.erase(name);
      }
      r.add_term(t, ca * cb);
    }
  }
  return r;
}

Poly Poly::operator*(const Rational& c) const {
  Poly r;
  for (const auto& [t, cc] : terms_) r.add_term(t, cc * c);
  return r;
}

Rational Poly::constant_part() const {
  auto it = terms_.find(Term{});
  return it == terms_.end() ? Rational(0) : it->second;
}

Poly Poly::substituted(const std::string& name, const Poly& replacement) const {
  Poly r;
  for (const auto& [t, c] : terms_) {
    auto it = t.find(name);
    if (it == t.end()) {
      r.add_term(t, c);
      continue;
    }
    int pow = it->second;
    Term rest = t;
    rest.erase(name);
    Poly piece = Poly::constant(c);
    {
      Poly restp;
      restp.add_term(rest, 1);
      piece = piece * restp;
    }
    for (int k = 0; k < pow; ++k) piece = piece * replacement;
    r += piece;
  }
  return r;
}

double Poly::evaluate(const std::map<std::string, double>& binding) const {
  double total = 0.0;
  for (const auto& [t, c] : terms_) {
    double v = static_cast<double>(c);
    for (const auto& [name, pow] : t) {
      auto it = binding.find(name);
      if (it == binding.end())
        throw std::logic_error("unbound symbol in evaluation: " + name);
      for (int k = 0; k < pow; ++k) v *= it->second;
    }
    total += v;
  }
  return total;
}

std::string Poly::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [t, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c.str();
    for (const auto& [name, pow] : t) {
      os << "*" << name;
      if (pow != 1) os << "^" << pow;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

bool is_fermion(Species s) { return s == Species::psi || s == Species::psibar; }

bool is_barred(Species s) { return s == Species::phibar || s == Species::psibar; }

bool is_contractible(Species s) {
  return s == Species::phi || s == Species::phibar || s == Species::psi ||
         s == Species::psibar;
}

Species contraction_partner(Species s) {
  switch (s) {
    case Species::phi: return Species::phibar;
    case Species::phibar: return Species::phi;
    case Species::psi: return Species::psibar;
    case Species::psibar: return Species::psi;
    default: throw std::logic_error("non-contractible species");
  }
}

int FieldAtom::dimension() const {
  if (sp == Species::sigma || sp == Species::sigmabar) return 0;
  switch (deco) {
    case Deco::none: return 1;
    case Deco::grad: return 2;
    case Deco::lap: return 3;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Canonicalisation
// ---------------------------------------------------------------------------

namespace {

// Renames direction variables in order of first appearance (kernels first,
// then atoms) and flips orientations so that the first occurrence of each
// variable has positive sign.
void relabel_dvars(TermKey& key) {
  std::map<int, int> names;
  std::map<int, int> flip;
  auto visit = [&](int& dvar, int& dsign) {
    if (dvar < 0) return;
    auto it = names.find(dvar);
    if (it == names.end()) {
      int fresh = static_cast<int>(names.size());
      names.emplace(dvar, fresh);
      flip.emplace(dvar, dsign < 0 ? -1 : 1);
      dsign = dsign * flip[dvar];
      dvar = fresh;
    } else {
      dsign = dsign * flip[dvar];
      dvar = it->second;
    }
  };
  for (auto& k : key.kernels)
    for (auto& d : k.decos) visit(d.dvar, d.dsign);
  for (auto& a : key.atoms) visit(a.dvar, a.dsign);
}

int sort_atoms(std::vector<FieldAtom>& atoms) {
  // Parity of the permutation restricted to fermionic atoms.
  int inversions = 0;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (!is_fermion(atoms[i].sp)) continue;
    for (size_t j = i + 1; j < atoms.size(); ++j) {
      if (!is_fermion(atoms[j].sp)) continue;
      if (atoms[j] < atoms[i]) ++inversions;
    }
  }
  std::stable_sort(atoms.begin(), atoms.end());
  return (inversions % 2 == 0) ? 1 : -1;
}

}  // namespace

int canonicalize(TermKey& key) {
  int sign = 1;
  for (int pass = 0; pass < 3; ++pass) {
    sign *= sort_atoms(key.atoms);
    std::sort(key.kernels.begin(), key.kernels.end());
    relabel_dvars(key);
  }
  // A repeated fermionic atom squares to zero.
  for (size_t i = 0; i + 1 < key.atoms.size(); ++i) {
    if (is_fermion(key.atoms[i].sp) && key.atoms[i] == key.atoms[i + 1]) return 0;
  }
  return sign;
}

// ---------------------------------------------------------------------------
// Expr
// ---------------------------------------------------------------------------

void Expr::add(TermKey key, Poly coeff) {
  if (coeff.is_zero()) return;
  int sign = canonicalize(key);
  if (sign == 0) return;
  Poly c = (sign == 1) ? coeff : -coeff;
  auto it = terms_.find(key);
  if (it == terms_.end()) {
    terms_.emplace(std::move(key), std::move(c));
  } else {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

Expr& Expr::operator+=(const Expr& o) {
  for (const auto& [k, c] : o.terms_) {
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      terms_.emplace(k, c);
    } else {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  return *this;
}

Expr& Expr::operator-=(const Expr& o) {
  for (const auto& [k, c] : o.terms_) {
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      terms_.emplace(k, -c);
    } else {
      it->second -= c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  return *this;
}

Expr Expr::operator+(const Expr& o) const {
  Expr r = *this;
  r += o;
  return r;
}

Expr Expr::operator-(const Expr& o) const {
  Expr r = *this;
  r -= o;
  return r;
}

Expr Expr::operator*(const Poly& c) const {
  Expr r;
  if (c.is_zero()) return r;
  for (const auto& [k, cc] : terms_) {
    Poly prod = cc * c;
    if (!prod.is_zero()) r.terms_.emplace(k, prod);
  }
  return r;
}

Expr Expr::operator*(const Rational& c) const {
  Expr r;
  if (c == 0) return r;
  for (const auto& [k, cc] : terms_) r.terms_.emplace(k, cc * c);
  return r;
}

Poly Expr::coefficient(const TermKey& key) const {
  TermKey k = key;
  int sign = canonicalize(k);
  if (sign == 0) return Poly{};
  auto it = terms_.find(k);
  if (it == terms_.end()) return Poly{};
  return (sign == 1) ? it->second : -it->second;
}

namespace {

const char* species_name(Species s) {
  switch (s) {
    case Species::sigma: return "sig";
    case Species::sigmabar: return "sigb";
    case Species::phi: return "phi";
    case Species::phibar: return "phib";
    case Species::psi: return "psi";
    case Species::psibar: return "psib";
  }
  return "?";
}

std::string deco_str(Deco d, int dvar, int dsign) {
  std::ostringstream os;
  if (d == Deco::lap) os << "D.";
  if (d == Deco::grad) os << "G" << dvar << (dsign < 0 ? "-" : "+") << ".";
  return os.str();
}

}  // namespace

std::string Expr::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, c] : terms_) {
    if (!first) os << "\n";
    first = false;
    os << "(" << c.str() << ")";
    for (const auto& kf : k.kernels) {
      os << " ";
      for (const auto& d : kf.decos) os << deco_str(d.kind, d.dvar, d.dsign);
      os << kf.base << "[" << kf.p1 << kf.p2 << "]";
    }
    for (const auto& a : k.atoms) {
      os << " " << deco_str(a.deco, a.dvar, a.dsign) << species_name(a.sp) << "_"
         << a.pos;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Basis monomials
// ---------------------------------------------------------------------------

namespace {

FieldAtom atom(Species sp, char pos, Deco d = Deco::none, int dvar = -1,
               int dsign = 0) {
  FieldAtom a;
  a.sp = sp;
  a.pos = pos;
  a.deco = d;
  a.dvar = dvar;
  a.dsign = dsign;
  return a;
}

void add_monomial(Expr& e, std::vector<FieldAtom> atoms, const Rational& c) {
  TermKey k;
  k.atoms = std::move(atoms);
  e.add(std::move(k), Poly::constant(c));
}

}  // namespace

Expr tau_pair(char p, char q) {
  Expr e;
  add_monomial(e, {atom(Species::phi, p), atom(Species::phibar, q)}, 1);
  add_monomial(e, {atom(Species::psi, p), atom(Species::psibar, q)}, 1);
  return e;
}

Expr tau(char p) { return tau_pair(p, p); }

Expr tau2(char p) {
  Expr e;
  add_monomial(e,
               {atom(Species::phi, p), atom(Species::phi, p),
                atom(Species::phibar, p), atom(Species::phibar, p)},
               1);
  add_monomial(e,
               {atom(Species::phi, p), atom(Species::phibar, p),
                atom(Species::psi, p), atom(Species::psibar, p)},
               2);
  return e;
}

Expr tau_nn(char p) {
  Expr e;
  add_monomial(e,
               {atom(Species::phi, p, Deco::grad, 0, 1),
                atom(Species::phibar, p, Deco::grad, 0, 1)},
               1);
  add_monomial(e,
               {atom(Species::psi, p, Deco::grad, 0, 1),
                atom(Species::psibar, p, Deco::grad, 0, 1)},
               1);
  return e;
}

Expr tau_lap(char p) {
  Expr e;
  add_monomial(e, {atom(Species::phi, p, Deco::lap), atom(Species::phibar, p)},
               Rational(1, 2));
  add_monomial(e, {atom(Species::phi, p), atom(Species::phibar, p, Deco::lap)},
               Rational(1, 2));
  add_monomial(e, {atom(Species::psi, p, Deco::lap), atom(Species::psibar, p)},
               Rational(1, 2));
  add_monomial(e, {atom(Species::psi, p), atom(Species::psibar, p, Deco::lap)},
               Rational(1, 2));
  return e;
}

Expr obs_sigma_phibar(char p) {
  Expr e;
  add_monomial(e, {atom(Species::sigma, p), atom(Species::phibar, p)}, 1);
  return e;
}

Expr obs_sigmabar_phi(char p) {
  Expr e;
  add_monomial(e, {atom(Species::sigmabar, p), atom(Species::phi, p)}, 1);
  return e;
}

Expr obs_sigma_sigmabar() {
  Expr e;
  add_monomial(e, {atom(Species::sigma, 'a'), atom(Species::sigmabar, 'b')}, 1);
  return e;
}

Expr interaction(char p, bool with_observables) {
  Expr v = tau2(p) * Poly::symbol("g") + tau(p) * Poly::symbol("nu") +
           tau_nn(p) * Poly::symbol("y") + tau_lap(p) * Poly::symbol("z");
  if (with_observables && p == 'a') v -= obs_sigma_phibar('a') * Poly::symbol("lam_a");
  if (with_observables && p == 'b') v -= obs_sigmabar_phi('b') * Poly::symbol("lam_b");
  return v;
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

namespace {

bool has_observable(const TermKey& k) {
  for (const auto& a : k.atoms)
    if (a.sp == Species::sigma || a.sp == Species::sigmabar) return true;
  return false;
}

}  // namespace

Expr pi_bulk(const Expr& e) {
  Expr r;
  for (const auto& [k, c] : e.terms())
    if (!has_observable(k)) r.add(k, c);
  return r;
}

Expr pi_obs(const Expr& e) {
  Expr r;
  for (const auto& [k, c] : e.terms())
    if (has_observable(k)) r.add(k, c);
  return r;
}

// ---------------------------------------------------------------------------
// Contractions
// ---------------------------------------------------------------------------

namespace {

// Kernel attached to a contracted pair.  When the two site tags coincide, or
// both are observable anchors, the kernel has no pending lattice sum and is
// returned as a plain coefficient symbol instead of a kernel factor.
struct PairKernel {
  std::optional<KernelFactor> factor;
  Poly coeff = Poly::constant(1);
};

PairKernel make_pair_kernel(char base, const FieldAtom& unbarred,
                            const FieldAtom& barred) {
  PairKernel out;
  char t1 = unbarred.pos;
  char t2 = barred.pos;
  if (t1 == t2) {
    if (base != 'C')
      throw std::logic_error("same-site contraction outside the Wick operator");
    out.coeff = Poly::symbol("C00");
    return out;
  }
  bool fixed_pair = (t1 == 'a' && t2 == 'b') || (t1 == 'b' && t2 == 'a');
  if (fixed_pair) {
    out.coeff = Poly::symbol(base == 'C' ? "Cab" : (base == 'w' ? "w_ab" : "wp_ab"));
    return out;
  }
  KernelFactor kf;
  kf.base = base;
  kf.p1 = t1;
  kf.p2 = t2;
  auto push_deco = [&](const FieldAtom& a, bool second_slot) {
    if (a.deco == Deco::none) return;
    KernelDeco d;
    d.kind = a.deco;
    d.dvar = a.dvar;
    d.dsign = a.dsign;
    if (a.deco == Deco::grad && second_slot) d.dsign = -d.dsign;
    kf.decos.push_back(d);
  };
  push_deco(unbarred, false);
  push_deco(barred, true);
  if (kf.p1 > kf.p2) {
    std::swap(kf.p1, kf.p2);
    for (auto& d : kf.decos)
      if (d.kind == Deco::grad) d.dsign = -d.dsign;
  }
  std::sort(kf.decos.begin(), kf.decos.end());
  out.factor = kf;
  return out;
}

// Removes the contracted pair from `alive` with the fermionic left-derivative
// sign: the barred atom is removed first, each removal contributing the
// parity of the live fermionic atoms to its left.
int remove_pair(std::vector<std::optional<FieldAtom>>& alive, int iu, int ib) {
  int sign = 1;
  bool fermionic = is_fermion(alive[iu]->sp);
  auto parity_before = [&](int idx) {
    int n = 0;
    for (int k = 0; k < idx; ++k)
      if (alive[k] && is_fermion(alive[k]->sp)) ++n;
    return (n % 2 == 0) ? 1 : -1;
  };
  if (fermionic) sign *= parity_before(ib);
  alive[ib].reset();
  if (fermionic) sign *= parity_before(iu);
  alive[iu].reset();
  return sign;
}

int max_dvar(const TermKey& k) {
  int m = -1;
  for (const auto& kf : k.kernels)
    for (const auto& d : kf.decos) m = std::max(m, d.dvar);
  for (const auto& a : k.atoms) m = std::max(m, a.dvar);
  return m;
}

void offset_dvars(TermKey& k, int off) {
  if (off <= 0) return;
  for (auto& kf : k.kernels)
    for (auto& d : kf.decos)
      if (d.dvar >= 0) d.dvar += off;
  for (auto& a : k.atoms)
    if (a.dvar >= 0) a.dvar += off;
}

// One cross-contraction matching applied to a concatenated atom list.
void apply_matching(const std::vector<FieldAtom>& atoms,
                    const std::vector<std::pair<int, int>>& pairs,  // (unbarred, barred)
                    char base, const std::vector<KernelFactor>& carried,
                    const Poly& coeff, Expr& out) {
  std::vector<std::optional<FieldAtom>> alive(atoms.begin(), atoms.end());
  int sign = 1;
  Poly c = coeff;
  std::vector<KernelFactor> kernels = carried;
  for (const auto& [iu, ib] : pairs) {
    PairKernel pk = make_pair_kernel(base, atoms[iu], atoms[ib]);
    sign *= remove_pair(alive, iu, ib);
    if (pk.factor) kernels.push_back(*pk.factor);
    c = c * pk.coeff;
  }
  TermKey key;
  key.kernels = std::move(kernels);
  for (const auto& a : alive)
    if (a) key.atoms.push_back(*a);
  out.add(std::move(key), (sign == 1) ? c : -c);
}

// Enumerates matchings of cross pairs between [0, na) and [na, n) and feeds
// each (of size between min_size and max_size) to apply_matching.
void enumerate_cross_matchings(const std::vector<FieldAtom>& atoms, int na,
                               char base,
                               const std::vector<KernelFactor>& carried,
                               const Poly& coeff, int min_size, int max_size,
                               Expr& out) {
  int n = static_cast<int>(atoms.size());
  std::vector<std::pair<int, int>> pairs;
  std::vector<bool> used(n, false);
  auto emit = [&]() {
    if (static_cast<int>(pairs.size()) >= min_size) {
      apply_matching(atoms, pairs, base, carried, coeff, out);
    }
  };
  // Recurse over the A-side atoms in order; each is either skipped or paired
  // with a compatible unused B-side atom.
  auto rec = [&](auto&& self, int i) -> void {
    if (i == na || static_cast<int>(pairs.size()) == max_size) {
      emit();
      return;
    }
    self(self, i + 1);  // atom i unpaired
    if (!is_contractible(atoms[i].sp)) return;
    Species want = contraction_partner(atoms[i].sp);
    for (int j = na; j < n; ++j) {
      if (used[j] || atoms[j].sp != want) continue;
      used[j] = true;
      bool i_unbarred = !is_barred(atoms[i].sp);
      pairs.emplace_back(i_unbarred ? i : j, i_unbarred ? j : i);
      self(self, i + 1);
      pairs.pop_back();
      used[j] = false;
    }
  };
  rec(rec, 0);
}

Expr cross_terms(const Expr& a, const Expr& b, char base, int min_size,
                 int max_size) {
  Expr out;
  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      TermKey kbb = kb;
      offset_dvars(kbb, max_dvar(ka) + 1);
      std::vector<FieldAtom> atoms = ka.atoms;
      atoms.insert(atoms.end(), kbb.atoms.begin(), kbb.atoms.end());
      std::vector<KernelFactor> carried = ka.kernels;
      carried.insert(carried.end(), kbb.kernels.begin(), kbb.kernels.end());
      enumerate_cross_matchings(atoms, static_cast<int>(ka.atoms.size()), base,
                                carried, ca * cb, min_size, max_size, out);
    }
  }
  return out;
}

}  // namespace

Expr laplacian_cross(const Expr& a, const Expr& b, char kernel_base) {
  return cross_terms(a, b, kernel_base, 1, 1);
}

Expr laplacian_within(const Expr& a, char kernel_base) {
  Expr out;
  for (const auto& [k, c] : a.terms()) {
    int n = static_cast<int>(k.atoms.size());
    for (int i = 0; i < n; ++i) {
      if (!is_contractible(k.atoms[i].sp) || is_barred(k.atoms[i].sp)) continue;
      Species want = contraction_partner(k.atoms[i].sp);
      for (int j = 0; j < n; ++j) {
        if (k.atoms[j].sp != want) continue;
        apply_matching(k.atoms, {{i, j}}, kernel_base, k.kernels, c, out);
      }
    }
  }
  return out;
}

Expr wick_exp(const Expr& v, char kernel_base, int sign) {
  Expr out;
  for (const auto& [k, c] : v.terms()) {
    int n = static_cast<int>(k.atoms.size());
    std::vector<std::pair<int, int>> pairs;
    std::vector<bool> used(n, false);
    auto rec = [&](auto&& self, int i) -> void {
      if (i == n) {
        Poly cc = c;
        if (sign < 0 && pairs.size() % 2 == 1) cc = -cc;
        apply_matching(k.atoms, pairs, kernel_base, k.kernels, cc, out);
        return;
      }
      self(self, i + 1);
      if (used[i] || !is_contractible(k.atoms[i].sp)) return;
      Species want = contraction_partner(k.atoms[i].sp);
      for (int j = i + 1; j < n; ++j) {
        if (used[j] || k.atoms[j].sp != want) continue;
        used[i] = used[j] = true;
        bool i_unbarred = !is_barred(k.atoms[i].sp);
        pairs.emplace_back(i_unbarred ? i : j, i_unbarred ? j : i);
        self(self, i + 1);
        pairs.pop_back();
        used[i] = used[j] = false;
      }
    };
    rec(rec, 0);
  }
  return out;
}

Expr truncated_pair(const Expr& vx, const Expr& vy, char kernel_base,
                    bool observable_mode) {
  if (!observable_mode) return cross_terms(vx, vy, kernel_base, 1, 4);
  Expr out = cross_terms(vx, pi_bulk(vy), kernel_base, 1, 4);
  out += cross_terms(pi_obs(vx), vy, kernel_base, 1, 4);
  return out;
}

Expr apply_Q(const Expr& p) {
  Expr out;
  for (const auto& [k, c] : p.terms()) {
    int prefix = 1;
    for (size_t i = 0; i < k.atoms.size(); ++i) {
      const FieldAtom& a = k.atoms[i];
      int coeff_sign = prefix;
      std::optional<Species> target;
      switch (a.sp) {
        case Species::phi: target = Species::psi; break;
        case Species::phibar: target = Species::psibar; break;
        case Species::psi: target = Species::phi; coeff_sign = -coeff_sign; break;
        case Species::psibar: target = Species::phibar; break;
        case Species::sigma:
        case Species::sigmabar: break;
      }
      if (target) {
        TermKey key = k;
        key.atoms[i].sp = *target;
        out.add(std::move(key), (coeff_sign == 1) ? c : -c);
      }
      if (is_fermion(a.sp)) prefix = -prefix;
    }
  }
  return out;
}

}  // namespace rg::sym
