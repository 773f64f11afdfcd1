#pragma once
// Exact contraction calculus: graded field monomials, Gaussian pair
// contractions with abstract kernels, and the localisation step that reduces
// kernel-weighted sums to the local interaction basis.  Everything is exact
// (rational coefficients over named scalar symbols); lattice geometry enters
// only through the moment symbols emitted by loc_reduce.
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace rg::sym {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Coefficient polynomials: multivariate, exact, over string-named symbols.
// ---------------------------------------------------------------------------

// symbol name -> exponent (> 0).  Ordered map gives a canonical form.
using Term = std::map<std::string, int>;

class Poly {
 public:
  Poly() = default;

  static Poly constant(const Rational& c);
  static Poly constant(long c) { return constant(Rational(c)); }
  static Poly symbol(const std::string& name, int power = 1);

  bool is_zero() const { return terms_.empty(); }
  const std::map<Term, Rational>& terms() const { return terms_; }

  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator-() const;
  Poly operator*(const Poly& o) const;
  Poly operator*(const Rational& c) const;
  bool operator==(const Poly& o) const { return terms_ == o.terms_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  // Coefficient of the constant term.
  Rational constant_part() const;

  // Replace every occurrence of `name` by `replacement` (expands powers).
  Poly substituted(const std::string& name, const Poly& replacement) const;

  // Numeric evaluation; throws std::logic_error on an unbound symbol.
  double evaluate(const std::map<std::string, double>& binding) const;

  std::string str() const;

 private:
  std::map<Term, Rational> terms_;
  void add_term(const Term& t, const Rational& c);
};

// ---------------------------------------------------------------------------
// Field atoms and monomials.
// ---------------------------------------------------------------------------

enum class Species : std::uint8_t {
  sigma,     // external observable boson (non-contractible)
  sigmabar,  //
  phi,
  phibar,
  psi,      // fermion
  psibar,   //
};

enum class Deco : std::uint8_t {
  none,
  lap,   // the positive-spectrum lattice Laplacian D
  grad,  // a single finite-difference step along a bound direction variable
};

bool is_fermion(Species s);
bool is_barred(Species s);       // phibar / psibar
bool is_contractible(Species s);  // phi, phibar, psi, psibar
Species contraction_partner(Species s);

// A single field factor.  `pos` is an abstract site tag ('x','y','a','b').
// grad decorations carry a direction variable id (term-bound; each id stands
// for (1/2) * sum over the 2d signed unit directions) and an orientation sign.
struct FieldAtom {
  Species sp = Species::phi;
  char pos = 'x';
  Deco deco = Deco::none;
  int dvar = -1;
  int dsign = 0;

  int dimension() const;  // field dimension 1 + |decoration|; sigma counts 0

  friend bool operator<(const FieldAtom& l, const FieldAtom& r) {
    return std::tie(l.pos, l.sp, l.deco, l.dvar, l.dsign) <
           std::tie(r.pos, r.sp, r.deco, r.dvar, r.dsign);
  }
  friend bool operator==(const FieldAtom& l, const FieldAtom& r) {
    return std::tie(l.pos, l.sp, l.deco, l.dvar, l.dsign) ==
           std::tie(r.pos, r.sp, r.deco, r.dvar, r.dsign);
  }
};

// One abstract kernel factor between two site tags, with optional difference
// decorations normalised to the displacement (first tag minus second tag).
// base: 'w' = current-scale kernel, 'p' = next-scale kernel (w plus the
// fluctuation covariance), 'C' = fluctuation covariance.
struct KernelDeco {
  Deco kind = Deco::lap;
  int dvar = -1;
  int dsign = 0;
  friend bool operator<(const KernelDeco& l, const KernelDeco& r) {
    return std::tie(l.kind, l.dvar, l.dsign) < std::tie(r.kind, r.dvar, r.dsign);
  }
  friend bool operator==(const KernelDeco& l, const KernelDeco& r) {
    return std::tie(l.kind, l.dvar, l.dsign) == std::tie(r.kind, r.dvar, r.dsign);
  }
};

struct KernelFactor {
  char base = 'w';
  char p1 = 'x';
  char p2 = 'y';
  std::vector<KernelDeco> decos;

  friend bool operator<(const KernelFactor& l, const KernelFactor& r) {
    return std::tie(l.base, l.p1, l.p2, l.decos) <
           std::tie(r.base, r.p1, r.p2, r.decos);
  }
  friend bool operator==(const KernelFactor& l, const KernelFactor& r) {
    return std::tie(l.base, l.p1, l.p2, l.decos) ==
           std::tie(r.base, r.p1, r.p2, r.decos);
  }
};

// A product of kernel factors and field atoms.  Terms are stored canonically:
// atoms sorted (with the fermionic exchange sign absorbed into the
// coefficient), kernels sorted, direction variables relabelled in order of
// first appearance.
struct TermKey {
  std::vector<KernelFactor> kernels;
  std::vector<FieldAtom> atoms;

  friend bool operator<(const TermKey& l, const TermKey& r) {
    return std::tie(l.kernels, l.atoms) < std::tie(r.kernels, r.atoms);
  }
  friend bool operator==(const TermKey& l, const TermKey& r) {
    return std::tie(l.kernels, l.atoms) == std::tie(r.kernels, r.atoms);
  }
};

// Canonicalise in place; returns the accumulated sign (0 when the monomial
// vanishes because a fermionic atom repeats).
int canonicalize(TermKey& key);

class Expr {
 public:
  Expr() = default;

  static Expr zero() { return {}; }

  // Adds coeff * key (canonicalising the key first).
  void add(TermKey key, Poly coeff);

  bool is_zero() const { return terms_.empty(); }
  const std::map<TermKey, Poly>& terms() const { return terms_; }

  Expr& operator+=(const Expr& o);
  Expr& operator-=(const Expr& o);
  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator*(const Poly& c) const;
  Expr operator*(const Rational& c) const;
  bool operator==(const Expr& o) const { return terms_ == o.terms_; }
  bool operator!=(const Expr& o) const { return !(*this == o); }

  // Coefficient of an exact canonical key (zero Poly when absent).
  Poly coefficient(const TermKey& key) const;

  std::string str() const;

 private:
  std::map<TermKey, Poly> terms_;
};

// ---------------------------------------------------------------------------
// Monomial constructors for the interaction basis.
// ---------------------------------------------------------------------------

// tau_pq = phi_p phibar_q + psi_p psibar_q
Expr tau_pair(char p, char q);
Expr tau(char p);           // tau_pp
Expr tau2(char p);          // tau_p^2
Expr tau_nn(char p);        // (1/2) sum_e (grad_e phi)(grad_e phibar) + fermions
Expr tau_lap(char p);       // (1/2)[(D phi)phibar + phi(D phibar) + fermions]
Expr obs_sigma_phibar(char p);   // sigma phibar_p
Expr obs_sigmabar_phi(char p);   // sigmabar phi_p
Expr obs_sigma_sigmabar();       // sigma sigmabar

// The local interaction with symbolic couplings at tag p:
// g tau^2 + nu tau + y tau_nn + z tau_lap, plus, at the observable tags,
// -lam_a sigma phibar_a (p == 'a') or -lam_b sigmabar phi_b (p == 'b').
Expr interaction(char p, bool with_observables);

// ---------------------------------------------------------------------------
// Grading projections.
// ---------------------------------------------------------------------------

Expr pi_bulk(const Expr& e);  // terms without sigma/sigmabar
Expr pi_obs(const Expr& e);   // complement

// ---------------------------------------------------------------------------
// Contraction operators.
// ---------------------------------------------------------------------------

// Single application of the pair-contraction Laplacian within each monomial
// (self-contractions).  A closed boson loop cancels the matching fermion
// loop, so single tau factors are annihilated.
Expr laplacian_within(const Expr& a, char kernel_base);

// Cross part of the Laplacian on a product: one contraction joining a factor
// of `a` to a factor of `b`, summed over every admissible leg pairing, with
// fermionic signs.
Expr laplacian_cross(const Expr& a, const Expr& b, char kernel_base);

// e^{+-L} with the series terminating at half the polynomial degree.
Expr wick_exp(const Expr& v, char kernel_base, int sign);

// F(a, b): all connected contraction matchings of size >= 1 between a and b,
// each matching counted once.  observable_mode replaces the observable cross
// terms by the one-sided double-counted form F(a, pi_bulk b) + F(pi_obs a, b).
Expr truncated_pair(const Expr& vx, const Expr& vy, char kernel_base,
                    bool observable_mode);

// The supersymmetry generator: antiderivation with phi -> psi,
// phibar -> psibar, psi -> -phi, psibar -> phibar, sigma/sigmabar -> 0.
Expr apply_Q(const Expr& p);

// ---------------------------------------------------------------------------
// Localisation.
// ---------------------------------------------------------------------------

enum class Phase { below_jab, at_or_above_jab };

// Reduces a kernel-weighted expression, understood as summed over the
// non-anchor bulk tag, to a local polynomial at `anchor`.  Kernel products
// become moment symbols; monomials of scaling dimension above the sector cap
// are annihilated.  Unknown kernel patterns throw ("no Loc rule ...").
Expr loc_reduce(const Expr& summed, Phase phase, char anchor);

}  // namespace rg::sym
