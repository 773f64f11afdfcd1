// End-to-end acceptance suite.  Each criterion measures a shipped
// guarantee on the configurations named in its line; tolerances are
// pinned here, not configurable.  Prints one PASS/FAIL line per
// criterion and exits with the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rg/coeffs.hpp"
#include "rg/decomp.hpp"
#include "rg/errors.hpp"
#include "rg/flow.hpp"
#include "rg/flow_table.hpp"
#include "rg/lattice.hpp"
#include "rg/symbolic.hpp"

using namespace rg;
using sym::derive_flow_table;
using sym::hardcoded_flow_table;
using sym::Phase;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome pass(const std::string& detail) { return {true, detail}; }
Outcome fail(const std::string& detail) { return {false, detail}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double median3(double a, double b, double c) {
  std::vector<double> v{a, b, c};
  std::sort(v.begin(), v.end());
  return v[1];
}

ScaleDecomposition build(int N, double m2) {
  return build_decomposition(make_spec(4, 2, N), m2, make_window(8, 16, 0.5),
                             ZeroMode::omit);
}

double closure_rel_sup(const ScaleDecomposition& dec) {
  Kernel full = green_kernel(dec.spec, dec.m2, ZeroMode::omit);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < full.v.size(); ++i) {
    double sum = dec.remainder.v[i];
    for (const Kernel& s : dec.slices) sum += s.v[i];
    num = std::max(num, std::abs(sum - full.v[i]));
    den = std::max(den, std::abs(full.v[i]));
  }
  return den > 0 ? num / den : num;
}

// ---------------------------------------------------------------------
// 1. symbolic derivation == fixed flow equations, and both == phi_pt
// ---------------------------------------------------------------------
Outcome criterion1() {
  auto t0 = std::chrono::steady_clock::now();

  sym::FlowTable tables[2];
  const Phase phases[2] = {Phase::below_jab, Phase::at_or_above_jab};
  for (int p = 0; p < 2; ++p) {
    tables[p] = derive_flow_table(phases[p]);
    std::string diff = sym::compare_tables(tables[p], hardcoded_flow_table(phases[p]));
    if (!diff.empty()) return fail("canonical tables differ: " + diff);
  }

  std::mt19937_64 rng(20260825);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const int j = 3, L = 2;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RawMoments mj, mj1;
    mj.j = j;
    mj1.j = j + 1;
    for (double* f : {&mj.w1, &mj.w2, &mj.w3, &mj.wss, &mj.w2ss, &mj.w3ss,
                      &mj.wdw1, &mj.wdwss, &mj.gwss, &mj.C00, &mj.Cab,
                      &mj1.w1, &mj1.w2, &mj1.w3, &mj1.wss, &mj1.w2ss,
                      &mj1.w3ss, &mj1.wdw1, &mj1.wdwss, &mj1.gwss, &mj1.C00,
                      &mj1.Cab})
      *f = u(rng);
    CouplingVector V;
    V.g = u(rng);
    V.nu = u(rng);
    V.y = u(rng);
    V.z = u(rng);
    V.lam_a = u(rng);
    V.lam_b = u(rng);
    V.q_a = u(rng);
    V.q_b = u(rng);

    FlowCoefficients fc = greek_coefficients(mj, mj1, j, L);
    std::map<std::string, double> env = {
        {"g", V.g},           {"nu", V.nu},         {"y", V.y},
        {"z", V.z},           {"lam_a", V.lam_a},   {"lam_b", V.lam_b},
        {"q_a", V.q_a},       {"q_b", V.q_b},       {"C00", mj.C00},
        {"Cab", mj.Cab},      {"w1", mj.w1},        {"w2", mj.w2},
        {"w3", mj.w3},        {"wss", mj.wss},      {"w2ss", mj.w2ss},
        {"w3ss", mj.w3ss},    {"wdw1", mj.wdw1},    {"wdwss", mj.wdwss},
        {"gwss", mj.gwss},    {"w1p", mj1.w1},      {"w2p", mj1.w2},
        {"w3p", mj1.w3},      {"wssp", mj1.wss},    {"w2ssp", mj1.w2ss},
        {"w3ssp", mj1.w3ss},  {"wdw1p", mj1.wdw1},  {"wdwssp", mj1.wdwss},
        {"gwssp", mj1.gwss}};

    for (int p = 0; p < 2; ++p) {
      const int j_ab = p == 0 ? 100 : 2; // j+1 < j_ab vs j+1 >= j_ab
      CouplingVector want = phi_pt(V, fc, mj, mj1, j_ab);
      const std::map<std::string, double> want_by_row = {
          {"g", want.g},         {"nu", want.nu},     {"y", want.y},
          {"z", want.z},         {"lam_a", want.lam_a},
          {"lam_b", want.lam_b}, {"q_a", want.q_a},   {"q_b", want.q_b}};
      for (const std::string& row : sym::kFlowRowOrder)
        worst = std::max(worst, std::abs(tables[p].rows.at(row).evaluate(env) -
                                         want_by_row.at(row)));
    }
  }

  double secs = seconds_since(t0);
  if (worst > 1e-12)
    return fail("binding deviation " + fmt(worst) + " > 1e-12");
  if (secs >= 10) return fail("took " + fmt(secs) + " s (limit 10 s)");
  return pass("tables identical, binding deviation " + fmt(worst) + ", " +
              fmt(secs) + " s");
}

// ---------------------------------------------------------------------
// 2. beta_j limit on the side-64 massless lattice
// ---------------------------------------------------------------------
Outcome criterion2(const ScaleDecomposition& dec64, double build_secs) {
  auto t0 = std::chrono::steady_clock::now();
  BetaLimit bl = beta_limit(dec64);
  double secs = build_secs + seconds_since(t0);

  if (bl.usable.size() < 2) return fail("fewer than two usable scales");
  std::string detail;
  for (std::size_t i = bl.usable.size() - 2; i < bl.usable.size(); ++i) {
    int j = bl.usable[i];
    double rel = std::abs(bl.beta[static_cast<std::size_t>(j)] - bl.reference) /
                 bl.reference;
    detail += "beta_" + std::to_string(j) + "=" +
              fmt(bl.beta[static_cast<std::size_t>(j)]) + " (" + fmt(100 * rel) +
              "%) ";
    if (rel > 0.25)
      return fail("beta_" + std::to_string(j) + " off by " + fmt(100 * rel) +
                  "% (limit 25%)");
  }
  double rel_ex = std::abs(bl.extrapolated - bl.reference) / bl.reference;
  detail += "extrapolated=" + fmt(bl.extrapolated) + " (" + fmt(100 * rel_ex) +
            "%)";
  if (rel_ex > 0.10)
    return fail("extrapolated off by " + fmt(100 * rel_ex) + "% (limit 10%)");
  if (secs >= 300) return fail("took " + fmt(secs) + " s (limit 300 s)");
  return pass(detail + ", " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------
// 3. decomposition closure at side 32 across masses
// ---------------------------------------------------------------------
Outcome criterion3(const ScaleDecomposition& dec32_0) {
  std::string detail;
  for (double m2 : {0.0, 0.01, 1.0}) {
    double rel = m2 == 0.0 ? closure_rel_sup(dec32_0)
                           : closure_rel_sup(build(5, m2));
    detail += "m2=" + fmt(m2) + ": " + fmt(rel) + " ";
    if (rel > 1e-9)
      return fail("m2=" + fmt(m2) + " relative sup " + fmt(rel) + " > 1e-9");
  }
  return pass(detail);
}

// ---------------------------------------------------------------------
// 4. slice decay beyond its nominal range, side 64
// ---------------------------------------------------------------------
Outcome criterion4(const ScaleDecomposition& dec64) {
  std::string detail;
  for (int j = 2; j <= 4; ++j) {
    RangeReport rr = range_profile(dec64, j);
    detail += "j=" + std::to_string(j) + ": " + fmt(rr.ratio) + " ";
    if (rr.ratio > 1e-2)
      return fail("j=" + std::to_string(j) + " ratio " + fmt(rr.ratio) +
                  " > 1e-2");
  }
  return pass(detail);
}

// ---------------------------------------------------------------------
// 5. normalised coefficient sequences stay flat over j = 2..4
// ---------------------------------------------------------------------
Outcome criterion5(const ScaleDecomposition& dec64) {
  const int L = dec64.spec.L;
  std::vector<RawMoments> raws;
  std::vector<FlowCoefficients> fcs;
  for (int j = 2; j <= 5; ++j)
    raws.push_back(raw_moments(dec64, j, {4, 0, 0, 0},
                               j >= dec64.spec.N - 1));
  for (int j = 2; j <= 4; ++j)
    fcs.push_back(greek_coefficients(raws[static_cast<std::size_t>(j - 2)],
                                     raws[static_cast<std::size_t>(j - 1)], j,
                                     L));

  auto L2j = [L](int j) { return std::pow(static_cast<double>(L), 2.0 * j); };
  std::map<std::string, std::vector<double>> seqs;
  for (int j = 2; j <= 4; ++j) {
    const FlowCoefficients& fc = fcs[static_cast<std::size_t>(j - 2)];
    const RawMoments& mj = raws[static_cast<std::size_t>(j - 2)];
    seqs["beta"].push_back(std::abs(fc.beta));
    seqs["theta"].push_back(std::abs(fc.theta));
    seqs["sigma"].push_back(std::abs(fc.sigma));
    seqs["zeta"].push_back(std::abs(fc.zeta));
    seqs["etap*L2j"].push_back(std::abs(fc.etap) * L2j(j));
    seqs["pip*L2j"].push_back(std::abs(fc.pip) * L2j(j));
    seqs["xip*L2j"].push_back(std::abs(fc.xip) * L2j(j));
    seqs["w1/L2j"].push_back(std::abs(mj.w1) / L2j(j));
    seqs["wss/L4j"].push_back(std::abs(mj.wss) / (L2j(j) * L2j(j)));
    seqs["w2ss/L2j"].push_back(std::abs(mj.w2ss) / L2j(j));
  }

  for (const auto& [name, s] : seqs) {
    double mx = std::max({s[0], s[1], s[2]});
    double md = median3(s[0], s[1], s[2]);
    // floor keeps identically-vanishing sequences (massless zero modes)
    // from failing on roundoff noise
    double bound = std::max(10.0 * md, 1e-12);
    if (mx > bound)
      return fail(name + ": max " + fmt(mx) + " > 10 x median " + fmt(md));
  }
  return pass(std::to_string(seqs.size()) + " sequences flat over j=2..4");
}

// ---------------------------------------------------------------------
// 6. conjugacy residual is cubic in the coupling magnitude
// ---------------------------------------------------------------------
Outcome criterion6(const ScaleDecomposition& dec32_0) {
  RawMoments m2 = raw_moments(dec32_0, 2, {4, 0, 0, 0}, false);
  RawMoments m3 = raw_moments(dec32_0, 3, {4, 0, 0, 0}, false);
  RawMoments m4 = raw_moments(dec32_0, 4, {4, 0, 0, 0}, true);
  FlowCoefficients fc2 = greek_coefficients(m2, m3, 2, 2);
  FlowCoefficients fc3 = greek_coefficients(m3, m4, 3, 2);

  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_ratio = 0;
  for (int dir = 0; dir < 10; ++dir) {
    BulkVector B;
    do {
      B.g = u(rng);
      B.mu = u(rng);
      B.z0 = u(rng);
    } while (B.g * B.g + B.mu * B.mu + B.z0 * B.z0 < 1e-4);
    double norm = std::sqrt(B.g * B.g + B.mu * B.mu + B.z0 * B.z0);
    B.g /= norm;
    B.mu /= norm;
    B.z0 /= norm;

    std::vector<double> rates;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      BulkVector scaled{eps * B.g, eps * B.mu, eps * B.z0};
      TransformedVector res = conjugacy_residual(scaled, fc2, fc3, m2, m3);
      rates.push_back(std::max({std::abs(res.g), std::abs(res.z),
                                std::abs(res.mu)}) /
                      (eps * eps * eps));
    }
    double rmin = *std::min_element(rates.begin(), rates.end());
    double rmax = *std::max_element(rates.begin(), rates.end());
    if (rmin <= 0) return fail("vanishing residual along a direction");
    worst_ratio = std::max(worst_ratio, rmax / rmin);
    if (rmax / rmin > 2.0)
      return fail("direction " + std::to_string(dir) + ": cubic ratio " +
                  fmt(rmax / rmin) + " > 2");
  }
  return pass("worst cubic ratio " + fmt(worst_ratio) + " over 10 directions");
}

// ---------------------------------------------------------------------
// 7. transform round-trip at synthetic coefficients
// ---------------------------------------------------------------------
Outcome criterion7() {
  std::mt19937_64 rng(20240717);
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  std::uniform_real_distribution<double> ub(-0.05, 0.05);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    FlowCoefficients fc;
    fc.wbar1 = uc(rng);
    fc.wbarss = uc(rng);
    BulkVector B{ub(rng), ub(rng), ub(rng)};
    BulkVector back = invert_T(transform_T(B, fc), fc);
    worst = std::max({worst, std::abs(back.g - B.g), std::abs(back.mu - B.mu),
                      std::abs(back.z0 - B.z0)});
  }
  if (worst > 1e-12) return fail("max deviation " + fmt(worst) + " > 1e-12");
  return pass("max deviation " + fmt(worst) + " over 1000 points");
}

// ---------------------------------------------------------------------
// 8. gbar asymptotics (constant beta) and step comparability (full run)
// ---------------------------------------------------------------------
Outcome criterion8(const Trajectory& run32) {
  const double pi = std::acos(-1.0);
  const double beta_inf = std::log(2.0) / (pi * pi);
  // start large enough that the 1/(beta*j) asymptote is visible by j=500:
  // gbar_j*beta*j ~ 1/(1 + 1/(gbar_0*beta*j)) needs gbar_0*beta*500 >> 1
  double gbar = 0.1;
  for (int j = 0; j < 500; ++j) gbar -= beta_inf * gbar * gbar;
  double product = gbar * beta_inf * 500.0;
  if (std::abs(product - 1.0) > 0.30)
    return fail("gbar*beta*j = " + fmt(product) + " not within 30% of 1");
  if (!run32.gbar_comparable)
    return fail("full run violates step comparability of gbar");
  return pass("gbar*beta*j = " + fmt(product) + ", full-run steps comparable");
}

// ---------------------------------------------------------------------
// 9. mass scale vs decay-onset scale across a mass grid, side 64
// ---------------------------------------------------------------------
Outcome criterion9() {
  std::string detail;
  for (int k = 2; k <= 5; ++k) {
    const double m2 = std::pow(2.0, -2.0 * k);
    ScaleDecomposition dec = build(6, m2);
    std::vector<double> betas;
    for (int j = 0; j <= dec.spec.N - 1; ++j) {
      RawMoments mj = raw_moments(dec, j, {4, 0, 0, 0}, j >= dec.spec.N - 1);
      RawMoments mj1 =
          raw_moments(dec, j + 1, {4, 0, 0, 0}, j + 1 >= dec.spec.N - 1);
      betas.push_back(greek_coefficients(mj, mj1, j, dec.spec.L).beta);
    }
    ScalePair sp = scales(m2, dec.spec.L, betas, 2.0);
    int diff = std::abs(sp.j_Omega - sp.j_m);
    detail += "k=" + std::to_string(k) + ": |" + std::to_string(sp.j_Omega) +
              "-" + std::to_string(sp.j_m) + "|=" + std::to_string(diff) + " ";
    if (diff > 3)
      return fail("k=" + std::to_string(k) + ": |j_Omega - j_m| = " +
                  std::to_string(diff) + " > 3");
  }
  return pass(detail);
}

// ---------------------------------------------------------------------
// 10. supersymmetry and structure of the observable block
// ---------------------------------------------------------------------
Outcome criterion10(const Trajectory& run32, const ScaleDecomposition& dec32_0) {
  using namespace sym;

  // the pairing generator annihilates every basis monomial
  for (const Expr& e : {tau('x'), tau2('x'), tau_nn('x'), tau_lap('x')})
    if (!apply_Q(e).is_zero())
      return fail("pairing generator does not annihilate the local basis");

  // it commutes with the contraction Laplacian on random degree-4 terms
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> spi(0, 3);
  std::uniform_int_distribution<int> posi(0, 1);
  const Species table[4] = {Species::phi, Species::phibar, Species::psi,
                            Species::psibar};
  for (int trial = 0; trial < 12; ++trial) {
    TermKey key;
    for (int a = 0; a < 4; ++a) {
      FieldAtom atom;
      atom.sp = table[spi(rng)];
      atom.pos = posi(rng) ? 'x' : 'y';
      key.atoms.push_back(atom);
    }
    Expr e;
    e.add(key, Poly::constant(1));
    if (apply_Q(laplacian_within(e, 'C')) !=
        laplacian_within(apply_Q(e), 'C'))
      return fail("generator does not commute with the contraction Laplacian");
  }

  // the evolved bulk interaction closes in the susy basis, no constant
  for (Phase phase : {Phase::below_jab, Phase::at_or_above_jab}) {
    PerturbativeParts parts = perturbative_map(phase, 'x');
    Expr bulk = pi_bulk(parts.v_pt);
    if (!apply_Q(bulk).is_zero())
      return fail("evolved bulk interaction escapes the susy basis");
    if (!bulk.coefficient(TermKey{}).is_zero())
      return fail("evolved bulk interaction has a constant term");
  }

  // observable rows are triangular over the bulk: numerically ...
  {
    RawMoments m2 = raw_moments(dec32_0, 2, {4, 0, 0, 0}, false);
    RawMoments m3 = raw_moments(dec32_0, 3, {4, 0, 0, 0}, false);
    FlowCoefficients fc = greek_coefficients(m2, m3, 2, 2);
    CouplingVector a;
    a.g = 0.03;
    a.nu = 0.01;
    a.y = 1e-4;
    a.z = -2e-4;
    CouplingVector b = a;
    b.lam_a = 0.7;
    b.lam_b = -0.4;
    b.q_a = 0.2;
    b.q_b = -0.1;
    CouplingVector fa = phi_pt(a, fc, m2, m3, 3);
    CouplingVector fb = phi_pt(b, fc, m2, m3, 3);
    if (fa.g != fb.g || fa.nu != fb.nu || fa.y != fb.y || fa.z != fb.z)
      return fail("observable couplings leak into the bulk flow");
  }

  // ... and symbolically: lambda rows are linear in lambda, q rows are
  // q plus a lambda_a*lambda_b increment
  sym::FlowTable below = derive_flow_table(Phase::below_jab);
  for (const auto& [mono, coeff] : below.rows.at("lam_a").terms()) {
    auto it = mono.find("lam_a");
    if (it == mono.end() || it->second != 1 || mono.count("lam_b") ||
        mono.count("q_a") || mono.count("q_b"))
      return fail("lam_a row is not linear in lam_a");
  }
  for (const auto& [mono, coeff] : below.rows.at("q_a").terms()) {
    const bool identity = mono.size() == 1 && mono.count("q_a") &&
                          mono.at("q_a") == 1;
    const bool pair_increment = mono.count("lam_a") && mono.count("lam_b");
    if (!identity && !pair_increment)
      return fail("q_a row is not q_a plus a lambda-pair increment");
  }

  // the q coupling activates at the coalescence scale of the pair
  const int j_ab = coalescence_scale({4, 0, 0, 0}, 2);
  std::vector<double> q;
  for (const TrajectoryRow& r : run32.rows) q.push_back(r.V.q_a);
  if (static_cast<int>(q.size()) <= j_ab + 1)
    return fail("trajectory too short to observe coalescence");
  if (q[0] != 0.0) return fail("initial q not preserved in row 0");
  double pre = 0;
  for (int s = 0; s < j_ab; ++s)
    pre = std::max(pre, std::abs(q[static_cast<std::size_t>(s) + 1] -
                                 q[static_cast<std::size_t>(s)]));
  double at = std::abs(q[static_cast<std::size_t>(j_ab) + 1] -
                       q[static_cast<std::size_t>(j_ab)]);
  if (at < 10.0 * pre)
    return fail("activation step " + fmt(at) + " not dominant over earlier " +
                fmt(pre));
  return pass("generator, closure, triangularity, activation (step " +
              fmt(at) + " vs earlier " + fmt(pre) + ")");
}

} // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results(10);
  auto set = [&results](int idx, const std::string& name, Outcome o) {
    results[static_cast<std::size_t>(idx - 1)] = {name, o};
  };
  auto guarded = [](auto&& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return fail(std::string("exception: ") + e.what());
    }
  };

  set(1, "symbolic-numeric equivalence of the flow equations",
      guarded([] { return criterion1(); }));

  // shared side-64 massless decomposition for criteria 2, 4, 5
  {
    auto t0 = std::chrono::steady_clock::now();
    std::unique_ptr<ScaleDecomposition> dec64;
    Outcome built = guarded([&] {
      dec64 = std::make_unique<ScaleDecomposition>(build(6, 0.0));
      return pass("");
    });
    double build_secs = seconds_since(t0);
    if (!built.pass) {
      set(2, "beta limit at side 64", built);
      set(4, "slice decay at side 64", built);
      set(5, "normalised coefficient bounds", built);
    } else {
      set(2, "beta limit at side 64",
          guarded([&] { return criterion2(*dec64, build_secs); }));
      set(4, "slice decay at side 64",
          guarded([&] { return criterion4(*dec64); }));
      set(5, "normalised coefficient bounds",
          guarded([&] { return criterion5(*dec64); }));
    }
  }

  // shared side-32 massless decomposition and full flow run
  std::unique_ptr<ScaleDecomposition> dec32;
  std::unique_ptr<Trajectory> run32;
  Outcome base32 = guarded([&] {
    dec32 = std::make_unique<ScaleDecomposition>(build(5, 0.0));
    CouplingVector V0;
    V0.g = 0.02;
    V0.lam_a = 1.0;
    V0.lam_b = 1.0;
    run32 = std::make_unique<Trajectory>(
        iterate_flow(V0, *dec32, 0, 4, {4, 0, 0, 0}));
    return pass("");
  });

  if (!base32.pass) {
    set(3, "decomposition closure across masses", base32);
    set(6, "conjugacy residual is cubic", base32);
    set(8, "gbar asymptotics and comparability", base32);
    set(10, "supersymmetry and observable structure", base32);
  } else {
    set(3, "decomposition closure across masses",
        guarded([&] { return criterion3(*dec32); }));
    set(6, "conjugacy residual is cubic",
        guarded([&] { return criterion6(*dec32); }));
    set(8, "gbar asymptotics and comparability",
        guarded([&] { return criterion8(*run32); }));
    set(10, "supersymmetry and observable structure",
        guarded([&] { return criterion10(*run32, *dec32); }));
  }

  set(7, "transform round-trip", guarded([] { return criterion7(); }));
  set(9, "mass scale matches decay onset", guarded([] { return criterion9(); }));

  int failures = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [name, o] = results[i];
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": "
              << name;
    if (!o.detail.empty()) std::cout << " [" << o.detail << "]";
    std::cout << "\n";
    if (!o.pass) ++failures;
  }
  return failures;
}
