#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rg/decomp.hpp"
#include "rg/flow.hpp"

using namespace rg;

namespace {

// two-slice toy on the 4-point circle: C_1 = delta_0, C_2 = (delta_1 + delta_-1)/2
ScaleDecomposition toy_decomposition() {
  auto s = make_spec(1, 2, 2);
  s.N = 3;
  ScaleDecomposition dec;
  dec.spec = s;
  dec.m2 = 0;
  Kernel c1 = delta_kernel(s, {0});
  Kernel c2 = zero_kernel(s);
  c2.at(index_of(s, {1})) = 0.5;
  c2.at(index_of(s, {-1})) = 0.5;
  dec.slices = {c1, c2};
  dec.remainder = zero_kernel(s);
  dec.empty_slice = {false, false};
  dec.wsum.push_back(zero_kernel(s));
  dec.wsum.push_back(c1);
  Kernel w2 = c1;
  for (std::size_t i = 0; i < w2.v.size(); ++i) w2.v[i] += c2.v[i];
  dec.wsum.push_back(w2);
  return dec;
}

// hand-picked nonzero moment rows so every greek coefficient is exercised
void synthetic_rows(RawMoments& mj, RawMoments& mj1, RawMoments& mj2) {
  mj.j = 2;
  mj.w1 = 3.2; mj.w2 = 2.1; mj.w3 = 1.3; mj.wss = 1.7;
  mj.w2ss = 0.9; mj.w3ss = 0.6; mj.wdw1 = 0.4; mj.wdwss = 0.3; mj.gwss = 0.2;
  mj.C00 = 0.11; mj.Cab = 0.0;
  mj1.j = 3;
  mj1.w1 = 4.1; mj1.w2 = 2.6; mj1.w3 = 1.9; mj1.wss = 2.9;
  mj1.w2ss = 1.4; mj1.w3ss = 0.8; mj1.wdw1 = 0.5; mj1.wdwss = 0.35; mj1.gwss = 0.25;
  mj1.C00 = 0.07; mj1.Cab = 0.0;
  mj2 = mj1;
  mj2.j = 4; mj2.w1 = 4.5; mj2.wss = 3.4;
}

} // namespace

TEST_CASE("full map fixes the origin") {
  auto dec = toy_decomposition();
  auto m1 = raw_moments(dec, 1, {0});
  auto m2 = raw_moments(dec, 2, {0}, true);
  auto fc = greek_coefficients(m1, m2, 1, 2);
  auto out = phi_pt(CouplingVector{}, fc, m1, m2, 3);
  CHECK(out.g == 0.0);
  CHECK(out.nu == 0.0);
  CHECK(out.y == 0.0);
  CHECK(out.z == 0.0);
  CHECK(out.lam_a == 0.0);
  CHECK(out.q_a == 0.0);
}

TEST_CASE("full map with only a mass coupling") {
  auto dec = toy_decomposition();
  auto m1 = raw_moments(dec, 1, {0});
  auto m2 = raw_moments(dec, 2, {0}, true);
  auto fc = greek_coefficients(m1, m2, 1, 2);

  CouplingVector V;
  V.nu = 0.1;
  V.lam_a = 0.7;
  V.lam_b = 0.7;
  // toy: w_1^(1) = 1, w_2^(1) = 2, C_2(0) = 0 so nu_+ = nu
  auto out = phi_pt(V, fc, m1, m2, /*j_ab=*/5);
  CHECK(out.g == 0.0);
  CHECK(out.nu == doctest::Approx(0.1 - 0.01).epsilon(1e-14));      // nu - delta[nu^2 w^(1)]
  CHECK(out.y == 0.0);
  CHECK(out.z == doctest::Approx(-0.005).epsilon(1e-14));           // -1/2 delta[nu^2 w^(**)]
  CHECK(out.lam_a == doctest::Approx(0.9 * 0.7).epsilon(1e-14));    // (1 - delta[nu w^(1)]) lam
  CHECK(out.lam_b == doctest::Approx(0.9 * 0.7).epsilon(1e-14));

  // at or above the coalescence scale the lambda factor is dropped
  auto out2 = phi_pt(V, fc, m1, m2, /*j_ab=*/2);
  CHECK(out2.lam_a == 0.7);
  CHECK(out2.lam_b == 0.7);
}

TEST_CASE("observable charge picks up the crossing covariance") {
  RawMoments mj, mj1, mj2;
  synthetic_rows(mj, mj1, mj2);
  mj.Cab = 0.3;
  auto fc = greek_coefficients(mj, mj1, 2, 2);
  CouplingVector V;
  V.lam_a = 1;
  V.lam_b = 1;
  auto out = phi_pt(V, fc, mj, mj1, 99);
  CHECK(out.q_a == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(out.q_b == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("observable couplings never feed back into the bulk") {
  RawMoments mj, mj1, mj2;
  synthetic_rows(mj, mj1, mj2);
  mj.Cab = 0.21;
  auto fc = greek_coefficients(mj, mj1, 2, 2);
  CouplingVector a{0.03, 0.02, 0.01, -0.015, 0.5, -0.4, 0.2, 0.1};
  CouplingVector b = a;
  b.lam_a = -1.1; b.lam_b = 0.9; b.q_a = -0.3; b.q_b = 0.05;
  auto oa = phi_pt(a, fc, mj, mj1, 4);
  auto ob = phi_pt(b, fc, mj, mj1, 4);
  CHECK(oa.g == ob.g);
  CHECK(oa.nu == ob.nu);
  CHECK(oa.y == ob.y);
  CHECK(oa.z == ob.z);
}

TEST_CASE("observable flow is linear in its couplings") {
  RawMoments mj, mj1, mj2;
  synthetic_rows(mj, mj1, mj2);
  mj.Cab = 0.17;
  auto fc = greek_coefficients(mj, mj1, 2, 2);
  CouplingVector base{0.03, 0.02, 0.01, -0.015, 0.5, 0.8, 0.0, 0.0};

  auto o1 = phi_pt(base, fc, mj, mj1, 9);
  CouplingVector scaled = base;
  scaled.lam_a *= 3.0;
  auto o3 = phi_pt(scaled, fc, mj, mj1, 9);
  CHECK(o3.lam_a / scaled.lam_a == doctest::Approx(o1.lam_a / base.lam_a).epsilon(1e-15));

  CouplingVector shifted = base;
  shifted.q_a = 0.7;
  shifted.q_b = -0.2;
  auto os = phi_pt(shifted, fc, mj, mj1, 9);
  CHECK(os.q_a - shifted.q_a == doctest::Approx(o1.q_a - base.q_a).epsilon(1e-13));
  CHECK(os.q_b - shifted.q_b == doctest::Approx(o1.q_b - base.q_b).epsilon(1e-13));
}

TEST_CASE("rescaled map fixes the origin and matches hand values") {
  auto dec = toy_decomposition();
  auto m1 = raw_moments(dec, 1, {0});
  auto m2 = raw_moments(dec, 2, {0}, true);
  auto fc = greek_coefficients(m1, m2, 1, 2);

  auto zero = phi_pt_bulk(BulkVector{}, fc, m1, m2);
  CHECK(zero.g == 0.0);
  CHECK(zero.mu == 0.0);
  CHECK(zero.z0 == 0.0);

  // g = 0, mu = 0.1: wbar_1 = 1/4, wbar_2 = 1/8, mu_+ = 0.4,
  // quadratic delta = 0.16/8 - 4 * 0.01/4 = 0.01
  BulkVector B;
  B.mu = 0.1;
  auto out = phi_pt_bulk(B, fc, m1, m2);
  CHECK(out.g == 0.0);
  CHECK(out.mu == doctest::Approx(0.39).epsilon(1e-14));
  // z0 row: -1/2 (0.16 * (1/256) - 0.01 * 0) = -1/3200
  CHECK(out.z0 == doctest::Approx(-3.125e-4).epsilon(1e-13));
}

TEST_CASE("rescaled map is the scale image of the full map") {
  RawMoments mj, mj1, mj2;
  synthetic_rows(mj, mj1, mj2);
  const int j = 2, L = 2;
  auto fc = greek_coefficients(mj, mj1, j, L);

  CouplingVector V{0.03, 0.02, 0.01, -0.015, 0, 0, 0, 0};
  auto full = phi_pt(V, fc, mj, mj1, 99);

  const double L2j = std::pow(L, 2.0 * j);
  BulkVector B{V.g, L2j * V.nu, V.y + V.z};
  auto bulk = phi_pt_bulk(B, fc, mj, mj1);

  CHECK(bulk.g == doctest::Approx(full.g).epsilon(1e-14));
  CHECK(bulk.mu == doctest::Approx(L2j * L * L * full.nu).epsilon(1e-12));

  // the z0 rows differ by exactly the reorganised cross term 2y delta[nu w^(1)]
  const double nu_plus = V.nu + fc.etap * V.g;
  const double d_nu_w1 = nu_plus * mj1.w1 - V.nu * mj.w1;
  CHECK(bulk.z0 - (full.y + full.z) ==
        doctest::Approx(-2.0 * V.y * d_nu_w1).epsilon(1e-10));
}

TEST_CASE("triangular recursion basics") {
  FlowCoefficients fc;
  fc.L = 2;
  fc.eta = 0.5;

  TransformedVector t{0.0, 0.3, 0.25};
  auto out = phibar(t, fc);
  CHECK(out.g == 0.0);
  CHECK(out.z == 0.3);
  CHECK(out.mu == doctest::Approx(1.0)); // L^2 mu, no source without g

  fc.beta = 1.0;
  TransformedVector s{0.1, 0.0, 0.0};
  CHECK(phibar(s, fc).g == doctest::Approx(0.09).epsilon(1e-15));
}

TEST_CASE("constant-coefficient recursion has the 1/(beta j) tail") {
  FlowCoefficients fc;
  fc.L = 2;
  fc.beta = std::log(2.0) / (M_PI * M_PI);
  TransformedVector t{0.1, 0.0, 0.0};
  for (int j = 0; j < 500; ++j) t = phibar(t, fc);
  const double product = t.g * fc.beta * 500.0;
  CHECK(product == doctest::Approx(0.776518).epsilon(1e-4)); // frozen from this iteration
  CHECK(product > 0.7);
  CHECK(product < 1.3);
}

TEST_CASE("quadratic change of variables: trivial cases") {
  FlowCoefficients fc;
  fc.wbar1 = 0.3;
  fc.wbarss = 0.7;

  auto zero = transform_T(BulkVector{}, fc);
  CHECK(zero.g == 0.0);
  CHECK(zero.z == 0.0);
  CHECK(zero.mu == 0.0);

  FlowCoefficients id; // wbar = 0
  BulkVector B{0.02, -0.04, 0.01};
  auto t = transform_T(B, id);
  CHECK(t.g == B.g);
  CHECK(t.z == B.z0);
  CHECK(t.mu == B.mu);
  auto back = invert_T(t, id);
  CHECK(back.g == B.g);
  CHECK(back.mu == B.mu);
  CHECK(back.z0 == B.z0);
}

TEST_CASE("quadratic change of variables: round trip on the ball") {
  FlowCoefficients fc;
  fc.wbar1 = 0.3;
  fc.wbarss = 0.7;
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int trial = 0; trial < 1000; ++trial) {
    BulkVector B{u(rng), u(rng), u(rng)};
    auto back = invert_T(transform_T(B, fc), fc);
    CHECK(std::fabs(back.g - B.g) <= 1e-12);
    CHECK(std::fabs(back.mu - B.mu) <= 1e-12);
    CHECK(std::fabs(back.z0 - B.z0) <= 1e-12);
  }
}

TEST_CASE("inverse transform rejects points outside the ball") {
  FlowCoefficients fc;
  fc.wbar1 = 1.0;
  CheckedVector c{0.01, 0.01, -0.3}; // discriminant 1 + 4 * (-0.3) < 0
  CHECK_THROWS_WITH_AS(invert_T(c, fc), "outside invertibility ball",
                       numeric_error);
}

TEST_CASE("conjugacy residual vanishes at the origin") {
  RawMoments mj, mj1, mj2;
  synthetic_rows(mj, mj1, mj2);
  auto fcj = greek_coefficients(mj, mj1, 2, 2);
  auto fcj1 = greek_coefficients(mj1, mj2, 3, 2);
  auto r = conjugacy_residual(BulkVector{}, fcj, fcj1, mj, mj1);
  CHECK(r.g == 0.0);
  CHECK(r.z == 0.0);
  CHECK(r.mu == 0.0);
}

TEST_CASE("conjugacy residual is cubic") {
  RawMoments mj, mj1, mj2;
  synthetic_rows(mj, mj1, mj2);
  auto fcj = greek_coefficients(mj, mj1, 2, 2);
  auto fcj1 = greek_coefficients(mj1, mj2, 3, 2);

  auto sup = [](const TransformedVector& r) {
    return std::max({std::fabs(r.g), std::fabs(r.z), std::fabs(r.mu)});
  };

  std::mt19937 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    double dx = n(rng), dy = n(rng), dz = n(rng);
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    dx /= len; dy /= len; dz /= len;
    double prev = 0;
    int k = 0;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      BulkVector B{dx * eps, dy * eps, dz * eps};
      auto r = conjugacy_residual(B, fcj, fcj1, mj, mj1);
      const double scaled = sup(r) / (eps * eps * eps);
      if (k++ > 0) {
        CHECK(scaled >= 0.5 * prev);
        CHECK(scaled <= 2.0 * prev);
      }
      prev = scaled;
    }
  }

  // single-coupling input scales cubically as well
  double prev = 0;
  int k = 0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    auto r = conjugacy_residual(BulkVector{eps, 0, 0}, fcj, fcj1, mj, mj1);
    const double scaled = sup(r) / (eps * eps * eps);
    if (k++ > 0) {
      CHECK(scaled >= 0.5 * prev);
      CHECK(scaled <= 2.0 * prev);
    }
    prev = scaled;
  }
}

TEST_CASE("trajectory of the zero vector is zero") {
  auto dec = toy_decomposition();
  auto tr = iterate_flow(CouplingVector{}, dec, 1, 2, {0});
  REQUIRE(tr.rows.size() == 2);
  for (const auto& row : tr.rows) {
    CHECK(row.V.g == 0.0);
    CHECK(row.V.nu == 0.0);
    CHECK(row.T.g == 0.0);
    CHECK(row.residual.g == 0.0);
    CHECK(row.residual.mu == 0.0);
  }
  CHECK(tr.gbar_monotone);
  CHECK(tr.gbar_comparable);
  CHECK(tr.bulk_gap_g == 0.0);
  CHECK(tr.bulk_gap_mu == 0.0);
  CHECK(tr.bulk_gap_z0 == 0.0);
}

TEST_CASE("trajectory scale range is validated") {
  auto dec = toy_decomposition();
  CHECK_THROWS_AS(iterate_flow(CouplingVector{}, dec, 0, 3, {0}), config_error);
  CHECK_THROWS_AS(iterate_flow(CouplingVector{}, dec, 2, 1, {0}), config_error);
}

TEST_CASE("runaway couplings abort the trajectory") {
  auto dec = toy_decomposition();
  CouplingVector V;
  V.g = 60.0; // beta = 4 at the toy scale, so g_pt < -10^3
  CHECK_THROWS_WITH_AS(iterate_flow(V, dec, 1, 1, {0}),
                       "flow left perturbative regime", numeric_error);
}

TEST_CASE("small-coupling trajectory stays tame") {
  auto spec = make_spec(4, 2, 5);
  auto dec = build_decomposition(spec, 0.0, default_window(), ZeroMode::omit);
  CouplingVector V0;
  V0.g = 0.05;
  auto tr = iterate_flow(V0, dec, 0, 4, {0, 0, 0, 0});
  REQUIRE(tr.rows.size() == 5);
  CHECK(tr.gbar_monotone);
  CHECK(tr.gbar_comparable);
  CHECK(tr.notes.empty());
  // both reorganised systems shadow the full one along the run
  CHECK(tr.bulk_gap_g <= 1e-13);
  CHECK(tr.bulk_gap_mu <= 1e-10);
  CHECK(tr.bulk_gap_z0 <= 1e-10);
  // frozen endpoint of this run
  CHECK(tr.rows.back().V.g == doctest::Approx(4.935504e-02).epsilon(1e-5));
  CHECK(tr.rows.back().V.nu == doctest::Approx(1.502935e-02).epsilon(1e-5));
}

TEST_CASE("observable charge activates at the coalescence scale") {
  auto spec = make_spec(4, 2, 5);
  auto dec = build_decomposition(spec, 0.0, default_window(), ZeroMode::omit);
  std::vector<long> offset{4, 0, 0, 0};
  REQUIRE(coalescence_scale(offset, 2) == 3);

  CouplingVector V0;
  V0.lam_a = 1;
  V0.lam_b = 1;
  auto tr = iterate_flow(V0, dec, 0, 4, offset);
  REQUIRE(tr.rows.size() == 5);

  // with a zero bulk start the lambda factor is exactly 1, so the charge
  // accumulates the crossing covariances scale by scale
  for (const auto& row : tr.rows) CHECK(row.V.lam_a == 1.0);

  double expected = 0;
  for (const auto& row : tr.rows) {
    CHECK(row.V.q_a == doctest::Approx(expected).epsilon(1e-12));
    CHECK(row.V.q_b == doctest::Approx(expected).epsilon(1e-12));
    auto m = raw_moments(dec, row.j, offset, row.j >= spec.N - 1);
    expected += m.Cab;
  }

  // negligible strictly before the coalescence scale, material right after
  for (const auto& row : tr.rows)
    if (row.j <= 3) CHECK(std::fabs(row.V.q_a) < 5e-5);
  CHECK(std::fabs(tr.rows.back().V.q_a) > 1e-4);
}
