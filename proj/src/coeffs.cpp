#include "rg/coeffs.hpp"

#include <algorithm>
#include <cmath>

namespace rg {

RawMoments raw_moments(const ScaleDecomposition& dec, int j,
                       const std::vector<long>& a_b_offset, bool last_scale) {
  const int N = dec.spec.N;
  const int jmax = last_scale ? N : N - 2;
  if (j < 0 || j > jmax) throw config_error("moment scale out of range");

  RawMoments m;
  m.j = j;
  Kernel w = (j <= N - 1) ? dec.w(j) : dec.w_full();

  const std::int64_t n = site_count(dec.spec);
  const std::int64_t st0 = n / dec.spec.M;
  Kernel dw = apply_difference(w, laplacian(), LapSign::positive_spectrum);
  for (std::int64_t i = 0; i < n; ++i) {
    double q = w.at(i);
    long x0 = centered((i / st0) % dec.spec.M, dec.spec.M);
    double xx = static_cast<double>(x0) * static_cast<double>(x0);
    m.w1 += q;
    m.w2 += q * q;
    m.w3 += q * q * q;
    m.wss += q * xx;
    m.w2ss += q * q * xx;
    m.w3ss += q * q * q * xx;
    m.wdw1 += q * dw.at(i);
    m.wdwss += q * dw.at(i) * xx;
  }
  m.gwss = moment_ss(grad_square(w), 0);

  if (j <= N - 1) {
    const Kernel& c = dec.slice(j + 1); // remainder when j = N-1
    m.C00 = c.at(0);
    m.Cab = c.at(index_of(dec.spec, a_b_offset));
  } else {
    m.has_C = false;
  }
  return m;
}

FlowCoefficients greek_coefficients(const RawMoments& mj, const RawMoments& mj1,
                                    int j, int L) {
  FlowCoefficients fc;
  fc.j = j;
  fc.L = L;
  fc.d_w2 = mj1.w2 - mj.w2;
  fc.d_w3 = mj1.w3 - mj.w3;
  fc.d_w3ss = mj1.w3ss - mj.w3ss;
  fc.d_wdw1 = mj1.wdw1 - mj.wdw1;
  fc.d_wdwss = mj1.wdwss - mj.wdwss;
  fc.d_gwss = mj1.gwss - mj.gwss;
  fc.d_w2ss = mj1.w2ss - mj.w2ss;

  fc.beta = 8.0 * fc.d_w2;
  fc.theta = 2.0 * fc.d_w3ss;
  fc.etap = 2.0 * mj.C00;
  fc.xip = 4.0 * (fc.d_w3 - 3.0 * mj.w2 * mj.C00) + 0.25 * fc.beta * fc.etap;
  fc.pip = 2.0 * fc.d_wdw1;
  fc.sigma = fc.d_wdwss;
  fc.zeta = fc.d_gwss;

  const double L2 = static_cast<double>(L) * L;
  const double Lj2 = std::pow(L2, j);        // L^{2j}
  const double Lj12 = Lj2 * L2;              // L^{2(j+1)}
  fc.omega = L2 * fc.beta / 4.0;
  fc.eta = Lj12 * fc.etap;
  fc.xi = Lj12 * fc.xip;
  fc.pi = Lj12 * fc.pip;
  fc.wbar1 = mj.w1 / Lj2;
  fc.wbarss = mj.wss / (Lj2 * Lj2);
  return fc;
}

ScalePair scales(double m2, int L, const std::vector<double>& beta_seq,
                 double Omega) {
  if (!(Omega > 1)) throw config_error("Omega must be > 1");
  ScalePair sp;
  if (m2 < 0) throw config_error("negative mass squared");
  if (m2 > 0) {
    double x = -std::log(m2) / (2.0 * std::log(static_cast<double>(L)));
    sp.j_m = static_cast<int>(std::floor(x + 1e-12));
  }
  if (beta_seq.empty()) return sp;
  double sup = 0;
  for (double b : beta_seq) sup = std::max(sup, std::abs(b));
  if (sup == 0) {
    sp.j_Omega = 0;
    return sp;
  }
  const int J = static_cast<int>(beta_seq.size());
  for (int k = 0; k < J; ++k) {
    bool ok = true;
    for (int j = 0; j < J && ok; ++j)
      ok = std::abs(beta_seq[static_cast<std::size_t>(j)]) <=
           std::pow(Omega, -static_cast<double>(j - k)) * sup * (1 + 1e-12);
    if (ok) {
      sp.j_Omega = k;
      return sp;
    }
  }
  return sp;
}

AssumptionReport check_assumptions(const std::vector<FlowCoefficients>& seq,
                                   int j_Omega, double Omega, double c) {
  AssumptionReport rep;
  for (const auto& fc : seq) {
    if (fc.j <= j_Omega && fc.beta < c) ++rep.a1_count;
    double amp = std::pow(Omega, std::max(0, fc.j - j_Omega));
    rep.a2_theta = std::max(rep.a2_theta, std::abs(fc.theta) * amp);
    rep.a2_eta = std::max(rep.a2_eta, std::abs(fc.eta) * amp);
    rep.a2_xi = std::max(rep.a2_xi, std::abs(fc.xi) * amp);
    rep.a2_omega = std::max(rep.a2_omega, std::abs(fc.omega) * amp);
    rep.a2_pi = std::max(rep.a2_pi, std::abs(fc.pi) * amp);
  }
  return rep;
}

BetaLimit beta_limit(const ScaleDecomposition& dec) {
  if (dec.m2 != 0) throw config_error("beta limit only meaningful at zero mass");
  const int N = dec.spec.N;
  BetaLimit out;
  out.reference = std::log(static_cast<double>(dec.spec.L)) / (M_PI * M_PI);

  std::vector<long> origin(static_cast<std::size_t>(dec.spec.d), 0);
  std::vector<RawMoments> raws;
  for (int j = 0; j <= N - 1; ++j)
    raws.push_back(raw_moments(dec, j, origin, /*last_scale=*/j == N - 1));
  for (int j = 0; j <= N - 2; ++j)
    out.beta.push_back(8.0 * (raws[static_cast<std::size_t>(j) + 1].w2 -
                              raws[static_cast<std::size_t>(j)].w2));

  // a scale is usable when the adjacent slices both received window mass
  for (int j = 1; j <= N - 2; ++j)
    if (!dec.empty_slice[static_cast<std::size_t>(j) - 1] &&
        !dec.empty_slice[static_cast<std::size_t>(j)])
      out.usable.push_back(j);
  if (out.usable.size() < 3)
    throw numeric_error("fewer than 3 usable scales for beta extrapolation");

  // lattice corrections decay like L^{-2j}: two-point elimination at that rate
  int j2 = out.usable.back();
  int j1 = out.usable[out.usable.size() - 2];
  double L2 = static_cast<double>(dec.spec.L) * dec.spec.L;
  out.extrapolated = (L2 * out.beta[static_cast<std::size_t>(j2)] -
                      out.beta[static_cast<std::size_t>(j1)]) /
                     (L2 - 1.0);
  return out;
}

int coalescence_scale(const std::vector<long>& a_b_offset, int L) {
  double dist2 = 0;
  for (long x : a_b_offset) dist2 += static_cast<double>(x) * x;
  double dist = std::sqrt(dist2);
  if (dist <= 0) return 0;
  double v = std::log(2.0 * dist) / std::log(static_cast<double>(L));
  return static_cast<int>(std::floor(v + 1e-12));
}

} // namespace rg
