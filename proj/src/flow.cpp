#include "rg/flow.hpp"

#include <cmath>

namespace rg {

CouplingVector phi_pt(const CouplingVector& V, const FlowCoefficients& fc,
                      const RawMoments& mj, const RawMoments& mj1, int j_ab) {
  const double g = V.g, nu = V.nu, y = V.y, z = V.z;
  const double nu_plus = nu + fc.etap * g;

  const double d_nu_w1 = nu_plus * mj1.w1 - nu * mj.w1;
  const double d_nu2_w1 = nu_plus * nu_plus * mj1.w1 - nu * nu * mj.w1;
  const double d_nu2_wss = nu_plus * nu_plus * mj1.wss - nu * nu * mj.wss;
  const double d_nu_w2ss = nu_plus * mj1.w2ss - nu * mj.w2ss;

  CouplingVector out;
  out.g = g - fc.beta * g * g - 4.0 * g * d_nu_w1;
  out.nu = nu + fc.etap * (g + 4.0 * g * nu * mj.w1) - fc.xip * g * g -
           0.25 * fc.beta * g * nu - fc.pip * g * (z + y) - d_nu2_w1;
  out.y = y + fc.sigma * g * z - fc.zeta * g * y - g * d_nu_w2ss;
  out.z = z - fc.theta * g * g - 0.5 * d_nu2_wss - 2.0 * z * d_nu_w1 -
          (out.y - y);

  const double lam_factor = (fc.j + 1 < j_ab) ? (1.0 - d_nu_w1) : 1.0;
  out.lam_a = lam_factor * V.lam_a;
  out.lam_b = lam_factor * V.lam_b;
  out.q_a = V.q_a + V.lam_a * V.lam_b * mj.Cab;
  out.q_b = V.q_b + V.lam_a * V.lam_b * mj.Cab;
  return out;
}

BulkVector phi_pt_bulk(const BulkVector& B, const FlowCoefficients& fc,
                       const RawMoments& mj, const RawMoments& mj1) {
  const double L2 = static_cast<double>(fc.L) * fc.L;
  const double Lj2 = std::pow(L2, fc.j);
  const double wb1 = mj.w1 / Lj2;
  const double wb1p = mj1.w1 / (Lj2 * L2);
  const double wbss = mj.wss / (Lj2 * Lj2);
  const double wbssp = mj1.wss / (Lj2 * Lj2 * L2 * L2);

  const double g = B.g, mu = B.mu, z0 = B.z0;
  const double mu_plus = L2 * mu + fc.eta * g;

  const double d_mu_w1 = mu_plus * wb1p - mu * wb1;
  // The quadratic delta in the mu row carries an L^2 weight on the
  // current-scale term: it is the rescaling by L^{2(j+1)} of the
  // unnormalised delta[nu^2 w^(1)], and the weight is exactly what makes
  // the T-conjugacy residual cubic rather than quadratic.
  const double d_mu2_w1 = mu_plus * mu_plus * wb1p - L2 * mu * mu * wb1;
  const double d_mu2_wss = mu_plus * mu_plus * wbssp - mu * mu * wbss;

  BulkVector out;
  out.g = g - fc.beta * g * g - 4.0 * g * d_mu_w1;
  out.mu = L2 * mu + fc.eta * (g + 4.0 * g * mu * wb1) - fc.xi * g * g -
           fc.omega * g * mu - fc.pi * g * z0 - d_mu2_w1;
  out.z0 = z0 - fc.theta * g * g - 0.5 * d_mu2_wss - 2.0 * z0 * d_mu_w1;
  return out;
}

TransformedVector phibar(const TransformedVector& t, const FlowCoefficients& fc) {
  const double L2 = static_cast<double>(fc.L) * fc.L;
  TransformedVector out;
  out.g = t.g - fc.beta * t.g * t.g;
  out.z = t.z - fc.theta * t.g * t.g;
  out.mu = L2 * t.mu + fc.eta * t.g - fc.xi * t.g * t.g -
           fc.omega * t.g * t.mu - fc.pi * t.g * t.z;
  return out;
}

CheckedVector transform_T(const BulkVector& B, const FlowCoefficients& fc) {
  CheckedVector out;
  out.g = B.g + 4.0 * B.g * B.mu * fc.wbar1;
  out.z = B.z0 + 2.0 * B.z0 * B.mu * fc.wbar1 + 0.5 * B.mu * B.mu * fc.wbarss;
  out.mu = B.mu + B.mu * B.mu * fc.wbar1;
  return out;
}

BulkVector invert_T(const CheckedVector& c, const FlowCoefficients& fc,
                    double denom_eps) {
  const double disc = 1.0 + 4.0 * fc.wbar1 * c.mu;
  if (disc <= 0) throw numeric_error("outside invertibility ball");
  BulkVector out;
  out.mu = 2.0 * c.mu / (1.0 + std::sqrt(disc));
  const double den_g = 1.0 + 4.0 * out.mu * fc.wbar1;
  const double den_z = 1.0 + 2.0 * out.mu * fc.wbar1;
  if (std::abs(den_g) < denom_eps || std::abs(den_z) < denom_eps)
    throw numeric_error("outside invertibility ball");
  out.g = c.g / den_g;
  out.z0 = (c.z - 0.5 * out.mu * out.mu * fc.wbarss) / den_z;
  return out;
}

TransformedVector conjugacy_residual(const BulkVector& B,
                                     const FlowCoefficients& fc_j,
                                     const FlowCoefficients& fc_j1,
                                     const RawMoments& mj,
                                     const RawMoments& mj1) {
  BulkVector fwd = phi_pt_bulk(B, fc_j, mj, mj1);
  CheckedVector lhs = transform_T(fwd, fc_j1);
  CheckedVector rhs = phibar(transform_T(B, fc_j), fc_j);
  return {lhs.g - rhs.g, lhs.z - rhs.z, lhs.mu - rhs.mu};
}

Trajectory iterate_flow(const CouplingVector& V0, const ScaleDecomposition& dec,
                        int j_begin, int j_end,
                        const std::vector<long>& a_b_offset, int j_ab,
                        double divergence_threshold) {
  const int N = dec.spec.N;
  if (j_begin < 0 || j_end > N - 1 || j_begin > j_end)
    throw config_error("flow scale range out of bounds");
  if (j_ab < 0) j_ab = coalescence_scale(a_b_offset, dec.spec.L);

  std::vector<RawMoments> raws;
  for (int j = j_begin; j <= j_end + 1; ++j)
    raws.push_back(raw_moments(dec, j, a_b_offset, /*last_scale=*/j >= N - 1));
  std::vector<FlowCoefficients> fcs;
  for (int j = j_begin; j <= j_end; ++j)
    fcs.push_back(greek_coefficients(raws[static_cast<std::size_t>(j - j_begin)],
                                     raws[static_cast<std::size_t>(j - j_begin) + 1],
                                     j, dec.spec.L));

  Trajectory tr;
  CouplingVector V = V0;
  for (int j = j_begin; j <= j_end; ++j) {
    const std::size_t i = static_cast<std::size_t>(j - j_begin);
    TrajectoryRow row;
    row.j = j;
    row.V = V;
    row.B.g = V.g;
    row.B.mu = std::pow(static_cast<double>(dec.spec.L), 2.0 * j) * V.nu;
    row.B.z0 = V.y + V.z;
    row.T = transform_T(row.B, fcs[i]);
    if (j < j_end)
      row.residual = conjugacy_residual(row.B, fcs[i], fcs[i + 1], raws[i], raws[i + 1]);
    tr.rows.push_back(row);

    CouplingVector next = phi_pt(V, fcs[i], raws[i], raws[i + 1], j_ab);
    for (double c : {next.g, next.nu, next.y, next.z, next.lam_a, next.lam_b,
                     next.q_a, next.q_b})
      if (!(std::abs(c) <= divergence_threshold))
        throw numeric_error("flow left perturbative regime");

    // gap between the full-system image and the rescaled system
    BulkVector bulk = phi_pt_bulk(row.B, fcs[i], raws[i], raws[i + 1]);
    double mu_next =
        std::pow(static_cast<double>(dec.spec.L), 2.0 * (j + 1)) * next.nu;
    tr.bulk_gap_g = std::max(tr.bulk_gap_g, std::abs(bulk.g - next.g));
    tr.bulk_gap_mu = std::max(tr.bulk_gap_mu, std::abs(bulk.mu - mu_next));
    tr.bulk_gap_z0 = std::max(tr.bulk_gap_z0, std::abs(bulk.z0 - (next.y + next.z)));
    V = next;
  }

  for (std::size_t i = 1; i < tr.rows.size(); ++i) {
    double prev = tr.rows[i - 1].T.g, cur = tr.rows[i].T.g;
    if (cur > prev + 1e-15) tr.gbar_monotone = false;
    if (!(0.5 * cur <= prev + 1e-15 && prev <= 2.0 * cur + 1e-15))
      tr.gbar_comparable = false;
  }
  if (!tr.gbar_monotone) tr.notes.push_back("gbar not monotone");
  if (!tr.gbar_comparable) tr.notes.push_back("gbar comparability violated");
  return tr;
}

} // namespace rg
