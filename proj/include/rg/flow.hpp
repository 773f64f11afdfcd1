#pragma once
#include <string>
#include <vector>

#include "rg/coeffs.hpp"

namespace rg {

// Full coupling vector: bulk (g, nu, y, z) plus observable couplings.
struct CouplingVector {
  double g = 0, nu = 0, y = 0, z = 0;
  double lam_a = 0, lam_b = 0, q_a = 0, q_b = 0;
};

// Rescaled bulk coordinates at scale j: mu = L^{2j} nu, z0 = y + z.
struct BulkVector {
  double g = 0, mu = 0, z0 = 0;
};

// Coordinates after the quadratic change of variables T_j; the same shape
// serves for the checked (T-image) and barred (iterated) vectors.
struct TransformedVector {
  double g = 0, z = 0, mu = 0;
};
using CheckedVector = TransformedVector;

// One renormalisation step on the full system, exactly second order.
CouplingVector phi_pt(const CouplingVector& V, const FlowCoefficients& fc,
                      const RawMoments& mj, const RawMoments& mj1, int j_ab);

// The rescaled three-coupling system; differs from the full system by
// O(1)-reorganised cross terms (reported elsewhere, not reconciled).
BulkVector phi_pt_bulk(const BulkVector& B, const FlowCoefficients& fc,
                       const RawMoments& mj, const RawMoments& mj1);

// Triangular second-order flow in the transformed coordinates.
TransformedVector phibar(const TransformedVector& t, const FlowCoefficients& fc);

CheckedVector transform_T(const BulkVector& B, const FlowCoefficients& fc);
// Closed-form inverse on the invertibility ball; throws numeric_error outside.
BulkVector invert_T(const CheckedVector& c, const FlowCoefficients& fc,
                    double denom_eps = 1e-8);

// T_{j+1}(phi_pt_bulk(B)) - phibar_j(T_j(B)); cubic in |B|.
TransformedVector conjugacy_residual(const BulkVector& B,
                                     const FlowCoefficients& fc_j,
                                     const FlowCoefficients& fc_j1,
                                     const RawMoments& mj,
                                     const RawMoments& mj1);

struct TrajectoryRow {
  int j = 0;
  CouplingVector V;
  BulkVector B;
  CheckedVector T;
  TransformedVector residual;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  bool gbar_monotone = true;   // gbar non-increasing along the run
  bool gbar_comparable = true; // 1/2 gbar_{j+1} <= gbar_j <= 2 gbar_{j+1}
  // largest gap between the full-system image and the rescaled system
  double bulk_gap_g = 0, bulk_gap_mu = 0, bulk_gap_z0 = 0;
  std::vector<std::string> notes;
};

Trajectory iterate_flow(const CouplingVector& V0, const ScaleDecomposition& dec,
                        int j_begin, int j_end,
                        const std::vector<long>& a_b_offset, int j_ab = -1,
                        double divergence_threshold = 1e3);

} // namespace rg
