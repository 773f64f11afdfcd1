#pragma once
#include <vector>

#include "rg/decomp.hpp"

namespace rg {

// Scalar summaries of w_j and the next slice that the flow equations consume.
// Naming: w1 = sum w, w2 = sum w^2, w3 = sum w^3, wss = sum w(x) x1^2,
// w2ss/w3ss the x1^2-weighted powers, wdw* built from w * (D w) with D the
// positive-spectrum laplacian, gwss the x1^2-weighted gradient square.
struct RawMoments {
  int j = 0;
  double w1 = 0, w2 = 0, w3 = 0;
  double wss = 0, w2ss = 0, w3ss = 0;
  double wdw1 = 0, wdwss = 0, gwss = 0;
  double C00 = 0;  // next slice at 0
  double Cab = 0;  // next slice at the designated offset
  bool has_C = true;
};

// j in 0..N-2 uses the regular slice C_{j+1}. With last_scale, j = N-1 uses
// the remainder as the next slice, and j = N uses w_{N-1} + remainder with
// no next slice at all.
RawMoments raw_moments(const ScaleDecomposition& dec, int j,
                       const std::vector<long>& a_b_offset,
                       bool last_scale = false);

struct FlowCoefficients {
  int j = 0;
  int L = 0;
  // greek coefficients
  double beta = 0, theta = 0, etap = 0, xip = 0, pip = 0, sigma = 0, zeta = 0;
  // the deltas they are built from
  double d_w2 = 0, d_w3 = 0, d_w3ss = 0, d_wdw1 = 0, d_wdwss = 0, d_gwss = 0,
         d_w2ss = 0;
  // normalised counterparts
  double omega = 0, eta = 0, xi = 0, pi = 0;
  double wbar1 = 0, wbarss = 0;
};

FlowCoefficients greek_coefficients(const RawMoments& mj, const RawMoments& mj1,
                                    int j, int L);

// Scale markers; INT sentinel for "infinite".
constexpr int kScaleInf = 1 << 30;
struct ScalePair {
  int j_m = kScaleInf;
  int j_Omega = kScaleInf;
};
ScalePair scales(double m2, int L, const std::vector<double>& beta_seq,
                 double Omega);

struct AssumptionReport {
  int a1_count = 0; // scales j <= j_Omega with beta_j < c
  double a2_theta = 0, a2_eta = 0, a2_xi = 0, a2_omega = 0, a2_pi = 0;
};
AssumptionReport check_assumptions(const std::vector<FlowCoefficients>& seq,
                                   int j_Omega, double Omega, double c);

struct BetaLimit {
  std::vector<double> beta; // j = 0..N-2
  std::vector<int> usable;  // scales where both adjoining slices are populated
  double extrapolated = 0;
  double reference = 0; // log L / pi^2
};
BetaLimit beta_limit(const ScaleDecomposition& dec);

int coalescence_scale(const std::vector<long>& a_b_offset, int L);

} // namespace rg
