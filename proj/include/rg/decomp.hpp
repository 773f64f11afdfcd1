#pragma once
#include <string>
#include <vector>

#include "rg/lattice.hpp"

namespace rg {

// Smooth nonnegative bump rho on [tmin, tmax] with integral 1, tabulated
// numerically. Family "bump": rho(t) ~ exp(-shape / (1 - s^2)) with
// s = (2t - (tmin+tmax)) / (tmax - tmin).
struct WindowProfile {
  std::string family = "bump";
  double tmin = 8.0;
  double tmax = 16.0;
  double shape = 0.5;
  int grid = 1 << 14;
  std::vector<double> cdf_table; // cumulative mass at tmin + i*h, normalised
  double norm_ = 1.0;            // quadrature mass of the unnormalised bump

  double rho(double t) const;
  double cdf(double u) const; // clamped to [0,1] outside the support
};

WindowProfile make_window(double tmin, double tmax, double shape,
                          int grid = 1 << 14, const std::string& family = "bump");
WindowProfile default_window();

// Mass assigned to scale j at lattice frequency u = sqrt(lambda):
// scale 1 takes everything below L*u, scale j >= 2 the band
// [L^{j-1} u, L^j u).
double slice_weight(const WindowProfile& w, int j, int L, double u);

struct ScaleDecomposition {
  TorusSpec spec;
  double m2 = 0;
  WindowProfile window;
  LapSign signflag = LapSign::positive_spectrum;
  ZeroMode zeromode = ZeroMode::unset;
  std::vector<Kernel> slices; // C_1 .. C_{N-1}
  Kernel remainder;           // C_{N,N}
  std::vector<Kernel> wsum;   // w_0 .. w_{N-1}, w_j = sum_{i<=j} C_i
  std::vector<bool> empty_slice;
  std::vector<std::string> warnings;

  const Kernel& slice(int j) const; // 1 <= j <= N, j = N is the remainder
  const Kernel& w(int j) const;     // 0 <= j <= N-1
  Kernel w_full() const;            // w_{N-1} + remainder
};

ScaleDecomposition build_decomposition(const TorusSpec& spec, double m2,
                                       const WindowProfile& window,
                                       ZeroMode zm = ZeroMode::unset);

struct RangeReport {
  int j = 0;
  double outside_max = 0; // max |C_j(x)| over 2|x|_inf >= L^j
  double peak = 0;        // |C_j(0)|
  double ratio = 0;
};
RangeReport range_profile(const ScaleDecomposition& dec, int j);

struct EstimateRow {
  int j = 0;
  int order = 0;   // number of forward differences applied (axis 0)
  double sup = 0;  // |grad^order C_j|_inf
  double cj = 0;   // sup * (1 + m2 L^{2(j-1)})^k * L^{(j-1)(2 + order)}
};
struct EstimateReport {
  std::vector<EstimateRow> rows;
  std::vector<double> raw_peaks; // |C_j(0)| for j = 1..N-1
};
EstimateReport verify_estimates(const ScaleDecomposition& dec, int p, int k);

} // namespace rg
