#pragma once
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "rg/errors.hpp"

namespace rg {

// Discrete torus (Z/MZ)^d with M = L^N.
struct TorusSpec {
  int d = 0;
  int L = 0;
  int N = 0;
  long M = 0; // L^N, cached

  bool operator==(const TorusSpec&) const = default;
};

TorusSpec make_spec(int d, int L, int N);
std::int64_t site_count(const TorusSpec& s);

// Scalar kernel on the torus, row-major over {0,...,M-1}^d.
struct Kernel {
  TorusSpec spec;
  std::vector<double> v;

  double& at(std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }
};

Kernel zero_kernel(const TorusSpec& s);
// Point mass at x (multi-index, one entry per dimension, reduced mod M).
Kernel delta_kernel(const TorusSpec& s, const std::vector<long>& x);

std::int64_t index_of(const TorusSpec& s, const std::vector<long>& x);
std::vector<long> coords_of(const TorusSpec& s, std::int64_t idx);

// Centered representative of xi in (-M/2, M/2]; for even M the boundary
// point M/2 goes to the positive side.
long centered(long xi, long M);

// Sign convention for the discrete Laplacian.
//   positive_spectrum: (D f)(x) = 2d f(x) - sum_e f(x+e); Fourier symbol
//     lambda(k) = sum_i 4 sin^2(pi k_i / M) >= 0, and D x1^2 = -2.
//   literal: the negative of the above (nearest-neighbour second
//     difference), Fourier symbol -lambda.
enum class LapSign { positive_spectrum, literal };

// Policy for the k = 0 Fourier mode of the massless Green function.
enum class ZeroMode { unset, omit };

// lambda(k) for every lattice momentum, indexed like a kernel.
std::vector<double> laplacian_symbol(const TorusSpec& s);

// Green function of D + m^2: inverse Fourier transform of 1/(lambda + m^2).
// m2 == 0 requires ZeroMode::omit (drop the constant mode) and yields the
// zero-average Green function; otherwise throws config_error.
Kernel green_kernel(const TorusSpec& s, double m2, ZeroMode zm = ZeroMode::unset);

Kernel convolve(const Kernel& a, const Kernel& b);
// O(M^2d) reference used to validate convolve on small tori.
Kernel convolve_brute(const Kernel& a, const Kernel& b);

struct DiffOp {
  enum class Kind { forward_grad, laplacian } kind;
  int axis = 0; // forward_grad only
  int sign = +1; // forward_grad only: step +e or -e along axis
};
DiffOp forward_grad(int axis, int sign = +1);
DiffOp laplacian();

Kernel apply_difference(const Kernel& k, const DiffOp& op,
                        LapSign conv = LapSign::positive_spectrum);

// First three plain moments and the centered second moment along axis 0:
//   q1 = sum q, q2 = sum q^2, q3 = sum q^3, qss = sum q(x) x1^2.
struct Moments {
  double q1 = 0, q2 = 0, q3 = 0, qss = 0;
};
Moments moments(const Kernel& k);
double moment_ss(const Kernel& k, int axis);

// Pointwise (1/2) sum_{e in U} (grad^e k)^2, U = all 2d unit steps.
Kernel grad_square(const Kernel& k);

// |sum k^2 - (1/M^d) sum |k_hat|^2| / max(1, sum k^2)
double parseval_mismatch(const Kernel& k);
// max_x |k(x) - k(-x)| (absolute, not scaled)
double evenness_defect(const Kernel& k);

// Full complex DFT (forward, unnormalised) and inverse (normalised 1/M^d).
std::vector<std::complex<double>> dft(const Kernel& k);
Kernel kernel_from_symbol(const TorusSpec& s, const std::vector<double>& symbol);

// Binary dump: one text header line "RFK1 d L N mass\n" followed by M^d
// little-endian float64 in row-major site order.
void dump_kernel(const Kernel& k, double mass, const std::string& path);
Kernel load_kernel(const std::string& path);

} // namespace rg
