#include "rg/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace rg {

namespace {

constexpr std::int64_t kMaxSites = std::int64_t(1) << 28;

std::vector<std::int64_t> strides(const TorusSpec& s) {
  std::vector<std::int64_t> st(s.d);
  std::int64_t acc = 1;
  for (int a = s.d - 1; a >= 0; --a) {
    st[a] = acc;
    acc *= s.M;
  }
  return st;
}

// Index of the site reached from idx by one step +/- along axis, with wraparound.
std::int64_t step(std::int64_t idx, int axis, int dir,
                  const std::vector<std::int64_t>& st, long M) {
  long xa = (idx / st[axis]) % M;
  long ya = xa + dir;
  if (ya >= M) ya -= M;
  if (ya < 0) ya += M;
  return idx + (ya - xa) * st[axis];
}

} // namespace

TorusSpec make_spec(int d, int L, int N) {
  if (d < 1) throw config_error("torus dimension must be >= 1");
  if (L < 2) throw config_error("torus base L must be >= 2");
  if (N < 1) throw config_error("torus depth N must be >= 1");
  TorusSpec s;
  s.d = d;
  s.L = L;
  s.N = N;
  long M = 1;
  for (int j = 0; j < N; ++j) {
    if (M > std::numeric_limits<long>::max() / L)
      throw config_error("torus side L^N overflows");
    M *= L;
  }
  s.M = M;
  std::int64_t sites = 1;
  for (int a = 0; a < d; ++a) {
    if (sites > kMaxSites / M) throw config_error("torus site count too large");
    sites *= M;
  }
  return s;
}

std::int64_t site_count(const TorusSpec& s) {
  std::int64_t n = 1;
  for (int a = 0; a < s.d; ++a) n *= s.M;
  return n;
}

Kernel zero_kernel(const TorusSpec& s) {
  Kernel k;
  k.spec = s;
  k.v.assign(static_cast<std::size_t>(site_count(s)), 0.0);
  return k;
}

Kernel delta_kernel(const TorusSpec& s, const std::vector<long>& x) {
  Kernel k = zero_kernel(s);
  k.at(index_of(s, x)) = 1.0;
  return k;
}

std::int64_t index_of(const TorusSpec& s, const std::vector<long>& x) {
  if (static_cast<int>(x.size()) != s.d)
    throw config_error("site multi-index has wrong dimension");
  auto st = strides(s);
  std::int64_t idx = 0;
  for (int a = 0; a < s.d; ++a) {
    long xa = x[a] % s.M;
    if (xa < 0) xa += s.M;
    idx += xa * st[a];
  }
  return idx;
}

std::vector<long> coords_of(const TorusSpec& s, std::int64_t idx) {
  std::vector<long> x(s.d);
  for (int a = s.d - 1; a >= 0; --a) {
    x[a] = idx % s.M;
    idx /= s.M;
  }
  return x;
}

long centered(long xi, long M) {
  xi %= M;
  if (xi < 0) xi += M;
  return (2 * xi <= M) ? xi : xi - M;
}

std::vector<double> laplacian_symbol(const TorusSpec& s) {
  const std::int64_t n = site_count(s);
  std::vector<double> sym(static_cast<std::size_t>(n));
  // 1-d profile reused across axes
  std::vector<double> axis(static_cast<std::size_t>(s.M));
  for (long k = 0; k < s.M; ++k) {
    double t = std::sin(M_PI * static_cast<double>(k) / static_cast<double>(s.M));
    axis[static_cast<std::size_t>(k)] = 4.0 * t * t;
  }
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t rem = i;
    double acc = 0;
    for (int a = s.d - 1; a >= 0; --a) {
      acc += axis[static_cast<std::size_t>(rem % s.M)];
      rem /= s.M;
    }
    sym[static_cast<std::size_t>(i)] = acc;
  }
  return sym;
}

std::vector<std::complex<double>> dft(const Kernel& k) {
  const std::int64_t n = site_count(k.spec);
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = k.v[static_cast<std::size_t>(i)];
  std::vector<int> dims(static_cast<std::size_t>(k.spec.d), static_cast<int>(k.spec.M));
  fftw_plan plan = fftw_plan_dft(
      k.spec.d, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return buf;
}

Kernel kernel_from_symbol(const TorusSpec& s, const std::vector<double>& symbol) {
  const std::int64_t n = site_count(s);
  if (static_cast<std::int64_t>(symbol.size()) != n)
    throw config_error("symbol array has wrong size");
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = symbol[static_cast<std::size_t>(i)];
  std::vector<int> dims(static_cast<std::size_t>(s.d), static_cast<int>(s.M));
  fftw_plan plan = fftw_plan_dft(
      s.d, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  Kernel k = zero_kernel(s);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i)
    k.v[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(i)].real() * scale;
  return k;
}

Kernel green_kernel(const TorusSpec& s, double m2, ZeroMode zm) {
  if (m2 < 0) throw config_error("negative mass squared");
  std::vector<double> sym = laplacian_symbol(s);
  if (m2 == 0) {
    if (zm != ZeroMode::omit)
      throw config_error("massless Green function undefined on torus");
    sym[0] = 0.0; // drop constant mode; all other lambda > 0
    for (std::size_t i = 1; i < sym.size(); ++i) sym[i] = 1.0 / sym[i];
  } else {
    for (auto& v : sym) v = 1.0 / (v + m2);
  }
  return kernel_from_symbol(s, sym);
}

Kernel convolve(const Kernel& a, const Kernel& b) {
  if (!(a.spec == b.spec)) throw config_error("convolve: mismatched tori");
  const std::int64_t n = site_count(a.spec);
  std::vector<int> dims(static_cast<std::size_t>(a.spec.d), static_cast<int>(a.spec.M));
  std::vector<std::complex<double>> fa(static_cast<std::size_t>(n)), fb(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    fa[static_cast<std::size_t>(i)] = a.v[static_cast<std::size_t>(i)];
    fb[static_cast<std::size_t>(i)] = b.v[static_cast<std::size_t>(i)];
  }
  fftw_plan pa = fftw_plan_dft(a.spec.d, dims.data(),
                               reinterpret_cast<fftw_complex*>(fa.data()),
                               reinterpret_cast<fftw_complex*>(fa.data()),
                               FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(pa);
  fftw_execute_dft(pa, reinterpret_cast<fftw_complex*>(fb.data()),
                   reinterpret_cast<fftw_complex*>(fb.data()));
  fftw_destroy_plan(pa);
  for (std::int64_t i = 0; i < n; ++i)
    fa[static_cast<std::size_t>(i)] *= fb[static_cast<std::size_t>(i)];
  fb.clear();
  fb.shrink_to_fit();
  fftw_plan pi = fftw_plan_dft(a.spec.d, dims.data(),
                               reinterpret_cast<fftw_complex*>(fa.data()),
                               reinterpret_cast<fftw_complex*>(fa.data()),
                               FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(pi);
  fftw_destroy_plan(pi);
  Kernel c = zero_kernel(a.spec);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i)
    c.v[static_cast<std::size_t>(i)] = fa[static_cast<std::size_t>(i)].real() * scale;
  return c;
}

Kernel convolve_brute(const Kernel& a, const Kernel& b) {
  if (!(a.spec == b.spec)) throw config_error("convolve: mismatched tori");
  const std::int64_t n = site_count(a.spec);
  if (n > 4096) throw config_error("brute-force convolution limited to 4096 sites");
  Kernel c = zero_kernel(a.spec);
  for (std::int64_t i = 0; i < n; ++i) {
    auto xi = coords_of(a.spec, i);
    for (std::int64_t j = 0; j < n; ++j) {
      auto xj = coords_of(a.spec, j);
      std::vector<long> diff(static_cast<std::size_t>(a.spec.d));
      for (int t = 0; t < a.spec.d; ++t) diff[static_cast<std::size_t>(t)] = xi[static_cast<std::size_t>(t)] - xj[static_cast<std::size_t>(t)];
      c.at(i) += a.at(j) * b.at(index_of(a.spec, diff));
    }
  }
  return c;
}

DiffOp forward_grad(int axis, int sign) {
  DiffOp op;
  op.kind = DiffOp::Kind::forward_grad;
  op.axis = axis;
  op.sign = sign;
  return op;
}

DiffOp laplacian() {
  DiffOp op;
  op.kind = DiffOp::Kind::laplacian;
  return op;
}

Kernel apply_difference(const Kernel& k, const DiffOp& op, LapSign conv) {
  const TorusSpec& s = k.spec;
  const std::int64_t n = site_count(s);
  auto st = strides(s);
  Kernel r = zero_kernel(s);
  if (op.kind == DiffOp::Kind::forward_grad) {
    if (op.axis < 0 || op.axis >= s.d) throw config_error("gradient axis out of range");
    if (op.sign != 1 && op.sign != -1) throw config_error("gradient sign must be +-1");
    for (std::int64_t i = 0; i < n; ++i)
      r.at(i) = k.at(step(i, op.axis, op.sign, st, s.M)) - k.at(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      double acc = 2.0 * s.d * k.at(i);
      for (int a = 0; a < s.d; ++a)
        acc -= k.at(step(i, a, +1, st, s.M)) + k.at(step(i, a, -1, st, s.M));
      r.at(i) = (conv == LapSign::positive_spectrum) ? acc : -acc;
    }
  }
  return r;
}

Moments moments(const Kernel& k) {
  Moments m;
  const std::int64_t n = site_count(k.spec);
  const std::int64_t st0 = n / k.spec.M; // stride of axis 0
  for (std::int64_t i = 0; i < n; ++i) {
    double q = k.at(i);
    m.q1 += q;
    m.q2 += q * q;
    m.q3 += q * q * q;
    long x0 = centered((i / st0) % k.spec.M, k.spec.M);
    m.qss += q * static_cast<double>(x0) * static_cast<double>(x0);
  }
  return m;
}

double moment_ss(const Kernel& k, int axis) {
  if (axis < 0 || axis >= k.spec.d) throw config_error("moment axis out of range");
  const std::int64_t n = site_count(k.spec);
  auto st = strides(k.spec);
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    long xa = centered((i / st[axis]) % k.spec.M, k.spec.M);
    acc += k.at(i) * static_cast<double>(xa) * static_cast<double>(xa);
  }
  return acc;
}

Kernel grad_square(const Kernel& k) {
  const TorusSpec& s = k.spec;
  const std::int64_t n = site_count(s);
  auto st = strides(s);
  Kernel r = zero_kernel(s);
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0;
    for (int a = 0; a < s.d; ++a) {
      double gp = k.at(step(i, a, +1, st, s.M)) - k.at(i);
      double gm = k.at(step(i, a, -1, st, s.M)) - k.at(i);
      acc += gp * gp + gm * gm;
    }
    r.at(i) = 0.5 * acc;
  }
  return r;
}

double parseval_mismatch(const Kernel& k) {
  const std::int64_t n = site_count(k.spec);
  double direct = 0;
  for (double q : k.v) direct += q * q;
  auto hat = dft(k);
  double spectral = 0;
  for (auto& c : hat) spectral += std::norm(c);
  spectral /= static_cast<double>(n);
  return std::abs(direct - spectral) / std::max(1.0, direct);
}

double evenness_defect(const Kernel& k) {
  const TorusSpec& s = k.spec;
  const std::int64_t n = site_count(s);
  double worst = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    auto x = coords_of(s, i);
    for (auto& xi : x) xi = -xi;
    double diff = std::abs(k.at(i) - k.at(index_of(s, x)));
    worst = std::max(worst, diff);
  }
  return worst;
}

void dump_kernel(const Kernel& k, double mass, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open kernel dump file: " + path);
  std::ostringstream header;
  header.precision(17);
  header << "RFK1 " << k.spec.d << " " << k.spec.L << " " << k.spec.N << " "
         << mass << "\n";
  out << header.str();
  out.write(reinterpret_cast<const char*>(k.v.data()),
            static_cast<std::streamsize>(k.v.size() * sizeof(double)));
  if (!out) throw numeric_error("kernel dump write failed: " + path);
}

Kernel load_kernel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open kernel dump file: " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic;
  int d = 0, L = 0, N = 0;
  double mass = 0;
  header >> magic >> d >> L >> N >> mass;
  if (magic != "RFK1" || header.fail())
    throw config_error("bad kernel dump header: " + path);
  Kernel k = zero_kernel(make_spec(d, L, N));
  in.read(reinterpret_cast<char*>(k.v.data()),
          static_cast<std::streamsize>(k.v.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(k.v.size() * sizeof(double)))
    throw config_error("kernel dump truncated: " + path);
  return k;
}

} // namespace rg
