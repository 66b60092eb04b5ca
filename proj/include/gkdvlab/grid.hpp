#pragma once
/// \file grid.hpp
/// Periodic pseudospectral toolkit: uniform grid, spectral calculus,
/// dealiased powers, quadrature, norms, trigonometric interpolation,
/// and columnar field serialization.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gkdvlab {

using Vec = Eigen::ArrayXd;
using CVec = Eigen::VectorXcd;

/// Uniform periodic grid on [-L/2, L/2) with nodes x_i = -L/2 + i L / N.
/// Quadrature weight is exactly L/N at every node; wavenumbers are
/// multiples of 2 pi / L with magnitude at most pi N / L.
struct Grid {
  double L = 0;
  int N = 0;

  double spacing() const { return L / N; }
  double node(int i) const { return -L / 2 + spacing() * i; }
  Vec nodes() const {
    Vec x(N);
    for (int i = 0; i < N; ++i) x[i] = node(i);
    return x;
  }
  /// Signed wavenumber of spectral bin j (0 <= j < N).
  double wavenumber(int j) const {
    const int m = (j <= N / 2) ? j : j - N;
    return 2 * std::numbers::pi / L * m;
  }
  bool operator==(const Grid&) const = default;
};

/// Real-valued samples of a function at every node of a grid.
struct Field {
  Grid grid;
  Vec v;
};

/// Checked grid constructor.
inline Grid make_grid(double L, int N) {
  if (L <= 0) throw std::invalid_argument("box length must be positive");
  if (N % 2 != 0) throw std::invalid_argument("N must be even");
  if (N < 16) throw std::invalid_argument("N must be at least 16");
  return Grid{L, N};
}

/// Checked field constructor: size must match and samples must be finite.
inline Field make_field(const Grid& grid, Vec values) {
  if (values.size() != grid.N)
    throw std::invalid_argument("sample count does not match grid");
  if (!values.isFinite().all())
    throw std::invalid_argument("field samples must be finite");
  return Field{grid, std::move(values)};
}

/// Samples a callable at every node.
template <class F>
Field sample(const Grid& grid, F&& f) {
  Vec v(grid.N);
  for (int i = 0; i < grid.N; ++i) v[i] = f(grid.node(i));
  return Field{grid, std::move(v)};
}

inline void require_same_grid(const Field& f, const Field& g) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("grid mismatch");
}

/// Quadrature inner product (L/N) sum_i f_i g_i.
inline double inner_product(const Field& f, const Field& g) {
  require_same_grid(f, g);
  return f.grid.spacing() * (f.v * g.v).sum();
}

/// Quadrature integral (L/N) sum_i f_i.
inline double integral(const Field& f) {
  return f.grid.spacing() * f.v.sum();
}

inline double l2_norm(const Field& f) {
  return std::sqrt(inner_product(f, f));
}

inline double sup_norm(const Field& f) {
  return f.v.size() == 0 ? 0.0 : f.v.abs().maxCoeff();
}

/// ((L/N) sum |f_i|^p)^(1/p); p may be +infinity (sup norm).
inline double lp_norm(const Field& f, double p) {
  if (p < 1) throw std::invalid_argument("p must be at least 1");
  if (std::isinf(p)) return sup_norm(f);
  return std::pow(f.grid.spacing() * f.v.abs().pow(p).sum(), 1.0 / p);
}

namespace detail {

/// Shared transform engine (plans are cached per size inside the object).
inline Eigen::FFT<double>& fft_engine() {
  static thread_local Eigen::FFT<double> engine;
  return engine;
}

}  // namespace detail

/// Full complex spectrum X_j = sum_n f_n exp(-2 pi i j n / N) (unscaled).
inline CVec spectrum(const Field& f) {
  CVec in(f.grid.N), out;
  for (int i = 0; i < f.grid.N; ++i) in[i] = f.v[i];
  detail::fft_engine().fwd(out, in);
  return out;
}

/// Inverse of spectrum(): real part of the scaled inverse transform.
inline Field from_spectrum(const Grid& grid, const CVec& spec) {
  if (spec.size() != grid.N)
    throw std::invalid_argument("spectrum size does not match grid");
  CVec out;
  detail::fft_engine().inv(out, spec);
  Vec v(grid.N);
  for (int i = 0; i < grid.N; ++i) v[i] = out[i].real();
  return Field{grid, std::move(v)};
}

/// Spectral derivative of order 1, 2, or 3: multiply by (ik)^order.
/// Odd orders have no consistent sign at the Nyquist bin, which is zeroed;
/// even orders keep the full k^2 symbol there.
inline Field derivative(const Field& f, int order = 1) {
  if (order < 1 || order > 3)
    throw std::invalid_argument("derivative order must be 1, 2, or 3");
  CVec spec = spectrum(f);
  const int N = f.grid.N;
  for (int j = 0; j < N; ++j) {
    const double k = f.grid.wavenumber(j);
    std::complex<double> symbol;
    switch (order) {
      case 1: symbol = {0.0, k}; break;
      case 2: symbol = {-k * k, 0.0}; break;
      default: symbol = {0.0, -k * k * k}; break;
    }
    if (order % 2 == 1 && j == N / 2) symbol = 0.0;
    spec[j] *= symbol;
  }
  return from_spectrum(f.grid, spec);
}

/// (||f||_2^2 + ||f_x||_2^2)^(1/2) with the spectral derivative.
inline double h1_norm(const Field& f) {
  const Field fx = derivative(f, 1);
  return std::sqrt(inner_product(f, f) + inner_product(fx, fx));
}

/// Pointwise p-th power (p in 2..5) evaluated on a 4x zero-padded grid and
/// truncated back to N modes, so no aliased image of a retained mode
/// survives (degree 5 needs padding >= 3N).
inline Field pow_dealiased(const Field& f, int p) {
  if (p < 2 || p > 5)
    throw std::invalid_argument("power must be between 2 and 5");
  const int N = f.grid.N;
  const int M = 4 * N;
  const int half = N / 2;
  CVec spec = spectrum(f);
  CVec fine = CVec::Zero(M);
  for (int j = 0; j < half; ++j) fine[j] = spec[j];
  for (int j = half + 1; j < N; ++j) fine[M - N + j] = spec[j];
  fine[half] = spec[half] / 2.0;           // split the Nyquist bin between
  fine[M - half] = spec[half] / 2.0;       // its two images on the fine grid
  fine *= static_cast<double>(M) / N;
  CVec phys;
  detail::fft_engine().inv(phys, fine);
  for (int i = 0; i < M; ++i) {
    const double u = phys[i].real();
    double y = u;
    for (int q = 1; q < p; ++q) y *= u;
    phys[i] = y;
  }
  CVec back;
  detail::fft_engine().fwd(back, phys);
  CVec trunc(N);
  for (int j = 0; j < half; ++j) trunc[j] = back[j];
  for (int j = half + 1; j < N; ++j) trunc[j] = back[M - N + j];
  trunc[half] = back[half] + back[M - half];
  trunc *= static_cast<double>(N) / M;
  return from_spectrum(f.grid, trunc);
}

/// Periodic antiderivative anchored to zero at the left edge: the mean
/// integrates to a linear ramp, the mean-free part is divided by ik.
inline Field cumulative_integral(const Field& f) {
  CVec spec = spectrum(f);
  const int N = f.grid.N;
  const double mean = spec[0].real() / N;
  spec[0] = 0.0;
  for (int j = 1; j < N; ++j) {
    if (j == N / 2) {
      spec[j] = 0.0;
      continue;
    }
    spec[j] /= std::complex<double>(0.0, f.grid.wavenumber(j));
  }
  const Field mf = from_spectrum(f.grid, spec);
  Vec v(N);
  for (int i = 0; i < N; ++i)
    v[i] = mean * (f.grid.node(i) + f.grid.L / 2) + (mf.v[i] - mf.v[0]);
  return Field{f.grid, std::move(v)};
}

/// Value of the band-limited trigonometric interpolant at one point
/// (direct mode sum; O(N) per evaluation).
inline double trig_interp_at(const Field& f, double x) {
  const CVec spec = spectrum(f);
  const int N = f.grid.N;
  const double d = x + f.grid.L / 2;  // offset from the first node
  double acc = spec[0].real();
  for (int j = 1; j < N / 2; ++j) {
    const double kd = f.grid.wavenumber(j) * d;
    acc += 2 * (spec[j].real() * std::cos(kd) - spec[j].imag() * std::sin(kd));
  }
  acc += spec[N / 2].real() * std::cos(f.grid.wavenumber(N / 2) * d);
  return acc / N;
}

namespace detail {

/// exp(i theta) with the phase accumulated in long double and reduced
/// modulo 2 pi before trigonometry (quadratic chirp phases grow ~N^2).
inline std::complex<double> unit_phase(long double theta) {
  constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  theta = std::fmod(theta, two_pi);
  return {static_cast<double>(std::cos(theta)),
          static_cast<double>(std::sin(theta))};
}

}  // namespace detail

/// Values of the band-limited interpolant at `count` uniformly spaced
/// points start + m * step, via chirp-z (Bluestein) evaluation.  Exact for
/// the same interpolant as trig_interp_at up to roundoff.
inline Vec trig_interp_uniform(const Field& f, double start, double step,
                               int count) {
  if (count <= 0) throw std::invalid_argument("count must be positive");
  const int N = f.grid.N;
  const int half = N / 2;
  const CVec spec = spectrum(f);
  const long double alpha =
      2.0L * std::numbers::pi_v<long double> * step / f.grid.L;

  // p_m = sum_{j=-N/2}^{N/2} A_j exp(i alpha j m) with Nyquist halved;
  // substitute n = j + N/2 and use n m = (n^2 + m^2 - (n-m)^2) / 2.
  const int P = N + 1;
  int M = 1;
  while (M < 2 * N + count) M *= 2;
  CVec u = CVec::Zero(M), w = CVec::Zero(M);
  const double d0 = start + f.grid.L / 2;
  for (int n = 0; n < P; ++n) {
    const int j = n - half;                       // signed mode index
    const int bin = (j >= 0) ? (j % N) : (j + N); // -N/2 and N/2 share a bin
    const double weight = (std::abs(j) == half) ? 0.5 : 1.0;
    const long double kd =
        2.0L * std::numbers::pi_v<long double> * j * d0 / f.grid.L;
    const std::complex<double> a =
        spec[bin] * weight * detail::unit_phase(kd) / static_cast<double>(N);
    u[n] = a * detail::unit_phase(alpha * 0.5L * n * n);
  }
  for (int t = -N; t < count; ++t) {
    const int idx = (t >= 0) ? t : (M + t);
    w[idx] = detail::unit_phase(-alpha * 0.5L * t * t);
  }
  CVec uh, wh;
  detail::fft_engine().fwd(uh, u);
  detail::fft_engine().fwd(wh, w);
  CVec prod(M);
  for (int i = 0; i < M; ++i) prod[i] = uh[i] * wh[i];
  CVec conv;
  detail::fft_engine().inv(conv, prod);

  Vec out(count);
  for (int m = 0; m < count; ++m) {
    const std::complex<double> post =
        detail::unit_phase(alpha * (0.5L * m * m - static_cast<long double>(half) * m));
    out[m] = (post * conv[m]).real();
  }
  return out;
}

namespace detail {

inline std::string format17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes `# L=<L> N=<N>` then one `x value` row per node, 17 significant
/// digits (round-trips doubles exactly).
inline void save_field(const Field& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# L=" << detail::format17(f.grid.L) << " N=" << f.grid.N << "\n";
  for (int i = 0; i < f.grid.N; ++i)
    out << detail::format17(f.grid.node(i)) << " "
        << detail::format17(f.v[i]) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// Reads a field written by save_field.
inline Field load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  std::getline(in, header);
  double L = 0;
  int N = 0;
  if (std::sscanf(header.c_str(), "# L=%lf N=%d", &L, &N) != 2)
    throw std::runtime_error("malformed field header in " + path);
  const Grid grid = make_grid(L, N);
  Vec v(N);
  for (int i = 0; i < N; ++i) {
    double x = 0, value = 0;
    if (!(in >> x >> value))
      throw std::runtime_error("truncated field data in " + path);
    v[i] = value;
  }
  return make_field(grid, std::move(v));
}

}  // namespace gkdvlab
