#include "magring/circle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace magring {

namespace {

using cd = std::complex<double>;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 transform, sign = -1 forward / +1 inverse, no scaling.
void fft_pow2(std::vector<cd>& a, int sign) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(j)]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * pi / len;
    const cd wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        cd u = a[static_cast<size_t>(i + k)];
        cd v = a[static_cast<size_t>(i + k + len / 2)] * w;
        a[static_cast<size_t>(i + k)] = u + v;
        a[static_cast<size_t>(i + k + len / 2)] = u - v;
        w *= wl;
      }
    }
  }
}

// O(n^2) fallback for even non-power-of-two sizes.
void dft_direct(std::vector<cd>& a, int sign) {
  const int n = static_cast<int>(a.size());
  std::vector<cd> out(static_cast<size_t>(n));
  for (int m = 0; m < n; ++m) {
    cd acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * pi * m * j / n;
      acc += a[static_cast<size_t>(j)] * cd(std::cos(ang), std::sin(ang));
    }
    out[static_cast<size_t>(m)] = acc;
  }
  a = std::move(out);
}

void transform(std::vector<cd>& a, int sign) {
  if (power_of_two(static_cast<int>(a.size())))
    fft_pow2(a, sign);
  else
    dft_direct(a, sign);
}

// Full coefficient window: spectrum[n/2 + k] = c_k for k = -n/2 .. n/2 - 1, where
// c_k = (1/n) sum_j f_j exp(-i k s_j).  With s_j = -pi + 2*pi*j/n this is the
// plain DFT times the alternating phase (-1)^k.
std::vector<cd> full_spectrum(const std::vector<cd>& vals) {
  const int n = static_cast<int>(vals.size());
  std::vector<cd> a = vals;
  transform(a, -1);
  std::vector<cd> spectrum(static_cast<size_t>(n));
  for (int k = -n / 2; k < n / 2; ++k) {
    const int m = (k % n + n) % n;
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    spectrum[static_cast<size_t>(n / 2 + k)] = a[static_cast<size_t>(m)] * (sgn / n);
  }
  return spectrum;
}

// Inverse of full_spectrum: f_j = sum_k c_k exp(i k s_j).
std::vector<cd> synthesize(const std::vector<cd>& spectrum) {
  const int n = static_cast<int>(spectrum.size());
  std::vector<cd> a(static_cast<size_t>(n), cd(0.0, 0.0));
  for (int k = -n / 2; k < n / 2; ++k) {
    const int m = (k % n + n) % n;
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    a[static_cast<size_t>(m)] = spectrum[static_cast<size_t>(n / 2 + k)] * sgn;
  }
  transform(a, +1);
  return a;
}

std::vector<cd> to_complex(const std::vector<double>& v) {
  std::vector<cd> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = cd(v[i], 0.0);
  return out;
}

void check_finite(double x) {
  if (!std::isfinite(x))
    throw std::invalid_argument("grid function values must be finite");
}

}  // namespace

template <>
BasicGridFunction<double>::BasicGridFunction(Grid g, std::vector<double> vals)
    : grid(g), values(std::move(vals)) {
  if (static_cast<int>(values.size()) != grid.n)
    throw std::invalid_argument("grid function size does not match grid");
  for (double v : values) check_finite(v);
}

template <>
BasicGridFunction<cd>::BasicGridFunction(Grid g, std::vector<cd> vals)
    : grid(g), values(std::move(vals)) {
  if (static_cast<int>(values.size()) != grid.n)
    throw std::invalid_argument("grid function size does not match grid");
  for (const cd& v : values) {
    check_finite(v.real());
    check_finite(v.imag());
  }
}

FourierVector::FourierVector(int K, std::vector<cd> c)
    : cutoff(K), coeffs(std::move(c)) {
  if (cutoff < 0) throw std::invalid_argument("FourierVector: cutoff must be >= 0");
  if (static_cast<int>(coeffs.size()) != 2 * cutoff + 1)
    throw std::invalid_argument("FourierVector: need 2*cutoff + 1 coefficients");
}

double integrate(const RealGridFunction& f) {
  double acc = 0.0;
  for (double v : f.values) acc += v;
  return acc / f.grid.n;
}

std::complex<double> integrate(const ComplexGridFunction& f) {
  cd acc(0.0, 0.0);
  for (const cd& v : f.values) acc += v;
  return acc / static_cast<double>(f.grid.n);
}

namespace {

double lp_norm_impl(const std::vector<double>& absvals, int n, double p) {
  if (p == 2.0) {
    double acc = 0.0;
    for (double v : absvals) acc += v * v;
    return std::sqrt(acc / n);
  }
  double acc = 0.0;
  for (double v : absvals) acc += std::pow(v, p);
  return std::pow(acc / n, 1.0 / p);
}

}  // namespace

double lp_norm(const RealGridFunction& f, double p) {
  if (p == -2.0) {
    double acc = 0.0;
    for (double v : f.values) {
      if (v == 0.0)
        throw std::invalid_argument("lp_norm: p = -2 requires nowhere-zero samples");
      acc += 1.0 / (v * v);
    }
    return 1.0 / std::sqrt(acc / f.grid.n);
  }
  if (p < 1.0)
    throw std::invalid_argument("lp_norm: p must be >= 1 (or exactly -2)");
  std::vector<double> av(f.values.size());
  for (size_t i = 0; i < av.size(); ++i) av[i] = std::fabs(f.values[i]);
  return lp_norm_impl(av, f.grid.n, p);
}

double lp_norm(const ComplexGridFunction& f, double p) {
  if (p < 1.0)
    throw std::invalid_argument("lp_norm: complex functions require p >= 1");
  std::vector<double> av(f.values.size());
  for (size_t i = 0; i < av.size(); ++i) av[i] = std::abs(f.values[i]);
  return lp_norm_impl(av, f.grid.n, p);
}

namespace {

std::vector<cd> derivative_spectrum(std::vector<cd> spectrum) {
  const int n = static_cast<int>(spectrum.size());
  for (int k = -n / 2; k < n / 2; ++k) {
    // Drop the unmatched Nyquist mode so differentiation maps real to real.
    const double w = (k == -n / 2) ? 0.0 : static_cast<double>(k);
    spectrum[static_cast<size_t>(n / 2 + k)] *= cd(0.0, w);
  }
  return spectrum;
}

}  // namespace

RealGridFunction derivative(const RealGridFunction& f) {
  std::vector<cd> out = synthesize(derivative_spectrum(full_spectrum(to_complex(f.values))));
  std::vector<double> re(out.size());
  for (size_t i = 0; i < out.size(); ++i) re[i] = out[i].real();
  return RealGridFunction(f.grid, std::move(re));
}

ComplexGridFunction derivative(const ComplexGridFunction& f) {
  return ComplexGridFunction(f.grid,
                             synthesize(derivative_spectrum(full_spectrum(f.values))));
}

namespace {

FourierVector fourier_impl(const std::vector<cd>& vals, Grid grid, int cutoff) {
  if (cutoff < 0 || cutoff > grid.n / 2)
    throw std::invalid_argument("fourier: cutoff must lie in [0, n/2]");
  std::vector<cd> spectrum = full_spectrum(vals);
  std::vector<cd> out(static_cast<size_t>(2 * cutoff + 1));
  for (int k = -cutoff; k <= cutoff; ++k) {
    // +n/2 is the aliased mirror of -n/2; reuse that slot.
    const int kk = (k == grid.n / 2) ? -grid.n / 2 : k;
    out[static_cast<size_t>(cutoff + k)] = spectrum[static_cast<size_t>(grid.n / 2 + kk)];
  }
  return FourierVector(cutoff, std::move(out));
}

}  // namespace

FourierVector fourier(const RealGridFunction& f, int cutoff) {
  return fourier_impl(to_complex(f.values), f.grid, cutoff);
}

FourierVector fourier(const ComplexGridFunction& f, int cutoff) {
  return fourier_impl(f.values, f.grid, cutoff);
}

ComplexGridFunction inverse_fourier(const FourierVector& c, Grid grid) {
  if (2 * c.cutoff + 1 > grid.n)
    throw std::invalid_argument("inverse_fourier: grid cannot resolve the cutoff");
  std::vector<cd> spectrum(static_cast<size_t>(grid.n), cd(0.0, 0.0));
  for (int k = -c.cutoff; k <= c.cutoff; ++k)
    spectrum[static_cast<size_t>(grid.n / 2 + k)] = c.at(k);
  return ComplexGridFunction(grid, synthesize(spectrum));
}

RealGridFunction rearrange_decreasing(const RealGridFunction& f) {
  const int n = f.grid.n;
  // Node visit order by increasing |s|: center, then each +-|s| pair with the
  // positive node first, finally the lone node at s = -pi.
  std::vector<int> slots;
  slots.reserve(static_cast<size_t>(n));
  slots.push_back(n / 2);
  for (int m = 1; m < n / 2; ++m) {
    slots.push_back(n / 2 + m);
    slots.push_back(n / 2 - m);
  }
  slots.push_back(0);

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&f](int i, int j) {
    return f.values[static_cast<size_t>(i)] > f.values[static_cast<size_t>(j)];
  });

  std::vector<double> out(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r)
    out[static_cast<size_t>(slots[static_cast<size_t>(r)])] =
        f.values[static_cast<size_t>(order[static_cast<size_t>(r)])];
  return RealGridFunction(f.grid, std::move(out));
}

}  // namespace magring
