#pragma once

// Uniform periodic grids on the circle [-pi, pi), grid functions, and the
// spectral toolbox built on them: probability-measure quadrature, Lp norms
// (including the harmonic-mean p = -2 convention), Fourier analysis/synthesis,
// spectral differentiation and symmetric-decreasing rearrangement.
//
// All integrals are taken against the normalized arc measure ds/(2*pi), so
// integrate(f) is the mean of f and ||1||_p = 1 for every p.

#include <complex>
#include <stdexcept>
#include <vector>

namespace magring {

inline constexpr double pi = 3.14159265358979323846;

/// Uniform grid with nodes s_j = -pi + 2*pi*j/n, j = 0..n-1 (n even, >= 8).
struct Grid {
  int n = 512;

  explicit Grid(int n_nodes = 512) : n(n_nodes) {
    if (n < 8 || n % 2 != 0)
      throw std::invalid_argument("Grid: node count must be even and >= 8");
  }
  double spacing() const { return 2.0 * pi / n; }
  /// Node position; written as (2j - n)*pi/n so that nodes are exactly
  /// symmetric about s = 0 (node(n/2 + m) == -node(n/2 - m)).
  double node(int j) const { return (2.0 * j - n) * (pi / n); }
  bool operator==(const Grid&) const = default;
};

/// Values of a function at the grid nodes, values[j] = f(node(j)).
template <class T>
struct BasicGridFunction {
  Grid grid;
  std::vector<T> values;

  BasicGridFunction(Grid g, std::vector<T> vals);

  int size() const { return grid.n; }
  T& operator[](int j) { return values[static_cast<size_t>(j)]; }
  const T& operator[](int j) const { return values[static_cast<size_t>(j)]; }

  /// Sample a callable at every node.
  template <class F>
  static BasicGridFunction sample(Grid g, F&& fn) {
    std::vector<T> v(static_cast<size_t>(g.n));
    for (int j = 0; j < g.n; ++j) v[static_cast<size_t>(j)] = fn(g.node(j));
    return BasicGridFunction(g, std::move(v));
  }
};

using RealGridFunction = BasicGridFunction<double>;
using ComplexGridFunction = BasicGridFunction<std::complex<double>>;

/// Fourier coefficients c_k = integrate(f * exp(-i k s)) for |k| <= cutoff,
/// stored at coeffs[cutoff + k].
struct FourierVector {
  int cutoff = 0;
  std::vector<std::complex<double>> coeffs;

  FourierVector() = default;
  FourierVector(int K, std::vector<std::complex<double>> c);

  std::complex<double>& at(int k) { return coeffs[static_cast<size_t>(cutoff + k)]; }
  const std::complex<double>& at(int k) const {
    return coeffs[static_cast<size_t>(cutoff + k)];
  }
};

/// Mean value (1/n) * sum f_j, the rectangle rule for ds/(2*pi); exact to
/// rounding for trigonometric polynomials of degree < n.
double integrate(const RealGridFunction& f);
std::complex<double> integrate(const ComplexGridFunction& f);

/// Lp norm against the normalized measure.  p >= 1 gives (mean |f|^p)^(1/p).
/// p == -2 (real, nowhere-zero f only) gives (mean f^-2)^(-1/2), the
/// harmonic-mean-type norm used by the magnetic quotient; any exactly zero
/// sample is rejected.
double lp_norm(const RealGridFunction& f, double p);
double lp_norm(const ComplexGridFunction& f, double p);

/// Spectral derivative: differentiate the trigonometric interpolant.  The
/// unmatched Nyquist mode k = -n/2 is dropped so real input gives real output.
RealGridFunction derivative(const RealGridFunction& f);
ComplexGridFunction derivative(const ComplexGridFunction& f);

/// Discrete Fourier analysis up to |k| <= cutoff (cutoff <= n/2).  Exact for
/// band-limited input with 2*cutoff + 1 <= n; otherwise the coefficients are
/// the aliased quadrature sums.
FourierVector fourier(const RealGridFunction& f, int cutoff);
FourierVector fourier(const ComplexGridFunction& f, int cutoff);

/// Synthesis f(s_j) = sum_k c_k exp(i k s_j); requires 2*cutoff + 1 <= n.
ComplexGridFunction inverse_fourier(const FourierVector& c, Grid grid);

/// Symmetric-decreasing rearrangement of the sample multiset: values sorted
/// descending (ties broken by ascending original index) are placed at nodes
/// ordered by increasing |s|, positive node first within each +-|s| pair, so
/// the result is even about s = 0 up to one sample and non-increasing in |s|
/// along that placement order.  Equimeasurable with the input by construction.
RealGridFunction rearrange_decreasing(const RealGridFunction& f);

}  // namespace magring
