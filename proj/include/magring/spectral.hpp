#pragma once

// Fourier-space assembly of the magnetic Schrodinger operator H_a - phi on
// the circle, its lowest eigenvalue, the eigenvalue lower bound driven by the
// interpolation constant, and the sharp Hardy weight constant tau obtained
// from the same machinery.

#include "magring/forms.hpp"

#include <complex>
#include <vector>

namespace magring {

/// Dense Hermitian matrix of H_a - phi in the Fourier basis e^{iks},
/// k = -K..K: entry(j, k) = (a+k)^2 delta_jk - phihat(j-k).
struct PotentialOperator {
  double a = 0.0;
  int cutoff = 0;  // K
  std::vector<std::complex<double>> matrix;  // (2K+1)^2, row-major

  int dim() const { return 2 * cutoff + 1; }
  /// Entry with mode indices j, k in [-K, K].
  std::complex<double>& entry(int j, int k) {
    return matrix[static_cast<size_t>((j + cutoff) * dim() + (k + cutoff))];
  }
  const std::complex<double>& entry(int j, int k) const {
    return matrix[static_cast<size_t>((j + cutoff) * dim() + (k + cutoff))];
  }
};

/// Eigenvalue bound report: lambda1 of H_a - phi against the bound
/// -alpha_inverse(a, p, ||phi||_q); margin = lambda1 - bound >= 0 up to
/// roundoff whenever the inequality holds.
struct KltReport {
  double lambda1;
  double bound;
  double margin;
  double q_norm;
};

/// Assemble H_a - phi at cutoff K.  Requires 2K+1 <= grid size so every
/// required Fourier coefficient of phi is resolvable.
PotentialOperator assemble(double a, const RealGridFunction& phi, int K);

/// Lowest eigenvalue of an assembled operator (dense solve for dimensions
/// up to 513, shifted inverse iteration above).
double lambda1(const PotentialOperator& op);

/// Lowest eigenvalue of H_a - phi at a fixed cutoff K.
double lambda1(double a, const RealGridFunction& phi, int K);

/// Lowest eigenvalue with the cutoff doubled from K0 until the value moves
/// by at most tol; the potential spectrum is zero-extended past the grid's
/// resolvable band.
double lambda1_converged(double a, const RealGridFunction& phi, int K0 = 128,
                         double tol = 1e-8);

/// Evaluate both sides of the eigenvalue bound for a non-negative potential:
/// lambda1(H_a - phi) >= -alpha_inverse(a, p, ||phi||_q).
KltReport klt_check(const ProblemParams& prm, const RealGridFunction& phi,
                    int k0 = 128);

/// Sharp constant of the Hardy weight phi: the unique tau > 0 with
/// alpha_inverse(a, p, tau ||phi||_q) = 0, which the monotone inverse pair
/// reduces to mu(a, p, 0) / ||phi||_q.  Returns 0 when a = 0 (the flux-free
/// overload exists because ProblemParams cannot represent a = 0, alpha = 0).
double hardy_tau(double a, double p, const RealGridFunction& phi);
double hardy_tau(const ProblemParams& prm, const RealGridFunction& phi);

}  // namespace magring
