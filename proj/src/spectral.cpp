#include "magring/spectral.hpp"

#include "magring/shooting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace magring {

namespace {

// Build the matrix with the potential spectrum taken from the grid up to the
// resolvable band and zero-extended beyond it; `strict` additionally demands
// that the whole band -2K..2K is resolvable (the public assemble contract).
PotentialOperator build(double a, const RealGridFunction& phi, int K,
                        bool strict) {
  if (!std::isfinite(a))
    throw std::invalid_argument("assemble: flux must be finite");
  if (K < 0) throw std::invalid_argument("assemble: cutoff must be >= 0");
  int n = phi.grid.n;
  if (strict && 2 * K + 1 > n)
    throw std::invalid_argument(
        "assemble: 2K+1 exceeds the grid size; coefficients would alias");
  for (double v : phi.values)
    if (!std::isfinite(v))
      throw std::invalid_argument("assemble: potential must be finite");

  int band = std::min(2 * K, n / 2);
  FourierVector ph = fourier(phi, band);
  PotentialOperator op;
  op.a = a;
  op.cutoff = K;
  op.matrix.assign(static_cast<size_t>(op.dim()) * op.dim(), {0.0, 0.0});
  for (int j = -K; j <= K; ++j) {
    for (int k = -K; k <= K; ++k) {
      std::complex<double> v = 0.0;
      int m = j - k;
      if (std::abs(m) <= band) v = -ph.at(m);
      if (j == k) v += (a + k) * (a + k);
      op.entry(j, k) = v;
    }
  }
  return op;
}

double lowest_dense(const PotentialOperator& op) {
  int d = op.dim();
  Eigen::MatrixXcd A(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      A(r, c) = op.matrix[static_cast<size_t>(r) * d + c];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A,
                                                     Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("lambda1: dense eigensolve failed");
  return es.eigenvalues()(0);
}

// Shifted inverse iteration: factor A - sigma I once with sigma strictly
// below the spectrum, then power-iterate the inverse and read the eigenvalue
// off the Rayleigh quotient.
double lowest_inverse_iteration(const PotentialOperator& op) {
  int d = op.dim();
  Eigen::MatrixXcd A(d, d);
  double diag_min = std::numeric_limits<double>::infinity();
  double offdiag_max_row = 0.0;
  for (int r = 0; r < d; ++r) {
    double row_off = 0.0;
    for (int c = 0; c < d; ++c) {
      std::complex<double> v = op.matrix[static_cast<size_t>(r) * d + c];
      A(r, c) = v;
      if (r == c)
        diag_min = std::min(diag_min, v.real());
      else
        row_off += std::abs(v);
    }
    offdiag_max_row = std::max(offdiag_max_row, row_off);
  }
  double sigma = diag_min - offdiag_max_row - 1.0;  // Gershgorin lower bound
  Eigen::MatrixXcd B = A - sigma * Eigen::MatrixXcd::Identity(d, d);
  Eigen::LDLT<Eigen::MatrixXcd> fac(B);
  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(d).normalized();
  double lam = 0.0, lam_prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 500; ++it) {
    x = fac.solve(x).normalized();
    lam = (x.adjoint() * A * x).real()(0, 0);
    if (std::fabs(lam - lam_prev) <= 1e-13 * std::max(1.0, std::fabs(lam)))
      break;
    lam_prev = lam;
  }
  return lam;
}

}  // namespace

PotentialOperator assemble(double a, const RealGridFunction& phi, int K) {
  return build(a, phi, K, true);
}

double lambda1(const PotentialOperator& op) {
  if (op.dim() <= 513) return lowest_dense(op);
  return lowest_inverse_iteration(op);
}

double lambda1(double a, const RealGridFunction& phi, int K) {
  return lambda1(build(a, phi, K, true));
}

double lambda1_converged(double a, const RealGridFunction& phi, int K0,
                         double tol) {
  if (K0 < 1) throw std::invalid_argument("lambda1_converged: K0 must be >= 1");
  int K = K0;
  double prev = lambda1(build(a, phi, K, false));
  for (int round = 0; round < 6; ++round) {
    K *= 2;
    double cur = lambda1(build(a, phi, K, false));
    if (std::fabs(cur - prev) <= tol) return cur;
    prev = cur;
  }
  return prev;
}

KltReport klt_check(const ProblemParams& prm, const RealGridFunction& phi,
                    int k0) {
  double scale = 0.0;
  for (double v : phi.values) scale = std::max(scale, std::fabs(v));
  for (double v : phi.values)
    if (v < -1e-12 * std::max(1.0, scale))
      throw std::invalid_argument("klt_check: potential must be non-negative");
  double qn = lp_norm(phi, prm.q);
  double bound = -alpha_inverse(prm.a, prm.p, qn);
  double lam1 = lambda1_converged(prm.a, phi, k0);
  return KltReport{lam1, bound, lam1 - bound, qn};
}

double hardy_tau(double a, double p, const RealGridFunction& phi) {
  if (!(p > 2.0)) throw std::invalid_argument("hardy_tau: p must exceed 2");
  double ar = reduce_flux(a);
  double scale = 0.0;
  for (double v : phi.values) scale = std::max(scale, std::fabs(v));
  for (double v : phi.values)
    if (v < -1e-12 * std::max(1.0, scale))
      throw std::invalid_argument("hardy_tau: weight must be non-negative");
  double qn = lp_norm(phi, p / (p - 2.0));
  if (!(qn > 0.0))
    throw std::invalid_argument("hardy_tau: weight has zero q-norm");
  if (ar == 0.0) return 0.0;
  // Inside the rigidity window the zero of alpha sits at tau ||phi||_q = a^2.
  if (ar * ar * (p + 2.0) <= 1.0) return ar * ar / qn;
  // alpha_inverse(m) = 0 exactly at m = mu(a, p, 0) by inverse monotonicity.
  return mu(ar, p, 0.0) / qn;
}

double hardy_tau(const ProblemParams& prm, const RealGridFunction& phi) {
  return hardy_tau(prm.a, prm.p, phi);
}

}  // namespace magring
