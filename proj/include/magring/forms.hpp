#pragma once

// Quadratic forms and quotients of the magnetic interpolation problem on the
// circle: flux reduction to the gauge cell [0, 1/2], the magnetic Dirichlet
// form in Fourier space, the plain and magnetic interpolation quotients, and
// reconstruction of the optimal phase from a positive modulus profile.

#include "magring/circle.hpp"

namespace magring {

/// Distance from a raw flux to the nearest integer; the gauge-invariant
/// representative in [0, 1/2].  Idempotent.
double reduce_flux(double a);

/// Mean of a position-dependent potential a(s): its only gauge invariant.
double flux_average(const RealGridFunction& a_fn);

/// Problem parameters with the flux already reduced.  Requires p > 2 and the
/// coercivity condition alpha > -a^2; q = p/(p-2) is the dual exponent used
/// by the eigenvalue bounds.
struct ProblemParams {
  double a;      // reduced flux in [0, 1/2]
  double p;      // > 2
  double alpha;  // > -a^2
  double q;      // p/(p-2)

  ProblemParams(double flux, double p_exp, double alpha_val);
};

/// Magnetic energy sum_k (a+k)^2 |psi_k|^2 over the resolvable spectrum.
/// For reduced a this is bounded below by a^2 ||psi||_2^2.
double magnetic_form(const ComplexGridFunction& psi, double a);

/// Plain interpolation quotient (||v'||_2^2 + alpha ||v||_2^2) / ||v||_p^2
/// with the kinetic term evaluated spectrally.  Scale invariant.
double quotient_Q(const RealGridFunction& v, double p, double alpha);
double quotient_Q(const ComplexGridFunction& v, double p, double alpha);

/// Quotient for real profiles including the harmonic-mean magnetic term:
///   (||u'||_2^2 + a^2 (mean u^-2)^-1 + alpha ||u||_2^2) / ||u||_p^2.
/// If min |u| <= 1e-8 * max |u| the harmonic term degenerates to zero and the
/// quotient falls back to quotient_Q (the Dirichlet-type value).
double quotient_calQ(const RealGridFunction& u, const ProblemParams& prm);

/// Optimal phase for a positive modulus profile: phi' = L / u^2 with
/// phi(-pi) = 0 and the multiplier L fixed so the increment over one turn is
/// exactly 2*pi*(a + winding).
struct PhaseData {
  int winding;
  RealGridFunction phase;
  double multiplier;
};

PhaseData phase_reconstruct(const RealGridFunction& u, double a, int winding = 0);

}  // namespace magring
