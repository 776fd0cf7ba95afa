#pragma once

// Independent oracles and property checks: direct minimization of the
// interpolation quotients (the brute-force cross-check for the sharp
// constants), the dissipative parabolic flow behind the flux-free
// inequality, the two-function rearrangement inequality, the diamagnetic
// inequality in integrated form, and the small-amplitude curvature of the
// quotient at the constant.

#include "magring/forms.hpp"

#include <utility>
#include <vector>

namespace magring {

/// Trial space for direct minimization.
enum class OracleSpace {
  complex_periodic,  // complex Fourier modes, magnetic kinetic term
  real_positive,     // real profiles, harmonic-mean magnetic term
  dirichlet          // real profiles vanishing at s = +-pi
};

/// Outcome of a quotient minimization: best value over all restarts, the
/// minimizing profile (modulus, for the complex space), the iteration count
/// of the winning run and its final coefficient-gradient norm.
struct OracleResult {
  double mu_hat;
  RealGridFunction minimizer;
  int iterations;
  double gradient_norm;
};

/// Minimize the appropriate quotient by preconditioned gradient descent in
/// coefficient space: seeded band-limited random starts plus the flat start,
/// backtracking line search, termination at gradient norm <= 1e-7 or 1e5
/// iterations, best of the restarts returned.  The descent trajectory of
/// quotient values is monotone non-increasing (violations throw).
/// n must be a power of two >= 128.
OracleResult direct_minimize(const ProblemParams& prm, OracleSpace space,
                             int n = 256, unsigned seed = 1);

/// One snapshot of the dissipative flow u_t = u'' + (p-1) u'^2 / u.
struct FlowState {
  RealGridFunction u;
  double time;
  double functional_value;  // deficit functional at beta = 1/(p-2)
  double mass_p;            // mean of u^p, conserved along the flow
};

/// Integrate the flow with explicit RK4 steps and spectral space derivatives
/// from t = 0 to t_end; returns the state at every step including t = 0.
/// Along the returned sequence the deficit functional is non-increasing and
/// mass_p is conserved (checked by the callers); losing positivity aborts
/// with a diagnostic.
std::vector<FlowState> bakry_emery_flow(const RealGridFunction& u0, double p,
                                        double dt, double t_end);

/// Both sides of the two-function rearrangement inequality
///   mean (f^2+g^2)^{p/2}  <=  mean (f*^2+g*^2)^{p/2},   p >= 2,
/// with * the symmetric-decreasing rearrangement; returns {lhs, rhs} and
/// throws if the inequality fails beyond roundoff.
std::pair<double, double> rearrangement_check(const RealGridFunction& f,
                                              const RealGridFunction& g,
                                              double p);

/// Integrated diamagnetic inequality || |psi|' ||_2 <= magnetic energy^(1/2):
/// lhs from one-sided finite differences of |psi|, rhs from the Fourier-space
/// magnetic form; returns {lhs, rhs}.
std::pair<double, double> diamagnetic_check(const ComplexGridFunction& psi,
                                            double a);

/// Second-order coefficient of the quotient at the constant along the
/// perturbation 1 + cos s, extracted from three evaluation amplitudes by
/// Richardson extrapolation; the exact value is 1 - a^2(p+2) - alpha(p-2).
double taylor_coefficient_check(const ProblemParams& prm);

}  // namespace magring
