#pragma once

// Shooting solver for the profile equation of the sharp magnetic
// interpolation constant on the circle:
//
//   u'' = a^2 / (mass^2 u^3) + alpha u - u^{p-1},  u'(0) = 0, u(0) = lambda,
//
// with the nonlocal mass = mean(u^-2) closed by a damped fixed point and the
// half-period condition rho(lambda) = pi closed by bracketing + bisection.
// Derived maps: the constant mu_{a,p}(alpha) itself, parameter sweeps, the
// bifurcation threshold, the half-integer-flux Dirichlet value nu_p(alpha),
// and the inversion alpha(mu) used by the eigenvalue bounds.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "magring/circle.hpp"
#include "magring/forms.hpp"

namespace magring {

enum class Branch { constant, nonconstant, dirichlet };
const char* branch_name(Branch b);

/// Non-convergence of the mass fixed point; carries the iteration history.
class solver_error : public std::runtime_error {
 public:
  solver_error(const std::string& message, std::vector<double> mass_history)
      : std::runtime_error(message), history_(std::move(mass_history)) {}
  const std::vector<double>& mass_history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// RK4 samples (s_i, u_i, u'_i) of one shot.
struct Trajectory {
  std::vector<double> s, u, du;
};

struct SolveOptions {
  int grid_n = 512;        // output resolution; must be even and >= 8
  bool refine_grid = true; // double the grid until the residual is <= 1e-7
  std::optional<std::pair<double, double>> warm;  // (lambda, mass) hint
};

struct ShootingResult {
  ProblemParams params;
  Branch branch;
  double lambda;               // u(0)
  double mass;                 // mean u^-2 (+inf on the Dirichlet branch)
  double mu;                   // branch value, equals lp_norm(profile,p)^(p-2)
  RealGridFunction profile;
  double residual_ode;         // sup-norm equation residual (independent scheme)
  double residual_fixedpoint;  // final relative mass update
  int iterations;              // outer mass iterations
};

/// Integrate the profile equation with fixed-step RK4 from u(0) = lambda,
/// u'(0) = 0 until u' changes sign past s = 0 (the stored samples bracket the
/// first critical point) or s reaches 4*pi.  Throws std::domain_error if the
/// profile reaches zero.
Trajectory integrate_el(double lambda, double mass, const ProblemParams& prm,
                        double step = pi / 2000);
/// Raw-coefficient overload (no coercivity validation); used for integrator
/// diagnostics such as energy-conservation checks on degenerate parameters.
Trajectory integrate_el(double lambda, double mass, double a, double p,
                        double alpha, double step);

/// First s > 0 with u'(s) = 0, bisected to 1e-12 inside the bracketing RK4
/// step; empty if there is no critical point before 4*pi or the profile hits
/// zero along the way.
std::optional<double> rho(double lambda, double mass, const ProblemParams& prm);

/// Full solve at one parameter point: search for non-constant half-period
/// solutions, close the mass fixed point, and return the branch of smallest
/// mu (the constant branch when nothing smaller exists).  Flux a = 1/2
/// delegates to dirichlet_nu.
ShootingResult solve_branch(const ProblemParams& prm, const SolveOptions& opt = {});

/// Sharp constant mu_{a,p}(alpha) = min(a^2 + alpha, non-constant value).
/// Inside the rigidity region a^2(p+2) + alpha(p-2) <= 1 the constant branch
/// is optimal and is returned directly.
double mu(const ProblemParams& prm);
double mu(double a, double p, double alpha);

struct MuCurveRow {
  double alpha;
  double mu_constant;
  std::optional<double> mu_branch;
  double mu;
  Branch branch;
  std::string error;  // non-empty if this row's branch solve failed
};

struct MuCurve {
  double a, p;
  std::vector<MuCurveRow> rows;
};

enum class CurveMode { sequential, parallel };

/// Sweep alpha over [alpha_min, alpha_max] in `steps` uniform rows.
/// `sequential` warm-starts each non-constant solve from the previous row;
/// `parallel` cold-starts every row and distributes them over `threads`
/// workers (0 = MAGRING_THREADS environment override, then hardware).
MuCurve mu_curve(double a, double p, double alpha_min, double alpha_max,
                 int steps, CurveMode mode = CurveMode::sequential,
                 int threads = 0);

/// Threshold alpha* = (1 - a^2 (p+2)) / (p - 2): constants are optimal for
/// alpha <= alpha*, strictly beaten beyond it.
double bifurcation_alpha(double a, double p);

struct BifurcationPoint {
  double formula;    // alpha*
  double empirical;  // onset located by bisection on the solver itself
};

/// Formula threshold plus the empirically located onset of the non-constant
/// optimal branch (bisection on "solve_branch returns a non-constant
/// minimum"); the two agree to the bisection width (~2.5e-4).
BifurcationPoint bifurcation_locate(double a, double p);

/// Dirichlet half-period problem -u'' + alpha u = u^{p-1}, u'(0) = 0,
/// u(pi) = 0 for alpha > -1/4; returns nu_p(alpha) = lp_norm(profile,p)^(p-2)
/// with the even reflection of the half profile on the output grid.
ShootingResult dirichlet_nu(double p, double alpha, const SolveOptions& opt = {});

/// Inverse map: the alpha with mu_{a,p}(alpha) = mu_target (mu_target >= 0).
/// Closed form mu_target - a^2 when 4a^2 + mu_target(p-2) <= 1; otherwise a
/// bracketing regula-falsi root-find on mu to a 1e-8 bracket width.
double alpha_inverse(double a, double p, double mu_target);

}  // namespace magring
