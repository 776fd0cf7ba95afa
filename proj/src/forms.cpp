#include "magring/forms.hpp"

#include <algorithm>
#include <cmath>

namespace magring {

double reduce_flux(double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("reduce_flux: flux must be finite");
  return std::fabs(a - std::round(a));  // round-half-away keeps 0.5 -> 0.5
}

double flux_average(const RealGridFunction& a_fn) { return integrate(a_fn); }

ProblemParams::ProblemParams(double flux, double p_exp, double alpha_val)
    : a(reduce_flux(flux)), p(p_exp), alpha(alpha_val), q(0.0) {
  if (!std::isfinite(p) || p <= 2.0)
    throw std::invalid_argument("ProblemParams: p must be finite and > 2");
  if (!std::isfinite(alpha) || alpha <= -a * a)
    throw std::invalid_argument("ProblemParams: alpha must exceed -a^2");
  q = p / (p - 2.0);
}

namespace {

// Kinetic spectral sum sum k^2 |c_k|^2 over the modes kept by derivative()
// (the unmatched Nyquist mode is excluded there as well, so the two agree).
double kinetic_energy(const FourierVector& fv, int n) {
  double acc = 0.0;
  for (int k = -n / 2 + 1; k <= n / 2 - 1; ++k)
    acc += static_cast<double>(k) * k * std::norm(fv.at(k));
  return acc;
}

double sq(double x) { return x * x; }

}  // namespace

double magnetic_form(const ComplexGridFunction& psi, double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("magnetic_form: flux must be finite");
  const int n = psi.grid.n;
  FourierVector fv = fourier(psi, n / 2);
  double acc = 0.0;
  for (int k = -n / 2; k <= n / 2 - 1; ++k) acc += sq(a + k) * std::norm(fv.at(k));
  return acc;
}

namespace {

template <class GF>
double quotient_Q_impl(const GF& v, double p, double alpha) {
  const double denom = lp_norm(v, p);
  if (denom == 0.0) throw std::invalid_argument("quotient_Q: zero function");
  const double l2 = lp_norm(v, 2.0);
  const double kin = kinetic_energy(fourier(v, v.grid.n / 2), v.grid.n);
  return (kin + alpha * l2 * l2) / (denom * denom);
}

}  // namespace

double quotient_Q(const RealGridFunction& v, double p, double alpha) {
  return quotient_Q_impl(v, p, alpha);
}

double quotient_Q(const ComplexGridFunction& v, double p, double alpha) {
  return quotient_Q_impl(v, p, alpha);
}

double quotient_calQ(const RealGridFunction& u, const ProblemParams& prm) {
  double lo = std::fabs(u[0]), hi = std::fabs(u[0]);
  for (double v : u.values) {
    lo = std::min(lo, std::fabs(v));
    hi = std::max(hi, std::fabs(v));
  }
  if (hi == 0.0) throw std::invalid_argument("quotient_calQ: zero function");
  if (lo <= 1e-8 * hi) return quotient_Q(u, prm.p, prm.alpha);

  double mean_inv_sq = 0.0;
  for (double v : u.values) mean_inv_sq += 1.0 / (v * v);
  mean_inv_sq /= u.grid.n;

  const double denom = lp_norm(u, prm.p);
  const double l2 = lp_norm(u, 2.0);
  const double kin = kinetic_energy(fourier(u, u.grid.n / 2), u.grid.n);
  return (kin + prm.a * prm.a / mean_inv_sq + prm.alpha * l2 * l2) / (denom * denom);
}

PhaseData phase_reconstruct(const RealGridFunction& u, double a, int winding) {
  if (!std::isfinite(a)) throw std::invalid_argument("phase_reconstruct: flux must be finite");
  double umin = u[0];
  for (double v : u.values) umin = std::min(umin, v);
  if (umin <= 0.0)
    throw std::invalid_argument("phase_reconstruct: profile must be strictly positive");

  const int n = u.grid.n;
  const double h = u.grid.spacing();
  double mass = 0.0;
  for (double v : u.values) mass += 1.0 / (v * v);
  mass /= n;
  const double L = (a + winding) / mass;

  // Cumulative trapezoid of L/u^2 in plain arc length; over a full turn the
  // trapezoid sum telescopes to the rectangle rule, so the total increment is
  // exactly L * 2*pi * mass = 2*pi*(a + winding).
  std::vector<double> phase(static_cast<size_t>(n));
  phase[0] = 0.0;
  for (int j = 1; j < n; ++j) {
    const double f0 = 1.0 / sq(u[j - 1]);
    const double f1 = 1.0 / sq(u[j]);
    phase[static_cast<size_t>(j)] =
        phase[static_cast<size_t>(j - 1)] + L * 0.5 * h * (f0 + f1);
  }
  return PhaseData{winding, RealGridFunction(u.grid, std::move(phase)), L};
}

}  // namespace magring
