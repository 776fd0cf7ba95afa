#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "magring/circle.hpp"
#include "magring/forms.hpp"

using namespace magring;
using cd = std::complex<double>;

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ComplexGridFunction random_band_limited(Grid g, std::mt19937_64& rng, int degree) {
  std::vector<cd> coeffs(static_cast<size_t>(2 * degree + 1));
  for (auto& c : coeffs)
    c = cd(2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0);
  return inverse_fourier(FourierVector(degree, std::move(coeffs)), g);
}

}  // namespace

TEST_CASE("flux reduction") {
  CHECK(reduce_flux(0.3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(reduce_flux(0.7) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(reduce_flux(-0.2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(reduce_flux(1.0) == 0.0);
  CHECK(reduce_flux(0.5) == 0.5);
  CHECK(reduce_flux(-0.5) == 0.5);
  CHECK(reduce_flux(17.25) == doctest::Approx(0.25).epsilon(1e-15));
  for (double a : {0.0, 0.11, 0.49, 0.5})
    CHECK(reduce_flux(reduce_flux(a)) == reduce_flux(a));
}

TEST_CASE("parameter validation") {
  ProblemParams prm(0.7, 4.0, 1.0);
  CHECK(prm.a == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(prm.q == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ProblemParams(0.0, 3.0, 0.5).q == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ProblemParams(0.5, 6.0, -0.2).q == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(ProblemParams(0.3, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ProblemParams(0.3, 4.0, -0.09), std::invalid_argument);
  CHECK_THROWS_AS(ProblemParams(0.0, 4.0, 0.0), std::invalid_argument);
}

TEST_CASE("flux average of a position-dependent potential") {
  Grid g(256);
  auto a_fn = RealGridFunction::sample(
      g, [](double s) { return 0.3 + 0.1 * std::cos(s) - 0.05 * std::sin(3 * s); });
  CHECK(flux_average(a_fn) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("magnetic form on pure modes and its lower bound") {
  Grid g(128);
  const double a = 0.3;
  for (int k : {-2, 0, 1, 5}) {
    auto mode = ComplexGridFunction::sample(
        g, [k](double s) { return std::polar(1.0, k * s); });
    CHECK(magnetic_form(mode, a) == doctest::Approx((a + k) * (a + k)).epsilon(1e-12));
  }

  auto twocos = ComplexGridFunction::sample(
      g, [](double s) { return cd(2.0 * std::cos(s), 0.0); });
  CHECK(magnetic_form(twocos, a) ==
        doctest::Approx((a + 1) * (a + 1) + (a - 1) * (a - 1)).epsilon(1e-12));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto psi = random_band_limited(g, rng, 8);
    const double l2 = lp_norm(psi, 2.0);
    CHECK(magnetic_form(psi, a) >= a * a * l2 * l2 - 1e-12);
  }
}

TEST_CASE("magnetic form gauge covariance") {
  Grid g(128);
  std::mt19937_64 rng(42);
  auto psi = random_band_limited(g, rng, 6);
  for (int k : {1, -2}) {
    auto shifted = ComplexGridFunction(g, psi.values);
    for (int j = 0; j < g.n; ++j) shifted[j] *= std::polar(1.0, k * g.node(j));
    CHECK(magnetic_form(shifted, 0.3) ==
          doctest::Approx(magnetic_form(psi, 0.3 + k)).epsilon(1e-10));
  }
}

TEST_CASE("plain quotient on explicit functions") {
  Grid g(256);
  auto c = RealGridFunction::sample(g, [](double) { return 2.0; });
  CHECK(quotient_Q(c, 4.0, 0.7) == doctest::Approx(0.7).epsilon(1e-13));

  auto cosf = RealGridFunction::sample(g, [](double s) { return std::cos(s); });
  // ||cos'||_2^2 = 1/2, ||cos||_2^2 = 1/2, ||cos||_4^2 = sqrt(3/8)
  CHECK(quotient_Q(cosf, 2.0, 0.25) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(quotient_Q(cosf, 4.0, 0.0) ==
        doctest::Approx(0.5 / std::sqrt(0.375)).epsilon(1e-12));

  // scale invariance
  auto scaled = RealGridFunction(g, cosf.values);
  for (auto& v : scaled.values) v *= -17.0;
  CHECK(quotient_Q(scaled, 4.0, 0.3) ==
        doctest::Approx(quotient_Q(cosf, 4.0, 0.3)).epsilon(1e-13));
}

TEST_CASE("magnetic quotient equals a^2+alpha on constants") {
  Grid g(512);
  for (double a : {0.0, 0.2, 0.45}) {
    for (double alpha : {-0.03, 0.5, 2.0}) {
      if (alpha <= -a * a) continue;
      ProblemParams prm(a, 4.0, alpha);
      auto u = RealGridFunction::sample(g, [](double) { return 1.7; });
      CHECK(quotient_calQ(u, prm) == doctest::Approx(a * a + alpha).epsilon(1e-13));
    }
  }
}

TEST_CASE("magnetic quotient degenerates to the plain quotient at vanishing") {
  Grid g(512);
  ProblemParams prm(0.4, 4.0, 0.3);
  // 1 + cos s vanishes exactly at the node s = -pi
  auto u = RealGridFunction::sample(g, [](double s) { return 1.0 + std::cos(s); });
  CHECK(quotient_calQ(u, prm) ==
        doctest::Approx(quotient_Q(u, prm.p, prm.alpha)).epsilon(1e-14));

  // just above the vanish threshold the harmonic term reappears
  auto u2 = RealGridFunction::sample(g, [](double s) { return 1.0 + std::cos(s) + 1e-3; });
  CHECK(quotient_calQ(u2, prm) > quotient_Q(u2, prm.p, prm.alpha));
}

TEST_CASE("quotient curvature along the lowest cosine direction") {
  // Q[1 + eps(1+cos s)] = a^2 + alpha + (eps^2/2)(1 - a^2(p+2) - alpha(p-2)) + ...
  // so the symmetric second difference in eps recovers 1 - a^2(p+2) - alpha(p-2).
  Grid g(512);
  struct Case {
    double a, p, alpha;
  };
  for (const Case& c : {Case{0.3, 4.0, 0.1}, Case{0.0, 4.0, 0.25}, Case{0.2, 6.0, 0.05}}) {
    ProblemParams prm(c.a, c.p, c.alpha);
    const double expected = 1.0 - c.a * c.a * (c.p + 2.0) - c.alpha * (c.p - 2.0);
    const double eps = 1e-3;
    auto at = [&](double e) {
      auto u = RealGridFunction::sample(
          g, [e](double s) { return 1.0 + e * (1.0 + std::cos(s)); });
      return quotient_calQ(u, prm);
    };
    const double second = (at(eps) - 2.0 * at(0.0) + at(-eps)) / (eps * eps);
    CHECK(second == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("phase reconstruction") {
  Grid g(512);
  auto one = RealGridFunction::sample(g, [](double) { return 1.0; });
  PhaseData pd = phase_reconstruct(one, 0.3);
  CHECK(pd.multiplier == doctest::Approx(0.3).epsilon(1e-13));
  for (int j = 0; j < g.n; j += 37)
    CHECK(pd.phase[j] == doctest::Approx(0.3 * (g.node(j) + pi)).epsilon(1e-12));

  auto u = RealGridFunction::sample(g, [](double s) { return 1.0 + 0.5 * std::cos(s); });
  double mass = 0.0;
  for (double v : u.values) mass += 1.0 / (v * v);
  mass /= g.n;

  PhaseData pd0 = phase_reconstruct(u, 0.3, 0);
  CHECK(pd0.multiplier * 2.0 * pi * mass == doctest::Approx(2.0 * pi * 0.3).epsilon(1e-10));
  // the stored phase reaches (a+k)*2*pi minus the final trapezoid panel
  const double final_panel =
      pd0.multiplier * 0.5 * g.spacing() * (1.0 / (u[g.n - 1] * u[g.n - 1]) + 1.0 / (u[0] * u[0]));
  CHECK(pd0.phase[g.n - 1] + final_panel == doctest::Approx(2.0 * pi * 0.3).epsilon(1e-10));

  PhaseData pd1 = phase_reconstruct(u, 0.3, 1);
  CHECK(pd1.multiplier * 2.0 * pi * mass == doctest::Approx(2.0 * pi * 1.3).epsilon(1e-10));
  CHECK(pd1.winding == 1);

  auto touching = RealGridFunction::sample(g, [](double s) { return 1.0 + std::cos(s); });
  CHECK_THROWS_AS(phase_reconstruct(touching, 0.3), std::invalid_argument);
}

TEST_CASE("magnetic quotient is stable under grid doubling") {
  auto value_at = [](int n) {
    Grid g(n);
    ProblemParams prm(0.3, 4.0, 0.2);
    auto u = RealGridFunction::sample(g, [](double s) { return 1.0 + 0.5 * std::cos(s); });
    return quotient_calQ(u, prm);
  };
  const double v512 = value_at(512), v1024 = value_at(1024), v4096 = value_at(4096);
  CHECK(std::fabs(v512 - v1024) < 1e-12);
  CHECK(std::fabs(v1024 - v4096) < 1e-12);
}
