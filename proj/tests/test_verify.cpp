#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magring/verify.hpp"
#include "magring/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace magring;

namespace {

RealGridFunction random_nonneg(Grid g, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(0.0, 2.0);
  std::vector<double> v(static_cast<size_t>(g.n));
  for (auto& x : v) x = U(rng);
  return RealGridFunction(g, std::move(v));
}

ComplexGridFunction random_complex_trig(Grid g, int degree, double amp,
                                        std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-amp, amp);
  std::vector<std::complex<double>> c(2 * static_cast<size_t>(degree) + 1);
  for (auto& v : c) v = std::complex<double>(U(rng), U(rng));
  return ComplexGridFunction::sample(g, [&](double x) {
    std::complex<double> acc = 0.0;
    for (int k = -degree; k <= degree; ++k)
      acc += c[static_cast<size_t>(k + degree)] *
             std::exp(std::complex<double>(0.0, k * x));
    return acc;
  });
}

double relative_oscillation(const RealGridFunction& u) {
  double lo = u.values.front(), hi = lo, mean = 0.0;
  for (double v : u.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= u.grid.n;
  return (hi - lo) / std::fabs(mean);
}

}  // namespace

TEST_CASE("direct minimization recovers the constant in the rigid regime") {
  ProblemParams prm(0.3, 4.0, 0.0);

  SUBCASE("real positive space") {
    OracleResult r = direct_minimize(prm, OracleSpace::real_positive);
    CHECK(std::fabs(r.mu_hat - 0.09) <= 1e-5);
    CHECK(relative_oscillation(r.minimizer) <= 1e-4);
    CHECK(r.gradient_norm <= 1e-7);
  }

  SUBCASE("complex space agrees") {
    OracleResult r = direct_minimize(prm, OracleSpace::complex_periodic);
    CHECK(std::fabs(r.mu_hat - 0.09) <= 1e-5);
    CHECK(relative_oscillation(r.minimizer) <= 1e-4);
  }
}

TEST_CASE("direct minimization beats the constant past the threshold") {
  ProblemParams prm(0.2, 4.0, 1.0);
  OracleResult r = direct_minimize(prm, OracleSpace::real_positive);
  CHECK(r.mu_hat < 1.04);

  ShootingResult b = solve_branch(prm);
  CHECK(std::fabs(r.mu_hat - b.mu) <= 1e-4);
  // the minimizer is genuinely non-constant
  CHECK(relative_oscillation(r.minimizer) > 0.1);
}

TEST_CASE("dirichlet minimization matches the endpoint shooting value") {
  // the Dirichlet quotient carries no flux term, so any admissible a works
  ProblemParams prm(0.2, 4.0, 0.0);
  OracleResult r = direct_minimize(prm, OracleSpace::dirichlet);
  double nu = dirichlet_nu(4.0, 0.0).mu;
  CHECK(std::fabs(r.mu_hat - nu) <= 1e-4);
  // endpoint values vanish by construction of the trial space
  CHECK(std::fabs(r.minimizer.values[0]) <= 1e-8);
}

TEST_CASE("dissipative flow: stationarity, decay, and conserved p-mass") {
  Grid g(128);
  const double dt = pi * pi / (g.n * double(g.n));

  SUBCASE("constants are stationary with zero functional") {
    RealGridFunction u0(g, std::vector<double>(static_cast<size_t>(g.n), 2.0));
    auto states = bakry_emery_flow(u0, 4.0, dt, 0.05);
    REQUIRE(states.size() > 10);
    for (const auto& st : states) {
      CHECK(std::fabs(st.functional_value) <= 1e-12);
      CHECK(std::fabs(st.mass_p - 16.0) <= 1e-10);
      for (double v : st.u.values) CHECK(std::fabs(v - 2.0) <= 1e-10);
    }
  }

  SUBCASE("cosine datum relaxes to a constant") {
    RealGridFunction u0 = RealGridFunction::sample(
        g, [](double s) { return 1.0 + 0.3 * std::cos(s); });
    auto states = bakry_emery_flow(u0, 4.0, dt, 8.0);
    REQUIRE(states.size() > 100);
    // per-step dissipation and global decay to zero
    for (size_t k = 1; k < states.size(); ++k)
      CHECK(states[k].functional_value <=
            states[k - 1].functional_value + 1e-10);
    CHECK(states.front().functional_value > 1e-3);
    CHECK(states.back().functional_value >= -1e-12);
    CHECK(states.back().functional_value <= 1e-6);
    // p-mass conserved over the whole horizon
    CHECK(std::fabs(states.back().mass_p - states.front().mass_p) <= 1e-8);
    // terminal profile is nearly flat
    CHECK(relative_oscillation(states.back().u) <= 1e-3);
  }

  SUBCASE("oversized steps abort with a diagnostic") {
    RealGridFunction u0 = RealGridFunction::sample(
        g, [](double s) { return 1.0 + 0.9 * std::cos(3.0 * s); });
    CHECK_THROWS_AS(bakry_emery_flow(u0, 4.0, 0.05, 5.0), solver_error);
  }

  SUBCASE("invalid inputs are rejected") {
    RealGridFunction bad = RealGridFunction::sample(
        g, [](double s) { return std::cos(s); });  // touches zero
    CHECK_THROWS_AS(bakry_emery_flow(bad, 4.0, dt, 0.1),
                    std::invalid_argument);
    RealGridFunction ok(g, std::vector<double>(static_cast<size_t>(g.n), 1.0));
    CHECK_THROWS_AS(bakry_emery_flow(ok, 2.0, dt, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(bakry_emery_flow(ok, 4.0, -dt, 0.1),
                    std::invalid_argument);
  }
}

TEST_CASE("rearrangement inequality on the grid") {
  Grid g(256);
  std::mt19937 rng(2024);

  SUBCASE("p = 2 is an equality for any pair") {
    for (int t = 0; t < 5; ++t) {
      RealGridFunction f = random_nonneg(g, rng), h = random_nonneg(g, rng);
      auto [lhs, rhs] = rearrangement_check(f, h, 2.0);
      CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, rhs));
    }
  }

  SUBCASE("already-rearranged pairs give equality") {
    RealGridFunction f = rearrange_decreasing(random_nonneg(g, rng));
    RealGridFunction h = rearrange_decreasing(random_nonneg(g, rng));
    auto [lhs, rhs] = rearrangement_check(f, h, 4.0);
    CHECK(lhs == rhs);
  }

  SUBCASE("100 random pairs at p = 4") {
    for (int t = 0; t < 100; ++t) {
      RealGridFunction f = random_nonneg(g, rng), h = random_nonneg(g, rng);
      auto [lhs, rhs] = rearrangement_check(f, h, 4.0);
      CHECK(lhs <= rhs + 1e-10);
    }
  }

  SUBCASE("negative inputs are rejected") {
    RealGridFunction f = random_nonneg(g, rng);
    RealGridFunction neg = RealGridFunction::sample(
        g, [](double s) { return std::cos(s); });
    CHECK_THROWS_AS(rearrangement_check(f, neg, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(rearrangement_check(f, f, 1.5), std::invalid_argument);
  }
}

TEST_CASE("diamagnetic inequality on the grid") {
  Grid g(256);
  std::mt19937 rng(7);

  SUBCASE("real positive profile at zero flux is a near-equality") {
    ComplexGridFunction psi = ComplexGridFunction::sample(
        g, [](double s) { return std::complex<double>(1.0 + 0.5 * std::cos(s),
                                                      0.0); });
    auto [lhs, rhs] = diamagnetic_check(psi, 0.0);
    CHECK(lhs <= rhs);
    CHECK(rhs - lhs <= 1e-3 * rhs);
  }

  SUBCASE("flat state carries pure magnetic energy") {
    ComplexGridFunction psi(
        g, std::vector<std::complex<double>>(static_cast<size_t>(g.n), 1.0));
    auto [lhs, rhs] = diamagnetic_check(psi, 0.3);
    CHECK(lhs == 0.0);
    CHECK(rhs == doctest::Approx(0.3).epsilon(1e-12));
  }

  SUBCASE("100 random band-limited states") {
    for (int t = 0; t < 100; ++t) {
      ComplexGridFunction psi = random_complex_trig(g, 8, 1.0, rng);
      auto [lhs, rhs] = diamagnetic_check(psi, 0.25);
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("solver and direct oracle agree across both regimes") {
  // 3 flux values x 2 exponents x 4 shifts, straddling the rigidity boundary
  for (double a : {0.1, 0.3, 0.45})
    for (double p : {3.0, 4.0})
      for (double alpha : {0.0, 0.3, 0.8, 1.5}) {
        CAPTURE(a);
        CAPTURE(p);
        CAPTURE(alpha);
        ProblemParams prm(a, p, alpha);
        double mu_shoot = mu(prm);
        OracleResult r = direct_minimize(prm, OracleSpace::real_positive);
        CHECK(std::fabs(r.mu_hat - mu_shoot) <= 1e-4);
      }
}

TEST_CASE("direct interpolation inequalities on random profiles") {
  Grid g(256);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto random_band = [&](double offset) {
    return RealGridFunction::sample(g, [&, offset](double s) {
      double acc = offset + U(rng);
      for (int k = 1; k <= 8; ++k)
        acc += U(rng) * std::cos(k * s) + U(rng) * std::sin(k * s);
      return acc;
    });
  };

  SUBCASE("gradient-plus-shift dominates the p-norm for small shifts") {
    std::uniform_real_distribution<double> Up(2.2, 6.0);
    for (int t = 0; t < 100; ++t) {
      double p = Up(rng);
      std::uniform_real_distribution<double> Ub(1e-3, 1.0 / (p - 2.0));
      double beta = Ub(rng);
      RealGridFunction u = random_band(0.0);
      double du2 = std::pow(lp_norm(derivative(u), 2.0), 2);
      double l2 = std::pow(lp_norm(u, 2.0), 2);
      double lp = std::pow(lp_norm(u, p), 2);
      CHECK(du2 + beta * l2 >= beta * lp - 1e-10 * std::max(1.0, lp));
    }
  }

  SUBCASE("gradient plus quarter harmonic mean dominates the 2-norm") {
    for (int t = 0; t < 100; ++t) {
      RealGridFunction u = random_band(12.0);  // positive: offset beats band sum
      REQUIRE(*std::min_element(u.values.begin(), u.values.end()) > 0.0);
      double du2 = std::pow(lp_norm(derivative(u), 2.0), 2);
      double harm = std::pow(lp_norm(u, -2.0), 2);  // (mean u^-2)^-1
      double l2 = std::pow(lp_norm(u, 2.0), 2);
      CHECK(du2 + 0.25 * harm >= 0.25 * l2 - 1e-10 * std::max(1.0, l2));
    }
    // constants meet it with equality
    RealGridFunction c(g, std::vector<double>(static_cast<size_t>(g.n), 3.0));
    double harm = std::pow(lp_norm(c, -2.0), 2);
    double l2 = std::pow(lp_norm(c, 2.0), 2);
    CHECK(std::fabs(0.25 * harm - 0.25 * l2) <= 1e-10);
  }
}

TEST_CASE("quadratic coefficient of the quotient at the constant") {
  SUBCASE("neutral at the branching point") {
    double c = taylor_coefficient_check(ProblemParams(0.45, 4.0, -0.1075));
    CHECK(std::fabs(c) <= 1e-3);
  }

  SUBCASE("flux-free closed form") {
    double c = taylor_coefficient_check(ProblemParams(0.0, 4.0, 0.25));
    CHECK(std::fabs(c - 0.5) <= 0.005);
  }

  SUBCASE("negative curvature past the threshold") {
    double c = taylor_coefficient_check(ProblemParams(0.2, 4.0, 1.0));
    CHECK(std::fabs(c - (-1.24)) <= 0.0124);
  }

  SUBCASE("matches the closed form on a small parameter sweep") {
    for (double a : {0.1, 0.3, 0.45})
      for (double alpha : {0.0, 0.5, 2.0}) {
        double expect = 1.0 - a * a * 6.0 - alpha * 2.0;
        double c = taylor_coefficient_check(ProblemParams(a, 4.0, alpha));
        CHECK(std::fabs(c - expect) <=
              0.01 * std::max(1.0, std::fabs(expect)));
      }
  }
}
