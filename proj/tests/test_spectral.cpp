#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magring/spectral.hpp"
#include "magring/shooting.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace magring;

namespace {

RealGridFunction constant_fn(Grid g, double c) {
  return RealGridFunction(g, std::vector<double>(static_cast<size_t>(g.n), c));
}

// Random real trigonometric polynomial of the given degree with coefficients
// in [-amp, amp].
RealGridFunction random_trig(Grid g, int degree, double amp, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-amp, amp);
  std::vector<double> c(static_cast<size_t>(degree) + 1), s(c.size());
  for (auto& v : c) v = U(rng);
  for (auto& v : s) v = U(rng);
  return RealGridFunction::sample(g, [&](double x) {
    double acc = c[0];
    for (int k = 1; k <= degree; ++k)
      acc += c[static_cast<size_t>(k)] * std::cos(k * x) +
             s[static_cast<size_t>(k)] * std::sin(k * x);
    return acc;
  });
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

}  // namespace

TEST_CASE("assemble produces the expected matrices") {
  Grid g(128);

  SUBCASE("zero potential is diagonal with symbol values") {
    PotentialOperator op = assemble(0.3, constant_fn(g, 0.0), 2);
    REQUIRE(op.dim() == 5);
    const double expect[5] = {2.89, 0.49, 0.09, 1.69, 5.29};  // k=-2..2
    for (int k = -2; k <= 2; ++k) {
      CHECK(op.entry(k, k).real() ==
            doctest::Approx(expect[k + 2]).epsilon(1e-12));
      CHECK(op.entry(k, k).imag() == doctest::Approx(0.0).epsilon(1e-14));
    }
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k)
        if (j != k) CHECK(std::abs(op.entry(j, k)) <= 1e-14);
  }

  SUBCASE("constant potential shifts the diagonal") {
    PotentialOperator op0 = assemble(0.3, constant_fn(g, 0.0), 3);
    PotentialOperator opc = assemble(0.3, constant_fn(g, 0.7), 3);
    for (int k = -3; k <= 3; ++k)
      CHECK(opc.entry(k, k).real() ==
            doctest::Approx(op0.entry(k, k).real() - 0.7).epsilon(1e-12));
  }

  SUBCASE("cosine potential couples adjacent modes with -1/2") {
    RealGridFunction phi =
        RealGridFunction::sample(g, [](double s) { return std::cos(s); });
    PotentialOperator op = assemble(0.25, phi, 4);
    for (int k = -4; k <= 3; ++k) {
      CHECK(op.entry(k + 1, k).real() == doctest::Approx(-0.5).epsilon(1e-12));
      CHECK(op.entry(k, k + 1).real() == doctest::Approx(-0.5).epsilon(1e-12));
    }
    CHECK(std::abs(op.entry(-4, -2)) <= 1e-13);
  }

  SUBCASE("Hermitian for generic potentials") {
    std::mt19937 rng(11);
    RealGridFunction phi = random_trig(g, 8, 0.5, rng);
    PotentialOperator op = assemble(0.37, phi, 16);
    for (int j = -16; j <= 16; ++j)
      for (int k = -16; k <= 16; ++k)
        CHECK(std::abs(op.entry(j, k) - std::conj(op.entry(k, j))) <= 1e-12);
  }

  SUBCASE("cutoff beyond the grid is rejected") {
    Grid small(16);
    CHECK_THROWS_AS(assemble(0.1, constant_fn(small, 0.0), 8),
                    std::invalid_argument);
    CHECK_NOTHROW(assemble(0.1, constant_fn(small, 0.0), 7));
  }
}

TEST_CASE("lambda1 reproduces closed-form spectra") {
  Grid g(256);

  SUBCASE("free operator: min over the symbol") {
    CHECK(lambda1(0.3, constant_fn(g, 0.0), 64) ==
          doctest::Approx(0.09).epsilon(1e-12));
    CHECK(lambda1(0.0, constant_fn(g, 0.0), 64) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lambda1(0.5, constant_fn(g, 0.0), 64) ==
          doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("constant potential shifts the bottom exactly") {
    CHECK(lambda1(0.3, constant_fn(g, 0.05), 64) ==
          doctest::Approx(0.04).epsilon(1e-10));
  }

  SUBCASE("cutoff self-convergence for a smooth potential") {
    Grid big(512);
    RealGridFunction phi = RealGridFunction::sample(
        big, [](double s) { return 0.1 * (1.0 + std::cos(s)); });
    double l64 = lambda1(0.25, phi, 64);
    double l128 = lambda1(0.25, phi, 128);
    CHECK(std::fabs(l64 - l128) <= 1e-8);
    CHECK(std::fabs(lambda1_converged(0.25, phi, 32) - l64) <= 2e-8);
  }
}

TEST_CASE("lambda1 symmetries and monotonicity") {
  Grid g(128);
  std::mt19937 rng(29);
  RealGridFunction phi = random_trig(g, 6, 0.4, rng);

  SUBCASE("gauge shift by one flux quantum") {
    double base = lambda1(0.23, phi, 48);
    CHECK(lambda1(1.23, phi, 48) == doctest::Approx(base).epsilon(1e-10));
    CHECK(lambda1(-0.23, phi, 48) == doctest::Approx(base).epsilon(1e-10));
  }

  SUBCASE("adding a non-negative potential lowers the bottom") {
    RealGridFunction bump = RealGridFunction::sample(
        g, [](double s) { return 0.3 * (1.0 + std::cos(2 * s)); });
    RealGridFunction sum(g, phi.values);
    for (int j = 0; j < g.n; ++j) sum[j] += bump[j];
    CHECK(lambda1(0.31, sum, 48) <= lambda1(0.31, phi, 48) + 1e-12);
  }

  SUBCASE("variational upper bound at random trial states") {
    double lam = lambda1(0.29, phi, 48);
    for (int t = 0; t < 20; ++t) {
      ComplexGridFunction psi = random_complex_trig(g, 8, 1.0, rng);
      double l2sq = 0.0, pot = 0.0;
      for (int j = 0; j < g.n; ++j) {
        double w = std::norm(psi[j]);
        l2sq += w;
        pot += phi[j] * w;
      }
      l2sq /= g.n;
      pot /= g.n;
      if (l2sq < 1e-12) continue;
      double rayleigh = (magnetic_form(psi, 0.29) - pot) / l2sq;
      CHECK(lam <= rayleigh + 1e-10);
    }
  }
}

TEST_CASE("klt_check connects the spectrum to the interpolation constant") {
  Grid g(128);

  SUBCASE("zero potential is tight") {
    ProblemParams prm(0.3, 4.0, 0.1);
    KltReport rep = klt_check(prm, constant_fn(g, 0.0));
    CHECK(rep.q_norm == doctest::Approx(0.0));
    CHECK(rep.lambda1 == doctest::Approx(0.09).epsilon(1e-10));
    CHECK(rep.bound == doctest::Approx(0.09).epsilon(1e-10));
    CHECK(std::fabs(rep.margin) <= 1e-8);
  }

  SUBCASE("constant potentials in the closed-form window are tight") {
    // mu = 0.05: 4 a^2 + mu (p-2) = 0.46 <= 1
    ProblemParams prm(0.3, 4.0, 0.1);
    KltReport rep = klt_check(prm, constant_fn(g, 0.05));
    CHECK(rep.q_norm == doctest::Approx(0.05).epsilon(1e-12));
    // alpha_inverse(0.05) = 0.05 - a^2, so the bound is a^2 - 0.05 = 0.04
    CHECK(rep.bound == doctest::Approx(0.04).epsilon(1e-10));
    CHECK(rep.lambda1 == doctest::Approx(0.04).epsilon(1e-10));
    CHECK(std::fabs(rep.margin) <= 1e-8);
  }

  SUBCASE("random non-negative potentials keep a non-negative margin") {
    std::mt19937 rng(101);
    ProblemParams prm(0.2, 4.0, 0.1);
    for (int t = 0; t < 12; ++t) {
      RealGridFunction w = random_trig(g, 4, 0.25, rng);
      RealGridFunction phi(g, w.values);
      for (int j = 0; j < g.n; ++j) phi[j] = w[j] * w[j];
      KltReport rep = klt_check(prm, phi);
      CHECK(rep.margin >= -1e-8);
    }
  }

  SUBCASE("negative potentials are rejected") {
    ProblemParams prm(0.2, 4.0, 0.1);
    CHECK_THROWS_AS(klt_check(prm, constant_fn(g, -0.2)),
                    std::invalid_argument);
  }
}

TEST_CASE("hardy_tau solves the zero-crossing problem") {
  Grid g(128);

  SUBCASE("closed-form window") {
    // a = 0.3, p = 4: a^2 (p+2) = 0.54 <= 1, phi = 0.05 -> tau = 1.8
    CHECK(hardy_tau(0.3, 4.0, constant_fn(g, 0.05)) ==
          doctest::Approx(1.8).epsilon(1e-10));
  }

  SUBCASE("flux-free limit vanishes") {
    CHECK(hardy_tau(0.0, 4.0, constant_fn(g, 0.3)) == 0.0);
  }

  SUBCASE("outside the window tau drops below a^2/||phi||_q with zero root "
          "residual") {
    // a = 0.45: a^2 (p+2) = 1.215 > 1, so the constant branch is not optimal
    double tau = hardy_tau(0.45, 4.0, constant_fn(g, 0.5));
    CHECK(tau > 0.0);
    CHECK(tau < 0.45 * 0.45 / 0.5);
    CHECK(std::fabs(alpha_inverse(0.45, 4.0, tau * 0.5)) <= 1e-8);
  }

  SUBCASE("zero weight is rejected") {
    CHECK_THROWS_AS(hardy_tau(0.3, 4.0, constant_fn(g, 0.0)),
                    std::invalid_argument);
  }
}
