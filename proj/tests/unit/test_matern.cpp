#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "hgrf/errors.hpp"
#include "hgrf/matern.hpp"
#include "oracles.hpp"

using namespace hgrf;

namespace {

// M(1, 1.24) from a 30-digit evaluation of 2^(1-nu)/Gamma(nu) r^nu K_nu(r); the
// trapezoid oracle below reproduces it independently.
constexpr double kMaternGolden = 0.675649859008386483;

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

}  // namespace

TEST_CASE("matern: closed forms and golden value") {
  CHECK(matern(0.0, 1.5) == 1.0);
  CHECK(matern(2.0, 0.5) == doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
  CHECK(matern(1.0, 1.24) == doctest::Approx(kMaternGolden).epsilon(1e-13));

  const double quad = oracle::matern_quadrature(1.0, 1.24);
  CHECK(rel_err(quad, kMaternGolden) < 1e-12);
}

TEST_CASE("matern: agrees with the quadrature oracle over a grid") {
  for (double nu : {0.3, 0.5, 1.24, 2.0, 3.7, 5.0}) {
    for (double r : {1e-3, 0.05, 0.4, 1.0, 3.3, 9.0}) {
      CAPTURE(nu);
      CAPTURE(r);
      CHECK(rel_err(matern(r, nu), oracle::matern_quadrature(r, nu)) < 1e-10);
    }
  }
}

TEST_CASE("matern: domain errors") {
  CHECK_THROWS_AS(matern(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(matern(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(matern(-0.1, 1.0), DomainError);
  CHECK_THROWS_AS(radial_ladder(1.0, 3.0, 5), DomainError);
  CHECK_THROWS_AS(radial_ladder(1.0, 3.0, -1), DomainError);
  CHECK_THROWS_AS(radial_ladder(0.0, 1.0, 1), SmoothnessError);
  CHECK_THROWS_AS(radial_ladder(5e-5, 2.5, 3), SmoothnessError);
  // outside the series window the ladder exists for any order
  CHECK(std::isfinite(radial_ladder(0.5, 2.5, 3)));
}

TEST_CASE("matern: monotone, positive, vanishing tail") {
  for (double nu : {0.5, 1.24, 2.5, 5.0}) {
    double prev = 1.0;
    for (double r = 0.0; r <= 30.0; r += 0.05) {
      const double m = matern(r, nu);
      CHECK(m > 0.0);
      CHECK(m <= prev + 1e-15);
      prev = m;
    }
    CHECK(matern(50.0, nu) < 1e-10);
  }
}

TEST_CASE("ladder: first order against a central difference") {
  const double r = 1.0;
  const double nu = 3.0;
  const double fd = oracle::fd5([&](double x) { return matern(x, nu); }, r, 1e-3) / r;
  CHECK(rel_err(radial_ladder(r, nu, 1), fd) < 1e-6);
}

TEST_CASE("ladder: limits at the origin") {
  // g_1(0) = -1 / (2 (nu - 1))
  CHECK(radial_ladder(0.0, 3.0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
  // general limit (-1)^k 2^-k Gamma(nu - k) / Gamma(nu)
  for (double nu : {2.3, 4.5, 5.0}) {
    for (int k = 0; k < nu && k <= 4; ++k) {
      const double expect =
          std::pow(-0.5, k) * std::tgamma(nu - k) / std::tgamma(nu);
      CHECK(radial_ladder(0.0, nu, k) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("ladder: fourth order against nested differences") {
  const double nu = 5.0;
  const double d = 0.02;
  std::function<double(double)> g0 = [&](double x) { return matern(x, nu); };
  std::function<double(double)> g1 = [&](double x) { return oracle::fd5(g0, x, d) / x; };
  std::function<double(double)> g2 = [&](double x) { return oracle::fd5(g1, x, d) / x; };
  std::function<double(double)> g3 = [&](double x) { return oracle::fd5(g2, x, d) / x; };
  const double fd4 = oracle::fd5(g3, 0.5, d) / 0.5;
  CHECK(rel_err(radial_ladder(0.5, nu, 4), fd4) < 1e-4);
}

TEST_CASE("ladder: recurrence g_{k+1} = g_k' / r on a log grid") {
  // Orders whose g_k behaves like r^(2(nu-k)) near zero carry a stencil truncation error
  // (p-1)(p-2)/6 (h/r)^2 at the smallest radii; those combinations are limited to k + 1 <= nu + 1.
  for (double nu : {0.6, 1.24, 2.5, 5.0}) {
    const MaternRadial m(nu);
    for (int k = 0; k < kMaxLadderOrder && k + 1 <= nu + 1.0; ++k) {
      for (int i = 0; i <= 40; ++i) {
        const double r = 1e-3 * std::pow(2e4, i / 40.0);
        const double h = 1e-5 * std::max(r, 1.0);
        const double fd = (m.ladder(r + h, k) - m.ladder(r - h, k)) / (2.0 * h * r);
        const double exact = m.ladder(r, k + 1);
        CAPTURE(nu);
        CAPTURE(k);
        CAPTURE(r);
        CHECK(std::abs(exact - fd) / std::max(std::abs(exact), 1e-12) <= 1e-4);
      }
    }
  }
}

TEST_CASE("ladder: continuity across the series window") {
  const double below = kSeriesWindow * (1.0 - 1e-12);
  const double at = kSeriesWindow;
  for (double nu = 0.55; nu <= 6.0; nu += 0.0937) {
    const MaternRadial m(nu);
    for (int k = 0; k <= 4 && k < nu; ++k) {
      const double left = m.ladder(below, k);
      const double right = m.ladder(at, k);
      CAPTURE(nu);
      CAPTURE(k);
      CHECK(std::abs(left - right) / std::abs(right) < 1e-10);
    }
  }
  // integer-adjacent orders exercise the log-limit branch of the series
  for (double mu : {1.0, 1.0 + 5e-6, 1.0 - 5e-6, 2.0, 2.0 + 3e-6, 3.0}) {
    const double s = bessel_k_power_series(mu, below);
    const double b = std::pow(at, mu) * oracle::bessel_k_quadrature(mu, at, 1e-4);
    CAPTURE(mu);
    CHECK(std::abs(s - b) / b < 1e-10);
  }
}

TEST_CASE("ladder: jet evaluates orders above nu away from the origin") {
  const MaternRadial m(2.5);
  const auto g = m.jet(5e-5, 4);
  CHECK(std::isfinite(g[3]));
  CHECK(std::isfinite(g[4]));
  CHECK_THROWS_AS(m.jet(0.0, 3), SmoothnessError);
  const auto g0 = m.jet(0.0, 2);
  CHECK(g0[2] == doctest::Approx(0.25 * std::tgamma(0.5) / std::tgamma(2.5)));
}
