#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hgrf/covariance.hpp"
#include "hgrf/errors.hpp"
#include "fd_blocks.hpp"
#include "oracles.hpp"

using namespace hgrf;

namespace {

using V = VariableId;
using oracle::fd_block;

ModelParams reference_params() {
  ModelParams p;
  p.sigma_psi = 1.0;
  p.sigma_chi = 0.3;
  p.rho = 0.7;
  p.nu = 5.0;
  p.r1 = 0.25;
  p.r2 = 0.25;
  p.theta = 0.0;
  return p;
}

bool fd_close(double fd, double v) { return std::abs(fd - v) <= 1e-4 * std::abs(v) + 1e-8; }

ModelParams random_params(std::mt19937_64& rng, double nu_min) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  ModelParams p;
  p.sigma_psi = 0.5 + u01(rng);
  p.sigma_chi = 0.2 + u01(rng);
  p.rho = -0.9 + 1.8 * u01(rng);
  p.nu = nu_min + (6.0 - nu_min) * u01(rng);
  p.r1 = 0.3 + 1.2 * u01(rng);
  p.r2 = 0.3 + 1.2 * u01(rng);
  p.theta = std::numbers::pi * u01(rng);
  return p;
}

Eigen::Matrix2d rot(double a) {
  Eigen::Matrix2d q;
  q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return q;
}

Eigen::Matrix2d wind_block(const CrossCovariance& c, Lag h) {
  const std::array<V, 2> w{V::U, V::V};
  return c.block_matrix(w, h);
}

}  // namespace

TEST_CASE("potential block: zero lag and the reference parameters") {
  ModelParams p;
  p.rho = 0.7;
  CHECK(potential_block(p, V::Psi, V::Chi, {0, 0}) == doctest::Approx(0.7).epsilon(1e-15));

  const ModelParams f = reference_params();
  for (double s : {1.0, 2.5}) {
    ModelParams q = f;
    q.sigma_psi = s;
    q.sigma_chi = 0.3 * s;
    CHECK(potential_block(q, V::Psi, V::Psi, {0, 0}) == doctest::Approx(s * s));
    CHECK(potential_block(q, V::Psi, V::Chi, {0, 0}) == doctest::Approx(0.21 * s * s));
    CHECK(potential_block(q, V::Chi, V::Psi, {0, 0}) == doctest::Approx(0.21 * s * s));
    CHECK(potential_block(q, V::Chi, V::Chi, {0, 0}) == doctest::Approx(0.09 * s * s));
  }

  p.rho = 0.0;
  CHECK(potential_block(p, V::Psi, V::Chi, {0.3, -1.1}) == 0.0);
  CHECK_THROWS_AS(potential_block(p, V::U, V::Chi, {0, 0}), DomainError);
}

TEST_CASE("iso table: closed-form examples") {
  ModelParams p;
  p.nu = 3.0;
  p.sigma_psi = 1.0;
  p.sigma_chi = 0.5;
  p.rho = 0.2;
  CHECK(iso_block(p, V::Psi, V::U, {0, 0}) == 0.0);

  const Lag h{0.7, -0.3};
  const double fd = fd_block(p, V::U, V::U, h);
  CHECK(std::abs(iso_block(p, V::U, V::U, h) - fd) <= 1e-5 * std::abs(fd));

  ModelParams q;
  q.nu = 5.0;
  const double fz = fd_block(q, V::Zeta, V::Zeta, {1.0, 0.0});
  CHECK(std::abs(iso_block(q, V::Zeta, V::Zeta, {1.0, 0.0}) - fz) <= 1e-4 * std::abs(fz));

  q.r1 = 2.0;
  CHECK_THROWS_AS(iso_block(q, V::U, V::U, h), DomainError);
}

TEST_CASE("iso table agrees with the chain-rule assembly for every pair") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lag(-2.0, 2.0);
  ModelParams p;
  p.sigma_psi = 1.3;
  p.sigma_chi = 0.7;
  p.rho = -0.4;
  p.nu = 4.2;
  const CrossCovariance cov(p);
  for (int n = 0; n < 20; ++n) {
    const Lag h{lag(rng), lag(rng)};
    for (V i : kAllVariables) {
      for (V j : kAllVariables) {
        CAPTURE(to_string(i));
        CAPTURE(to_string(j));
        const double a = iso_block(p, i, j, h);
        const double b = cov.block(i, j, h);
        CHECK(std::abs(a - b) <= 1e-13 * (1.0 + std::abs(b)));
      }
    }
  }
}

TEST_CASE("every block matches finite differences of the potential covariance") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int failures = 0;
  for (int n = 0; n < 60; ++n) {
    const V i = kAllVariables[rng() % 6];
    const V j = kAllVariables[rng() % 6];
    const int order = std::max(derivative_order(i), derivative_order(j));
    const ModelParams p = random_params(rng, order + 0.1);
    const double ang = 2.0 * std::numbers::pi * u01(rng);
    const double rad = (0.3 + 2.0 * u01(rng)) / std::max(p.r1, p.r2);
    const Lag h{rad * std::cos(ang), rad * std::sin(ang)};
    const double fd = fd_block(p, i, j, h);
    const double v = aniso_block(p, i, j, h);
    if (!fd_close(fd, v)) {
      ++failures;
      MESSAGE(to_string(i) << "," << to_string(j) << " nu=" << p.nu << " fd=" << fd << " v=" << v);
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("generic anisotropic parameters: all blocks against finite differences") {
  ModelParams p;
  p.sigma_psi = 1.0;
  p.sigma_chi = 0.82;
  p.rho = -0.3;
  p.nu = 2.5;
  p.r1 = 1.3;
  p.r2 = 0.6;
  p.theta = 0.4;
  for (const Lag h : {Lag{0.5, 0.2}, Lag{-0.8, 0.9}, Lag{1.7, -0.4}}) {
    for (V i : kAllVariables) {
      for (V j : kAllVariables) {
        CAPTURE(to_string(i));
        CAPTURE(to_string(j));
        CHECK(fd_close(fd_block(p, i, j, h), aniso_block(p, i, j, h)));
      }
    }
  }
}

TEST_CASE("symmetry C_ij(h) = C_ji(-h)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lag(-3.0, 3.0);
  for (int n = 0; n < 1000; ++n) {
    const ModelParams p = random_params(rng, 2.1);
    const V i = kAllVariables[rng() % 6];
    const V j = kAllVariables[rng() % 6];
    const Lag h{lag(rng), lag(rng)};
    const double a = aniso_block(p, i, j, h);
    const double b = aniso_block(p, j, i, -h);
    CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("scalar isotropy: equal scales make the potential block radial") {
  ModelParams p = reference_params();
  p.theta = 1.1;
  const double r = 2.3;
  const double ref = potential_block(p, V::Psi, V::Chi, {r, 0.0});
  for (int k = 0; k < 16; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 16.0;
    CHECK(std::abs(potential_block(p, V::Psi, V::Chi, {r * std::cos(a), r * std::sin(a)}) - ref) <=
          1e-12);
  }
}

TEST_CASE("vector isotropy: C(h) = Q^T C(Q h) Q for the wind block") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  ModelParams p;
  p.sigma_psi = 1.0;
  p.sigma_chi = 0.6;
  p.rho = 0.5;
  p.nu = 2.2;
  p.theta = std::numbers::pi / 6;
  const CrossCovariance cov(p);
  const Eigen::Vector2d h(0.9, -0.4);
  const Eigen::Matrix2d base = wind_block(cov, {h.x(), h.y()});
  for (int k = 0; k < 16; ++k) {
    const Eigen::Matrix2d q = rot(2.0 * std::numbers::pi * u01(rng));
    const Eigen::Vector2d qh = q * h;
    const Eigen::Matrix2d rotated = q.transpose() * wind_block(cov, {qh.x(), qh.y()}) * q;
    CHECK((rotated - base).cwiseAbs().maxCoeff() <= 1e-10);
  }

  // with r1 = r2 = 1 and theta = pi/6, A is itself a rotation, so C = C_iso
  for (V i : {V::U, V::V})
    for (V j : {V::U, V::V}) {
      ModelParams iso = p;
      iso.theta = 0.0;
      CHECK(aniso_block(p, i, j, {h.x(), h.y()}) ==
            doctest::Approx(iso_block(iso, i, j, {h.x(), h.y()})).epsilon(1e-12));
    }
}

TEST_CASE("potential-wind blocks are antisymmetric in the lag") {
  ModelParams p = reference_params();
  p.r2 = 0.4;
  p.theta = 0.3;
  const CrossCovariance cov(p);
  for (const Lag h : {Lag{1.0, 2.0}, Lag{-3.0, 0.5}}) {
    for (V x : {V::Psi, V::Chi}) {
      for (V w : {V::U, V::V}) {
        const double a = cov.block(w, x, h);
        const double b = cov.block(x, w, h);
        CHECK(std::abs(a + b) <= 1e-15 * (1.0 + std::abs(a)));
      }
    }
  }
}

TEST_CASE("correlated potentials: Cov(chi_s, curl psi_t) is divergence free in the lag") {
  ModelParams p;
  p.sigma_psi = 1.0;
  p.sigma_chi = 1.0;
  p.rho = 0.7;
  p.nu = 2.5;
  ModelParams p0 = p;
  p0.rho = 0.0;
  const CrossCovariance with(p);
  const CrossCovariance without(p0);
  // The rho-dependent part of Cov(chi, U) is exactly the chi / curl(psi) cross term.
  auto curl_part = [&](V w, double x, double y) {
    return with.evaluate(V::Chi, w, {x, y}) - without.evaluate(V::Chi, w, {x, y});
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lag(-3.0, 3.0);
  double max_value = 0.0;
  const std::array<int, 1> ax0{0};
  const std::array<int, 1> ax1{1};
  for (int n = 0; n < 200; ++n) {
    const double x = lag(rng);
    const double y = lag(rng);
    const double div =
        oracle::fd_partial([&](double a, double b) { return curl_part(V::U, a, b); }, x, y, ax0, 1e-3) +
        oracle::fd_partial([&](double a, double b) { return curl_part(V::V, a, b); }, x, y, ax1, 1e-3);
    const double mag = std::hypot(curl_part(V::U, x, y), curl_part(V::V, x, y));
    max_value = std::max(max_value, mag);
    CHECK(std::abs(div) <= 1e-6 * std::max(mag, 1e-3));
  }
  CHECK(max_value > 0.01);
}

TEST_CASE("anisotropic wind blocks follow the gradient and curl transforms") {
  // rho = 0 splits U into independent gradient and curl parts; each transforms through A.
  ModelParams p;
  p.sigma_psi = 1.0;
  p.sigma_chi = 0.7;
  p.rho = 0.0;
  p.nu = 3.1;
  p.r1 = 1.4;
  p.r2 = 0.5;
  p.theta = 0.9;
  ModelParams iso_chi = p;
  iso_chi.r1 = iso_chi.r2 = 1.0;
  iso_chi.theta = 0.0;
  ModelParams iso_psi = iso_chi;
  iso_chi.sigma_psi = 0.0;
  iso_psi.sigma_chi = 0.0;

  const Eigen::Matrix2d a = AnisotropyMatrix::from(p).a;
  const Eigen::Matrix2d r = AnisotropyMatrix::rotation();
  const CrossCovariance cov(p);
  const std::array<V, 2> w{V::U, V::V};
  for (const Eigen::Vector2d h : {Eigen::Vector2d(0.6, 0.1), Eigen::Vector2d(-1.2, 2.0)}) {
    const Eigen::Vector2d ah = a * h;
    Eigen::Matrix2d c_chi, c_psi;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        c_chi(i, j) = iso_block(iso_chi, w[i], w[j], {ah.x(), ah.y()});
        c_psi(i, j) = iso_block(iso_psi, w[i], w[j], {ah.x(), ah.y()});
      }
    const Eigen::Matrix2d expect = a.transpose() * c_chi * a +
                                   r * a.transpose() * r.transpose() * c_psi * r * a * r.transpose();
    const Eigen::Matrix2d got = wind_block(cov, {h.x(), h.y()});
    CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + got.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("Laplacian weights r1^4, r2^4, 2 r1^2 r2^2 at theta = 0") {
  ModelParams p;
  p.sigma_chi = 0.9;
  p.nu = 4.5;
  p.r1 = 1.3;
  p.r2 = 0.7;
  const Eigen::Vector2d h(0.8, -0.5);
  const Eigen::Vector2d ah(p.r1 * h.x(), p.r2 * h.y());
  const MaternRadial m(p.nu);
  const LagDerivatives d = lag_derivatives(m, Eigen::Matrix2d::Identity(), {ah.x(), ah.y()}, 4);
  const std::array<int, 4> x4{0, 0, 0, 0}, y4{1, 1, 1, 1}, xy{0, 0, 1, 1};
  const double r1s = p.r1 * p.r1, r2s = p.r2 * p.r2;
  const double expect = p.sigma_chi * p.sigma_chi *
                        (r1s * r1s * d(x4) + r2s * r2s * d(y4) + 2.0 * r1s * r2s * d(xy));
  CHECK(aniso_block(p, V::Div, V::Div, {h.x(), h.y()}) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("degenerate sub-model: pure rotational wind") {
  ModelParams p;
  p.sigma_psi = 1.5;
  p.sigma_chi = 0.0;
  p.rho = 0.0;
  p.nu = 3.0;
  const Lag h{0.4, 0.9};
  // Cov(u, v) = Cov(-d2 psi_s, d1 psi_t) = d1 d2 C_psipsi in lag form
  const std::array<int, 2> ax{0, 1};
  const double expect = oracle::fd_partial(
      [&](double x, double y) { return potential_block(p, V::Psi, V::Psi, {x, y}); }, h.h1, h.h2,
      ax, 1e-3);
  CHECK(fd_close(expect, aniso_block(p, V::U, V::V, h)));
  CHECK(aniso_block(p, V::Div, V::Div, h) == 0.0);
}

TEST_CASE("joint matrix: collocated potentials, Cholesky and eigenvalues") {
  const ModelParams f = reference_params();
  const std::vector<Site> pot{{V::Psi, 0.3, 0.4}, {V::Chi, 0.3, 0.4}};
  const Eigen::MatrixXd s = joint_matrix(f, pot);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(0.21));
  CHECK(s(1, 1) == doctest::Approx(0.09));

  const std::vector<Site> wind{{V::U, 0, 0}, {V::V, 0, 0}, {V::U, 1, 1}, {V::V, 1, 1}};
  const Eigen::MatrixXd k = joint_matrix(f, wind);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(k).info() == Eigen::Success);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> loc(0.0, 10.0);
  std::vector<Site> all;
  for (int n = 0; n < 5; ++n) {
    const double x = loc(rng), y = loc(rng);
    for (V v : kAllVariables) all.push_back({v, x, y});
  }
  const Eigen::MatrixXd big = joint_matrix(f, all);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(big).eigenvalues().minCoeff();
  CHECK(min_eig >= -1e-8 * big.trace());

  const Eigen::MatrixXd cm = cross_matrix(CrossCovariance(f), all, wind);
  CHECK(cm(7, 2) == doctest::Approx(aniso_block(f, all[7].var, V::U, {1 - all[7].x, 1 - all[7].y})));
}

TEST_CASE("smoothness gate names the offending block") {
  ModelParams p;
  p.nu = 1.5;
  CHECK_NOTHROW(aniso_block(p, V::U, V::V, {0, 0}));
  try {
    aniso_block(p, V::Psi, V::Zeta, {0.1, 0.0});
    FAIL("expected a smoothness error");
  } catch (const SmoothnessError& e) {
    CHECK(std::string(e.what()).find("zeta") != std::string::npos);
  }
  p.nu = 1.0;
  CHECK_THROWS_AS(aniso_block(p, V::U, V::U, {0, 0}), SmoothnessError);
  const std::vector<Site> s{{V::Div, 0, 0}};
  CHECK_THROWS_AS(joint_matrix(p, s), SmoothnessError);
}

TEST_CASE("parameters: validation, normalization and canonical form") {
  ModelParams p;
  p.rho = 1.2;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.rho = 0.0;
  p.sigma_psi = 0.0;
  p.sigma_chi = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);

  ModelParams q;
  q.theta = -0.25;
  CHECK(q.normalized().theta == doctest::Approx(std::numbers::pi - 0.25));

  ModelParams a;
  a.nu = 2.5;
  a.r1 = 0.5;
  a.r2 = 1.5;
  a.theta = 0.3;
  const ModelParams c = a.canonical();
  CHECK(c.r1 == 1.5);
  CHECK(c.r2 == 0.5);
  for (const Lag h : {Lag{0.3, 0.7}, Lag{-1.0, 0.2}})
    CHECK(aniso_block(a, V::U, V::V, h) == doctest::Approx(aniso_block(c, V::U, V::V, h)).epsilon(1e-12));

  CHECK(parse_variable("zeta") == V::Zeta);
  CHECK_THROWS_AS(parse_variable("w"), ParseError);
  CHECK(unit_of(V::Div) == "1/s");
}
