#include "hgrf/matern.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <string>

#include "hgrf/errors.hpp"

namespace hgrf {

namespace {

// Orders this close to 1 or 2 switch to the log-limit form of the series, since the
// Gamma-function coefficients of the generic form have poles there.
constexpr double kIntegerBand = 1e-5;

}  // namespace

double bessel_k_power_series(double mu, double r) {
  if (!(mu > 0.0)) throw DomainError("bessel_k_power_series: order must be positive");
  const double lead = std::exp((mu - 1.0) * std::log(2.0) + std::lgamma(mu));
  if (r == 0.0) return lead;

  const double q = 0.25 * r * r;  // (r/2)^2
  const bool near1 = std::abs(mu - 1.0) < kIntegerBand;
  const bool near2 = std::abs(mu - 2.0) < kIntegerBand;
  const double p2 = std::pow(2.0, mu - 1.0);

  double corr = 0.0;
  if (near1) {
    // r K_1(r) = 1 + (r^2/2) (ln(r/2) + gamma_E - 1/2) + O(r^4 ln r)
    const double euler = boost::math::constants::euler<double>();
    corr += lead * 0.5 * r * r * (std::log(0.5 * r) + euler - 0.5);
  } else {
    // regular part: 2^(mu-1) sum_m (-1)^m Gamma(mu-m)/m! (r/2)^(2m)
    corr -= p2 * std::tgamma(mu - 1.0) * q;
    if (!near2) corr += p2 * std::tgamma(mu - 2.0) * q * q * 0.5;
    // singular part: 2^(-mu-1) Gamma(-mu) r^(2 mu) [1 + (r/2)^2/(mu+1) + ...]
    if (!near2 && mu < 2.5) {
      const double s0 = std::tgamma(-mu) * std::pow(2.0, -mu - 1.0) * std::pow(r, 2.0 * mu);
      corr += s0 * (1.0 + q / (mu + 1.0));
    }
  }
  return lead + corr;
}

MaternRadial::MaternRadial(double nu) : nu_(nu) {
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw DomainError("matern: smoothness nu must be positive, got " + std::to_string(nu));
  log_norm_ = (1.0 - nu) * std::log(2.0) - std::lgamma(nu);
}

double MaternRadial::scaled_bessel(double r, int k) const {
  const double mu = nu_ - k;
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  if (r < kSeriesWindow && mu > 0.0) {
    return sign * std::exp(log_norm_) * bessel_k_power_series(mu, r);
  }
  if (r == 0.0) {
    throw SmoothnessError("matern ladder: order " + std::to_string(k) +
                          " is not finite at r = 0 for nu = " + std::to_string(nu_));
  }
  const double kv = boost::math::cyl_bessel_k(std::abs(mu), r);
  if (kv == 0.0) return 0.0;
  return sign * std::exp(log_norm_ + mu * std::log(r) + std::log(kv));
}

double MaternRadial::operator()(double r) const {
  if (!(r >= 0.0)) throw DomainError("matern: radius must be nonnegative");
  if (r == 0.0) return 1.0;
  return scaled_bessel(r, 0);
}

double MaternRadial::ladder(double r, int k) const {
  if (k < 0 || k > kMaxLadderOrder)
    throw DomainError("matern ladder: unsupported order " + std::to_string(k));
  if (!(r >= 0.0)) throw DomainError("matern ladder: radius must be nonnegative");
  if (k == 0) return (*this)(r);
  if (r < kSeriesWindow && !(nu_ > k)) {
    throw SmoothnessError("matern ladder: order " + std::to_string(k) +
                          " is not differentiable near r = 0 for nu = " + std::to_string(nu_));
  }
  return scaled_bessel(r, k);
}

std::array<double, kMaxLadderOrder + 1> MaternRadial::jet(double r, int order) const {
  if (order < 0 || order > kMaxLadderOrder)
    throw DomainError("matern ladder: unsupported order " + std::to_string(order));
  std::array<double, kMaxLadderOrder + 1> g{};
  g[0] = (r == 0.0) ? 1.0 : scaled_bessel(r, 0);
  for (int k = 1; k <= order; ++k) g[k] = scaled_bessel(r, k);
  return g;
}

double matern(double r, double nu) { return MaternRadial(nu)(r); }

double radial_ladder(double r, double nu, int k) { return MaternRadial(nu).ladder(r, k); }

}  // namespace hgrf
