#pragma once

#include <array>

namespace hgrf {

/// Highest order of the radial derivative ladder (enough for fourth-order covariance blocks).
inline constexpr int kMaxLadderOrder = 4;

/// Radii below this use the small-argument series of r^mu K_mu(r) instead of the Bessel routine.
inline constexpr double kSeriesWindow = 1e-4;

/// Unit-scale Matern correlation M(r, nu) = 2^(1-nu) / Gamma(nu) * r^nu * K_nu(r).
///
/// The ladder g_k = ((1/r) d/dr)^k M follows from d/dr [r^mu K_mu(r)] = -r^mu K_(mu-1)(r):
///
///     g_k(r) = (-1)^k * 2^(1-nu) / Gamma(nu) * r^(nu-k) * K_(nu-k)(r),
///
/// with K_(-mu) = K_mu. g_k has a finite limit at r = 0 iff nu > k.
class MaternRadial {
public:
  explicit MaternRadial(double nu);

  double nu() const noexcept { return nu_; }

  /// M(r, nu); throws DomainError for r < 0.
  double operator()(double r) const;

  /// g_k(r). Throws DomainError for k outside 0..4 and SmoothnessError when nu <= k
  /// and r lies inside the series window (the limit does not exist).
  double ladder(double r, int k) const;

  /// g_0..g_order at r in one pass. Unlike ladder(), orders with nu <= k are
  /// evaluated from the Bessel form for any r > 0, because block assembly multiplies
  /// them by powers of the lag that make the product finite. At r = 0 every requested
  /// order must satisfy nu > k.
  std::array<double, kMaxLadderOrder + 1> jet(double r, int order) const;

private:
  double scaled_bessel(double r, int k) const;  // (-1)^k c_nu r^(nu-k) K_(nu-k)(r)

  double nu_;
  double log_norm_;  // log(2^(1-nu) / Gamma(nu))
};

/// Free-function form of MaternRadial::operator(); nu <= 0 or r < 0 is a DomainError.
double matern(double r, double nu);

/// Free-function form of MaternRadial::ladder.
double radial_ladder(double r, double nu, int k);

/// r^mu K_mu(r) for mu > 0 and 0 <= r < kSeriesWindow from its small-argument expansion.
/// Exposed for testing the series/Bessel switch.
double bessel_k_power_series(double mu, double r);

}  // namespace hgrf
