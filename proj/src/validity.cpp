#include "hgrf/validity.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hgrf/errors.hpp"

namespace hgrf {

namespace {

constexpr double kTolerance = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

ValidityReport daley_valid(const DaleyParams& q) {
  if (!(q.a > 0.0) || !std::isfinite(q.a)) throw DomainError("daley: a must be positive");
  if (!std::isfinite(q.lambda)) throw DomainError("daley: lambda must be finite");
  if (q.lambda == 0.0) return {true, "lambda = 0: uncorrelated potentials are always valid"};
  if (q.a > 1.0)
    return {false, "a = " + fmt(q.a) + " > 1: not positive definite unless lambda = 0"};
  const double l2 = q.lambda * q.lambda;
  if (q.a >= l2)
    return {true, "a = " + fmt(q.a) + " <= 1 and a >= lambda^2 = " + fmt(l2)};
  return {false, "a = " + fmt(q.a) + " < lambda^2 = " + fmt(l2)};
}

std::vector<double> default_frequency_grid() {
  constexpr int n = 512;
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = std::pow(10.0, -3.0 + 6.0 * i / (n - 1));
  return f;
}

SpectralReport spectral_valid(const SpectralModel& s, std::span<const double> freq) {
  if (freq.empty()) throw DomainError("spectral check: empty frequency grid");
  SpectralReport rep;
  rep.min_det = std::numeric_limits<double>::infinity();
  rep.min_diag = std::numeric_limits<double>::infinity();
  for (double phi : freq) {
    if (!(phi > 0.0)) throw DomainError("spectral check: frequencies must be positive");
    const LogSpectrum v = s(phi);
    rep.min_diag = std::min({rep.min_diag, std::exp(v.log_s11), std::exp(v.log_s22)});
    double det;
    if (v.log_abs_s12 == kNegInf) {
      det = 1.0;
    } else if (v.log_s11 == kNegInf || v.log_s22 == kNegInf) {
      det = -std::numeric_limits<double>::infinity();
    } else {
      det = -std::expm1(2.0 * v.log_abs_s12 - v.log_s11 - v.log_s22);
    }
    if (det < rep.min_det) {
      rep.min_det = det;
      rep.worst_frequency = phi;
    }
  }
  rep.valid = rep.min_det >= -kTolerance && rep.min_diag >= -kTolerance;
  rep.reason = (rep.valid ? "spectral matrix nonnegative on all sampled frequencies"
                          : "normalized determinant " + fmt(rep.min_det) + " at frequency " +
                                fmt(rep.worst_frequency));
  return rep;
}

SpectralModel matern_spectrum(const ModelParams& p) {
  p.validate();
  const double base = std::log(p.nu / std::numbers::pi) - std::log(p.r1 * p.r2);
  const double l11 = 2.0 * safe_log(p.sigma_psi);
  const double l22 = 2.0 * safe_log(p.sigma_chi);
  const double l12 = safe_log(std::abs(p.rho) * p.sigma_psi * p.sigma_chi);
  const double nu = p.nu;
  return [=](double phi) {
    const double lf = base - (nu + 1.0) * std::log1p(phi * phi);
    return LogSpectrum{l11 + lf, l22 + lf, l12 + lf};
  };
}

SpectralReport spectral_valid(const ModelParams& p, std::span<const double> freq) {
  return spectral_valid(matern_spectrum(p), freq);
}

SpectralReport spectral_valid(const ModelParams& p) {
  const auto f = default_frequency_grid();
  return spectral_valid(p, f);
}

SpectralModel daley_spectrum(const DaleyParams& q, DaleyTransform t) {
  if (!(q.a > 0.0)) throw DomainError("daley: a must be positive");
  // transform of exp(-(a r)^2 / 2) is a^-d exp(-phi^2 / (2 a^2)) in d dimensions (up to 2 pi factors)
  const double d = (t == DaleyTransform::Radial1D) ? 1.0 : 2.0;
  const double la = std::log(q.a);
  const double ll = safe_log(std::abs(q.lambda));
  const double a2 = q.a * q.a;
  return [=](double phi) {
    const double g = -0.5 * phi * phi / a2 - d * la;
    return LogSpectrum{-0.5 * phi * phi, g, ll + g};
  };
}

}  // namespace hgrf
