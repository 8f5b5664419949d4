#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hgrf/covariance.hpp"

namespace hgrf {

/// Gaussian-kernel bivariate model for (psi, chi):
///   C11 = exp(-r^2/2), C12 = lambda exp(-(a r)^2/2), C22 = exp(-(a r)^2/2).
/// `a` is read as an inverse scale so that the model matches its stated Fourier transform.
struct DaleyParams {
  double a = 1.0;
  double lambda = 0.0;
};

struct ValidityReport {
  bool valid = false;
  std::string reason;
};

/// Closed-form criterion: valid iff lambda = 0, or a <= 1 and a >= lambda^2.
/// Throws DomainError for a <= 0.
ValidityReport daley_valid(const DaleyParams& q);

/// A 2x2 spectral density at one radial frequency, in log magnitude so that rapidly
/// decaying spectra do not underflow. Off-diagonal sign is irrelevant for the determinant.
/// -infinity encodes an exact zero.
struct LogSpectrum {
  double log_s11;
  double log_s22;
  double log_abs_s12;
};

using SpectralModel = std::function<LogSpectrum(double)>;

struct SpectralReport {
  bool valid = false;
  /// min over frequencies of det(S) / (S11 S22) = 1 - coherence^2.
  double min_det = 0.0;
  /// min over frequencies of min(S11, S22).
  double min_diag = 0.0;
  /// Frequency at which min_det was attained.
  double worst_frequency = 0.0;
  std::string reason;
};

/// 512 log-spaced radial frequencies over [1e-3, 1e3].
std::vector<double> default_frequency_grid();

/// Samples the spectral matrix on freq and declares it valid iff the normalized determinant
/// and the diagonal stay >= -1e-12 everywhere. The determinant is normalized by the diagonal
/// product, since the raw determinant of a decaying spectrum falls below any fixed tolerance.
SpectralReport spectral_valid(const SpectralModel& s, std::span<const double> freq);

/// Radial spectral density of the bivariate Matern model, evaluated in the A-transformed frame:
/// Sigma * nu / pi * (1 + phi^2)^(-nu - 1) / (r1 r2).
SpectralModel matern_spectrum(const ModelParams& p);

SpectralReport spectral_valid(const ModelParams& p, std::span<const double> freq);
SpectralReport spectral_valid(const ModelParams& p);

enum class DaleyTransform {
  /// The one-dimensional transform of the radial profile.
  Radial1D,
  /// The two-dimensional (Hankel) transform; valid region {a <= 1, a >= |lambda|} ∪ {lambda = 0}.
  Hankel2D,
};

SpectralModel daley_spectrum(const DaleyParams& q, DaleyTransform t = DaleyTransform::Radial1D);

}  // namespace hgrf
