#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "hgrf/covariance.hpp"
#include "hgrf/grid.hpp"

namespace hgrf {

struct SimulationOptions {
  /// Largest torus size as a multiple of the grid (tried 2, 4, ... up to this).
  int max_padding = 8;
  /// Negative spectral eigenvalues down to -clip_tolerance * max eigenvalue are set to zero.
  double clip_tolerance = 1e-9;
};

/// Multivariate circulant embedding on a periodic torus.
///
/// The covariance blocks C_ij(h) of the requested variables are laid out on a torus of
/// pad*nx by pad*ny lags; each Fourier frequency then carries a p x p Hermitian spectral
/// matrix whose factor maps independent complex normals to a correlated p-vector.
/// The real part of the inverse transform is one exact realization on the grid.
class CirculantSimulator {
public:
  /// Throws SmoothnessError for unsupported variables and SimulationError if no padding up to
  /// max_padding gives a nonnegative embedding.
  CirculantSimulator(const ModelParams& p, const GridSpec& g, std::vector<VariableId> vars,
                     const SimulationOptions& opts = {});
  ~CirculantSimulator();
  CirculantSimulator(const CirculantSimulator&) = delete;
  CirculantSimulator& operator=(const CirculantSimulator&) = delete;

  /// Realization `index` of the run seeded with `seed`; bit-identical for equal arguments
  /// and safe to call concurrently.
  GridField realization(std::uint64_t seed, std::uint64_t index) const;

  const GridSpec& grid() const { return grid_; }
  const std::vector<VariableId>& variables() const { return vars_; }
  int padding() const { return pad_; }
  /// Most negative eigenvalue set to zero (0 if none was clipped).
  double clipped_eigenvalue() const { return clipped_; }
  /// Number of clipped eigenvalues.
  long clipped_count() const { return clipped_count_; }

private:
  bool embed(const CrossCovariance& cov, int pad, double tol, double& most_negative);

  GridSpec grid_;
  std::vector<VariableId> vars_;
  int pad_ = 0;
  int m1_ = 0;
  int m2_ = 0;
  double clipped_ = 0.0;
  long clipped_count_ = 0;
  // factor_[w * p * p + i * p + j]: factor F(w) with F F^H = S(w)
  std::vector<std::complex<double>> factor_;
  struct Plan;
  std::unique_ptr<Plan> plan_;
};

/// n realizations with substreams 0..n-1 of seed. Runs in parallel over realizations.
std::vector<GridField> simulate(const ModelParams& p, const GridSpec& g,
                                const std::vector<VariableId>& vars, std::uint64_t seed, int n,
                                const SimulationOptions& opts = {});

}  // namespace hgrf
