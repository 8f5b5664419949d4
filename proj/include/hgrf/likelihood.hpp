#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hgrf/covariance.hpp"
#include "hgrf/grid.hpp"

namespace hgrf {

/// Integer grid lag (steps along x and y).
struct GridLag {
  int dx = 0;
  int dy = 0;
  bool operator==(const GridLag&) const = default;
};

/// Lags entering the pairwise likelihood. Only one of each +/- pair is kept, and the zero
/// lag is excluded, so every unordered site pair contributes once.
struct NeighborhoodSet {
  std::vector<GridLag> lags;

  /// The (2w+1) x (2w+1) square of lags around the origin, halved: dy > 0, or dy = 0 and dx > 0.
  /// square(20) is the 41 x 41 default with 840 lags.
  static NeighborhoodSet square(int half_width);
  int extent_x() const;
  int extent_y() const;
};

/// Per-lag sufficient statistics of a (u, v) field: for each lag h the number of in-grid pairs
/// and the 4 x 4 cross-product sum of z = (u_s, v_s, u_{s+h}, v_{s+h}).
struct LagStatistics {
  GridSpec grid;
  std::vector<GridLag> lags;
  std::vector<long> counts;
  std::vector<Eigen::Matrix4d> cross;
  /// Mean of u^2 + v^2 over the grid (the data side of the variance profile).
  double mean_energy = 0.0;
};

/// Throws LikelihoodError when the field lacks U or V, or a lag does not fit in the grid.
LagStatistics lag_statistics(const GridField& field, const NeighborhoodSet& n);

/// Sum over lags h and in-grid sites s of log N(z_{s,h}; 0, Sigma_h), from the statistics.
/// Throws LikelihoodError naming the lag if a 4 x 4 block is not positive definite after
/// a 1e-10 * trace / 4 ridge.
double pairwise_cl(const ModelParams& p, const LagStatistics& stats);
double pairwise_cl(const ModelParams& p, const GridField& field, const NeighborhoodSet& n);

/// The same quantity by an explicit double loop over sites and lags; reference implementation.
double pairwise_cl_naive(const ModelParams& p, const GridField& field, const NeighborhoodSet& n);

/// Correlation parameters with sigma_psi = 1, sigma_chi = lambda, rescaled so that the model
/// wind variance E(u^2 + v^2) equals stats.mean_energy.
ModelParams profile_variance(const ModelParams& p, const LagStatistics& stats);

struct StartTrace {
  ModelParams start;
  ModelParams end;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

struct FitResult {
  ModelParams params;
  double cl_value = 0.0;
  int n_starts = 0;
  bool converged = false;
  std::vector<StartTrace> trace;
  std::uint64_t seed = 0;
};

struct FitOptions {
  int n_starts = 10;
  std::uint64_t seed = 0;
  int max_evals = 3000;
};

/// Maximizes the variance-profiled pairwise likelihood over (lambda, rho, nu, r1, r2, theta)
/// from Latin-hypercube starts. Search coordinates are log(nu - 1), log lambda, atanh rho,
/// log r1, log r2 and theta (wrapped to [0, pi)). The result is in canonical form (r1 >= r2).
/// Throws ConvergenceError if no start reaches a finite likelihood.
FitResult fit(const GridField& field, const NeighborhoodSet& n, const FitOptions& opts);

/// Rough inverse scale from the empirical correlogram of u and v, used to place starts.
double correlogram_scale(const GridField& field);

struct BootstrapEnsemble {
  ModelParams truth;
  std::vector<FitResult> replicates;
  /// Per replicate: empty on success, otherwise the error text of a failed fit.
  std::vector<std::string> failures;
};

/// Simulates n_rep (u, v) fields from truth (seed substreams 0..n_rep-1) and refits each with
/// seed substream n_rep + k. Failed fits are recorded, not fatal.
BootstrapEnsemble bootstrap(const ModelParams& truth, const GridSpec& g, const NeighborhoodSet& n,
                            int n_rep, const FitOptions& opts);

/// The six free parameters in a fixed order: nu, lambda, rho, r1, r2, theta.
inline constexpr std::array<const char*, 6> kFreeParameterNames = {"nu", "lambda", "rho",
                                                                   "r1", "r2", "theta"};
std::array<double, 6> free_parameters(const ModelParams& p);

struct Quantiles {
  double min, q1, median, q3, max;
};

/// Linear-interpolation quantile (type 7) of a sample; q in [0, 1].
double quantile(std::vector<double> xs, double q);
/// Box statistics of each free parameter over the successful replicates.
std::array<Quantiles, 6> summarize(const BootstrapEnsemble& e);

struct RatioEstimates {
  double lambda_stat;
  /// ||div|| / ||curl|| from centred differences in the grid interior; +inf if the curl vanishes.
  double lambda_num;
};

/// Throws DegenerateError if both divergence and curl vanish, DomainError below 3 x 3.
RatioEstimates ratio_estimators(const GridField& field, const FitResult& fitted);

}  // namespace hgrf
