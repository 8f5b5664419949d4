#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hgrf/covariance.hpp"
#include "hgrf/grid.hpp"

namespace hgrf {

struct Observation {
  VariableId var = VariableId::Psi;
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
  /// Standard deviation of independent additive noise; 0 for an exact observation.
  double noise_sd = 0.0;
};

/// Largest observation count handled by the dense factorization.
inline constexpr std::size_t kMaxObservations = 5000;

struct KrigeResult {
  GridField mean;
  GridField sd;
};

/// Simple (zero-mean) kriging with every covariance block taken from the field model.
///
/// The observation matrix K_oo + diag(noise^2) is factorized once. If Cholesky fails, a ridge
/// of 1e-10 * trace / n is added; if that fails too, ConditioningError lists the most nearly
/// collinear observation pairs.
class Kriging {
public:
  Kriging(const ModelParams& p, std::vector<Observation> obs);

  const CrossCovariance& covariance() const { return cov_; }
  const std::vector<Observation>& observations() const { return obs_; }
  bool ridged() const { return ridged_; }

  /// Mean and standard deviation at arbitrary sites. Sites that coincide with an exact
  /// observation of the same variable return that value with sd 0.
  void predict(const std::vector<Site>& targets, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const;

  /// K^-1 r for a residual vector over the observations.
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const;

  /// Index of the exact observation of variable v at (x, y), or -1.
  int exact_at(VariableId v, double x, double y) const;

private:
  CrossCovariance cov_;
  std::vector<Observation> obs_;
  std::vector<Site> sites_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  bool ridged_ = false;
};

/// Kriging mean and sd of vars on every node of grid.
KrigeResult krige(const ModelParams& p, const std::vector<Observation>& obs, const GridSpec& grid,
                  const std::vector<VariableId>& vars);

/// Conditioning by kriging: an unconditional circulant-embedding realization on the grid plus
/// the kriged correction of the observation residuals (noise drawn for noisy observations).
/// Observations must lie on grid nodes, since the unconditional field is only known there.
std::vector<GridField> conditional_simulate(const ModelParams& p,
                                            const std::vector<Observation>& obs,
                                            const GridSpec& grid,
                                            const std::vector<VariableId>& vars,
                                            std::uint64_t seed, int n);

}  // namespace hgrf
