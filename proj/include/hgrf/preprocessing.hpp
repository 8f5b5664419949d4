#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgrf/grid.hpp"

namespace hgrf {

enum class Kernel { Gaussian };

struct SmootherSpec {
  Kernel kernel = Kernel::Gaussian;
  /// Kernel standard deviation, in the length units of the grid.
  double bandwidth = 1.0;
  /// Offset in the denominator c + ghat.
  double c = 1.0 / 3.0;

  /// Throws DomainError unless bandwidth > 0 and c > 0 (both finite).
  void validate() const;
};

/// One scalar value per grid node, in GridSpec::index order.
struct ScalarField {
  GridSpec spec;
  std::vector<double> values;

  double at(int i, int j) const { return values[spec.index(i, j)]; }
};

struct SmoothedEnergy {
  ScalarField ghat;
  /// Non-empty when the bandwidth is below the grid spacing and the smoothing degenerates.
  std::string warning;
};

/// Kernel smoother on the grid: sum_t w(s - t) e_t / sum_t w(s - t) over in-domain nodes t,
/// so a constant input is reproduced up to the boundary. Separable for the Gaussian kernel.
ScalarField smooth(const ScalarField& e, const SmootherSpec& spec);

/// ghat = smooth(sqrt(u^2 + v^2)). Needs U and V.
SmoothedEnergy energy_smooth(const GridField& field, const SmootherSpec& spec);

/// Every component divided pointwise by (c + ghat).
GridField transform(const GridField& field, const ScalarField& ghat, double c);
/// Every component multiplied pointwise by (c + ghat).
GridField inverse_transform(const GridField& field, const ScalarField& ghat, double c);

/// ||chi grad(c + ghat) / (c + ghat)^2|| / ||grad(chi) / (c + ghat)|| over interior nodes with
/// centred differences, for the potential component `var` (psi or chi) of field.
/// This is the relative error of treating the transformed potential's gradient as the
/// transformed gradient. Throws DegenerateError if the denominator vanishes.
double transform_error(const GridField& field, VariableId var, const ScalarField& ghat, double c);

struct MarginalDiagnostics {
  VariableId var;
  /// Fourth standardized moment; 3 for a normal law.
  double kurtosis;
  /// (standard normal quantile at (k + 1/2)/n, k-th smallest standardized value).
  std::vector<std::pair<double, double>> qq;
};

/// Kurtosis of a sample; DomainError below 100 values, DegenerateError at zero variance.
double kurtosis(std::span<const double> xs);
std::vector<std::pair<double, double>> qq_data(std::span<const double> xs);
std::vector<MarginalDiagnostics> marginal_diagnostics(const GridField& field);

}  // namespace hgrf
