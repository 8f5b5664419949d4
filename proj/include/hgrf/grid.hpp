#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hgrf/covariance.hpp"

namespace hgrf {

/// Regular rectangular grid. Node (i, j) sits at (x0 + i dx, y0 + j dy).
struct GridSpec {
  int nx = 2;
  int ny = 2;
  double dx = 1.0;
  double dy = 1.0;
  double x0 = 0.0;
  double y0 = 0.0;

  /// Throws DomainError unless nx, ny >= 2 and dx, dy > 0 (all finite).
  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double x(int i) const { return x0 + i * dx; }
  double y(int j) const { return y0 + j * dy; }
  /// Row-major, y-major: index = j * nx + i.
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  bool operator==(const GridSpec&) const = default;
};

/// Several variables on one grid; values[c] holds component c in GridSpec::index order.
struct GridField {
  GridSpec spec;
  std::vector<VariableId> components;
  std::vector<std::vector<double>> values;

  GridField() = default;
  GridField(const GridSpec& g, std::vector<VariableId> vars);

  /// Position of v in components, or -1.
  int find(VariableId v) const;
  /// Component values for v; throws DomainError if absent.
  std::span<const double> component(VariableId v) const;
  std::span<double> component(VariableId v);

  double at(int c, int i, int j) const { return values[c][spec.index(i, j)]; }
  double& at(int c, int i, int j) { return values[c][spec.index(i, j)]; }

  /// Throws ConsistencyError if shapes disagree or any value is non-finite.
  void validate() const;
};

/// Copy of f restricted to the listed components (in that order).
GridField select(const GridField& f, std::span<const VariableId> vars);

}  // namespace hgrf
