#include "hgrf/grid.hpp"

#include <cmath>
#include <string>

#include "hgrf/errors.hpp"

namespace hgrf {

void GridSpec::validate() const {
  if (nx < 2 || ny < 2) throw DomainError("grid: nx and ny must be at least 2");
  if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy))
    throw DomainError("grid: spacing must be positive");
  if (!std::isfinite(x0) || !std::isfinite(y0)) throw DomainError("grid: origin must be finite");
}

GridField::GridField(const GridSpec& g, std::vector<VariableId> vars)
    : spec(g), components(std::move(vars)), values(components.size(), std::vector<double>(g.size())) {}

int GridField::find(VariableId v) const {
  for (std::size_t c = 0; c < components.size(); ++c)
    if (components[c] == v) return static_cast<int>(c);
  return -1;
}

std::span<const double> GridField::component(VariableId v) const {
  const int c = find(v);
  if (c < 0) throw DomainError("field has no component " + std::string(to_string(v)));
  return values[c];
}

std::span<double> GridField::component(VariableId v) {
  const int c = find(v);
  if (c < 0) throw DomainError("field has no component " + std::string(to_string(v)));
  return values[c];
}

void GridField::validate() const {
  if (values.size() != components.size())
    throw ConsistencyError("field: component count does not match value arrays");
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (values[c].size() != spec.size())
      throw ConsistencyError("field: component " + std::string(to_string(components[c])) +
                             " has the wrong number of values");
    for (double v : values[c])
      if (!std::isfinite(v))
        throw ConsistencyError("field: non-finite value in component " +
                               std::string(to_string(components[c])));
  }
}

GridField select(const GridField& f, std::span<const VariableId> vars) {
  GridField out(f.spec, {vars.begin(), vars.end()});
  for (std::size_t c = 0; c < vars.size(); ++c) {
    const auto src = f.component(vars[c]);
    out.values[c].assign(src.begin(), src.end());
  }
  return out;
}

}  // namespace hgrf
