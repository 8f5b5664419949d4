#include "hgrf/preprocessing.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hgrf/errors.hpp"

namespace hgrf {

namespace {

// Gaussian weights beyond this many bandwidths are below 1e-21 and dropped.
constexpr double kCutoff = 10.0;

std::vector<double> weights(double bandwidth, double step, int n) {
  const int half = std::min(n - 1, static_cast<int>(std::ceil(kCutoff * bandwidth / step)));
  std::vector<double> w(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    const double z = k * step / bandwidth;
    w[k + half] = std::exp(-0.5 * z * z);
  }
  return w;
}

// out[i] = sum_k w[k] in[i + k - half] over in-range indices, with a stride.
void convolve(const double* in, double* out, int n, std::size_t stride,
              const std::vector<double>& w) {
  const int half = static_cast<int>(w.size() / 2);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int t = lo; t <= hi; ++t) s += w[t - i + half] * in[t * stride];
    out[i * stride] = s;
  }
}

void check_shape(const GridField& field, const ScalarField& ghat, double c) {
  if (!(field.spec == ghat.spec) || ghat.values.size() != field.spec.size())
    throw DomainError("transform: ghat grid does not match the field grid");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("transform: c must be positive");
}

}  // namespace

void SmootherSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw DomainError("smoother: bandwidth must be positive");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("smoother: c must be positive");
}

ScalarField smooth(const ScalarField& e, const SmootherSpec& spec) {
  spec.validate();
  const GridSpec& g = e.spec;
  g.validate();
  if (e.values.size() != g.size()) throw DomainError("smoother: value count does not match grid");
  const std::vector<double> wx = weights(spec.bandwidth, g.dx, g.nx);
  const std::vector<double> wy = weights(spec.bandwidth, g.dy, g.ny);

  // the normalizer of a separable kernel over the rectangle is a product of 1-D sums
  std::vector<double> ones_x(g.nx, 1.0), ones_y(g.ny, 1.0), norm_x(g.nx), norm_y(g.ny);
  convolve(ones_x.data(), norm_x.data(), g.nx, 1, wx);
  convolve(ones_y.data(), norm_y.data(), g.ny, 1, wy);

  std::vector<double> tmp(g.size());
  ScalarField out{g, std::vector<double>(g.size())};
#pragma omp parallel for
  for (int j = 0; j < g.ny; ++j)
    convolve(e.values.data() + g.index(0, j), tmp.data() + g.index(0, j), g.nx, 1, wx);
#pragma omp parallel for
  for (int i = 0; i < g.nx; ++i)
    convolve(tmp.data() + i, out.values.data() + i, g.ny, static_cast<std::size_t>(g.nx), wy);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.values[g.index(i, j)] /= norm_x[i] * norm_y[j];
  return out;
}

SmoothedEnergy energy_smooth(const GridField& field, const SmootherSpec& spec) {
  const auto u = field.component(VariableId::U);
  const auto v = field.component(VariableId::V);
  ScalarField e{field.spec, std::vector<double>(field.spec.size())};
  for (std::size_t s = 0; s < e.values.size(); ++s) e.values[s] = std::hypot(u[s], v[s]);
  SmoothedEnergy r{smooth(e, spec), {}};
  if (spec.bandwidth < std::min(field.spec.dx, field.spec.dy)) {
    std::ostringstream os;
    os << "bandwidth " << spec.bandwidth << " is below the grid spacing; smoothing is degenerate";
    r.warning = os.str();
  }
  return r;
}

GridField transform(const GridField& field, const ScalarField& ghat, double c) {
  check_shape(field, ghat, c);
  GridField out = field;
  for (auto& comp : out.values)
    for (std::size_t s = 0; s < comp.size(); ++s) comp[s] /= c + ghat.values[s];
  return out;
}

GridField inverse_transform(const GridField& field, const ScalarField& ghat, double c) {
  check_shape(field, ghat, c);
  GridField out = field;
  for (auto& comp : out.values)
    for (std::size_t s = 0; s < comp.size(); ++s) comp[s] *= c + ghat.values[s];
  return out;
}

double transform_error(const GridField& field, VariableId var, const ScalarField& ghat, double c) {
  if (var != VariableId::Psi && var != VariableId::Chi)
    throw DomainError("transform error: needs a potential component (psi or chi)");
  check_shape(field, ghat, c);
  const GridSpec& g = field.spec;
  if (g.nx < 3 || g.ny < 3) throw DomainError("transform error: grid must be at least 3 x 3");
  const auto chi = field.component(var);
  const auto& gh = ghat.values;
  double num = 0.0, den = 0.0;
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) {
      const std::size_t s = g.index(i, j);
      const std::size_t e = g.index(i + 1, j), w = g.index(i - 1, j);
      const std::size_t n = g.index(i, j + 1), so = g.index(i, j - 1);
      const double d = c + gh[s];
      const double gx = (gh[e] - gh[w]) / (2 * g.dx), gy = (gh[n] - gh[so]) / (2 * g.dy);
      const double cx = (chi[e] - chi[w]) / (2 * g.dx), cy = (chi[n] - chi[so]) / (2 * g.dy);
      const double f = chi[s] / (d * d);
      num += f * f * (gx * gx + gy * gy);
      den += (cx * cx + cy * cy) / (d * d);
    }
  if (!(den > 0.0)) throw DegenerateError("transform error: potential gradient vanishes");
  return std::sqrt(num / den);
}

double kurtosis(std::span<const double> xs) {
  if (xs.size() < 100) throw DomainError("diagnostics: need at least 100 values");
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = (x - m) * (x - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= static_cast<double>(xs.size());
  m4 /= static_cast<double>(xs.size());
  if (!(m2 > 1e-24 * m * m)) throw DegenerateError("diagnostics: zero variance");
  return m4 / (m2 * m2);
}

std::vector<std::pair<double, double>> qq_data(std::span<const double> xs) {
  if (xs.size() < 100) throw DomainError("diagnostics: need at least 100 values");
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double m2 = 0.0;
  for (double x : xs) m2 += (x - m) * (x - m);
  const double sd = std::sqrt(m2 / n);
  if (!(sd > 1e-12 * std::abs(m))) throw DegenerateError("diagnostics: zero variance");
  std::vector<double> z(xs.begin(), xs.end());
  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> normal;
  std::vector<std::pair<double, double>> qq(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    qq[k] = {boost::math::quantile(normal, (static_cast<double>(k) + 0.5) / n), (z[k] - m) / sd};
  return qq;
}

std::vector<MarginalDiagnostics> marginal_diagnostics(const GridField& field) {
  std::vector<MarginalDiagnostics> out;
  for (std::size_t c = 0; c < field.components.size(); ++c)
    out.push_back({field.components[c], kurtosis(field.values[c]), qq_data(field.values[c])});
  return out;
}

}  // namespace hgrf
