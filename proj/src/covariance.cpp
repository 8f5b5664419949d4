#include "hgrf/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hgrf/errors.hpp"

namespace hgrf {

namespace {

// One term of a variable written as a differential operator on the potentials:
// coef * d^axes potential, with potential 0 = psi, 1 = chi and axes 0/1 = e1/e2.
struct OpTerm {
  int potential;
  double coef;
  int n_axes;
  std::array<int, 2> axes;
};

struct VariableOperator {
  int n_terms;
  std::array<OpTerm, 2> terms;
};

// u = -d2 psi + d1 chi, v = d1 psi + d2 chi (curl(psi) = (-d2 psi, d1 psi)).
constexpr VariableOperator operator_of(VariableId v) {
  switch (v) {
    case VariableId::Psi: return {1, {{{0, 1.0, 0, {0, 0}}, {}}}};
    case VariableId::Chi: return {1, {{{1, 1.0, 0, {0, 0}}, {}}}};
    case VariableId::U: return {2, {{{0, -1.0, 1, {1, 0}}, {1, 1.0, 1, {0, 0}}}}};
    case VariableId::V: return {2, {{{0, 1.0, 1, {0, 0}}, {1, 1.0, 1, {1, 0}}}}};
    case VariableId::Zeta: return {2, {{{0, 1.0, 2, {0, 0}}, {0, 1.0, 2, {1, 1}}}}};
    case VariableId::Div: return {2, {{{1, 1.0, 2, {0, 0}}, {1, 1.0, 2, {1, 1}}}}};
  }
  return {0, {}};
}

int variable_index(VariableId v) { return static_cast<int>(v); }

bool is_potential(VariableId v) { return v == VariableId::Psi || v == VariableId::Chi; }

// Sum over partial matchings of the index list: paired indices contribute metric(a, b),
// unpaired ones w(a). coef[p] collects the products with p pairs; the term multiplies g_{n-p}.
void accumulate_matchings(const std::array<int, 4>& ax, int n, unsigned used, int pairs, double prod,
                          const Eigen::Matrix2d& metric, const Eigen::Vector2d& w,
                          std::array<double, 3>& coef) {
  int i = 0;
  while (i < n && ((used >> i) & 1u)) ++i;
  if (i == n) {
    coef[pairs] += prod;
    return;
  }
  used |= 1u << i;
  accumulate_matchings(ax, n, used, pairs, prod * w[ax[i]], metric, w, coef);
  for (int j = i + 1; j < n; ++j) {
    if ((used >> j) & 1u) continue;
    accumulate_matchings(ax, n, used | (1u << j), pairs + 1, prod * metric(ax[i], ax[j]), metric, w,
                         coef);
  }
}

}  // namespace

std::string_view to_string(VariableId v) {
  switch (v) {
    case VariableId::Psi: return "psi";
    case VariableId::Chi: return "chi";
    case VariableId::U: return "u";
    case VariableId::V: return "v";
    case VariableId::Zeta: return "zeta";
    case VariableId::Div: return "div";
  }
  return "?";
}

VariableId parse_variable(std::string_view name) {
  for (VariableId v : kAllVariables)
    if (to_string(v) == name) return v;
  throw ParseError("unknown variable '" + std::string(name) +
                   "' (expected psi, chi, u, v, zeta or div)");
}

int derivative_order(VariableId v) {
  switch (v) {
    case VariableId::Psi:
    case VariableId::Chi: return 0;
    case VariableId::U:
    case VariableId::V: return 1;
    case VariableId::Zeta:
    case VariableId::Div: return 2;
  }
  return 0;
}

std::string_view unit_of(VariableId v) {
  switch (derivative_order(v)) {
    case 0: return "m^2/s";
    case 1: return "m/s";
    default: return "1/s";
  }
}

double smoothness_threshold(VariableId v) { return static_cast<double>(derivative_order(v)); }

void ModelParams::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("model parameters: " + msg); };
  if (!(sigma_psi >= 0.0) || !(sigma_chi >= 0.0) || !std::isfinite(sigma_psi) ||
      !std::isfinite(sigma_chi))
    fail("standard deviations must be finite and nonnegative");
  if (sigma_psi == 0.0 && sigma_chi == 0.0) fail("sigma_psi and sigma_chi cannot both be zero");
  if (!(std::abs(rho) <= 1.0)) fail("rho must lie in [-1, 1]");
  if (!(nu > 0.0) || !std::isfinite(nu)) fail("nu must be positive");
  if (!(r1 > 0.0) || !(r2 > 0.0) || !std::isfinite(r1) || !std::isfinite(r2))
    fail("scale factors r1, r2 must be positive");
  if (!std::isfinite(theta)) fail("theta must be finite");
}

ModelParams ModelParams::normalized() const {
  ModelParams q = *this;
  q.theta = std::fmod(theta, std::numbers::pi);
  if (q.theta < 0.0) q.theta += std::numbers::pi;
  if (q.theta >= std::numbers::pi) q.theta = 0.0;
  return q;
}

ModelParams ModelParams::canonical() const {
  ModelParams q = *this;
  if (q.r1 < q.r2) {
    std::swap(q.r1, q.r2);
    q.theta += 0.5 * std::numbers::pi;
  }
  return q.normalized();
}

AnisotropyMatrix AnisotropyMatrix::from(const ModelParams& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  AnisotropyMatrix m;
  m.a << p.r1 * c, p.r1 * s, -p.r2 * s, p.r2 * c;
  return m;
}

Eigen::Matrix2d AnisotropyMatrix::rotation() {
  Eigen::Matrix2d r;
  r << 0.0, -1.0, 1.0, 0.0;
  return r;
}

double LagDerivatives::operator()(std::span<const int> axes) const {
  const int n = static_cast<int>(axes.size());
  int m = 0;
  for (int a : axes) m += a;
  return d[n][m];
}

LagDerivatives lag_derivatives(const MaternRadial& radial, const Eigen::Matrix2d& metric, Lag h,
                               int order) {
  if (order < 0 || order > kMaxLadderOrder)
    throw DomainError("lag derivatives: unsupported order " + std::to_string(order));
  const Eigen::Vector2d hv(h.h1, h.h2);
  const Eigen::Vector2d w = metric * hv;
  const double r = std::sqrt(std::max(0.0, hv.dot(w)));
  // At the origin every term with an unpaired index vanishes, so only g_{n/2} is needed.
  const auto g = radial.jet(r, r == 0.0 ? order / 2 : order);

  LagDerivatives out;
  out.order = order;
  for (int n = 0; n <= order; ++n) {
    for (int m = 0; m <= n; ++m) {
      std::array<int, 4> ax{};
      for (int k = 0; k < n; ++k) ax[k] = (k < n - m) ? 0 : 1;
      std::array<double, 3> coef{};
      accumulate_matchings(ax, n, 0u, 0, 1.0, metric, w, coef);
      double value = 0.0;
      for (int p = 0; p <= n / 2; ++p)
        if (coef[p] != 0.0) value += coef[p] * g[n - p];
      out.d[n][m] = value;
    }
  }
  return out;
}

CrossCovariance::CrossCovariance(const ModelParams& p)
    : params_(p.normalized()), radial_(p.nu), aniso_(AnisotropyMatrix::from(params_)) {
  params_.validate();
  metric_ = aniso_.metric();
  const double cross = params_.rho * params_.sigma_psi * params_.sigma_chi;
  sigma_ << params_.sigma_psi * params_.sigma_psi, cross, cross,
      params_.sigma_chi * params_.sigma_chi;
}

namespace {
std::string format_nu(double nu) {
  std::ostringstream os;
  os << nu;
  return os.str();
}
}  // namespace

void CrossCovariance::require_smoothness(std::span<const VariableId> vars) const {
  std::ostringstream os;
  int failed = 0;
  std::vector<VariableId> seen;
  for (VariableId v : vars) {
    const double need = smoothness_threshold(v);
    if (params_.nu > need || std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
    seen.push_back(v);
    os << (failed++ ? ", " : "") << to_string(v) << " (requires nu > " << need << ")";
  }
  if (failed)
    throw SmoothnessError("smoothness nu = " + format_nu(params_.nu) + " is too low for " +
                          (failed > 1 ? "variables " : "variable ") + os.str());
}

double CrossCovariance::potential_block(VariableId i, VariableId j, Lag h) const {
  if (!is_potential(i) || !is_potential(j))
    throw DomainError("potential_block: variables must be psi or chi");
  const Eigen::Vector2d y = aniso_.a * Eigen::Vector2d(h.h1, h.h2);
  return sigma_(variable_index(i), variable_index(j)) * radial_(y.norm());
}

double CrossCovariance::assemble(VariableId i, VariableId j, const LagDerivatives& der) const {
  const VariableOperator oi = operator_of(i);
  const VariableOperator oj = operator_of(j);
  double total = 0.0;
  for (int a = 0; a < oi.n_terms; ++a) {
    const OpTerm& ti = oi.terms[a];
    for (int b = 0; b < oj.n_terms; ++b) {
      const OpTerm& tj = oj.terms[b];
      const double s = sigma_(ti.potential, tj.potential);
      if (s == 0.0) continue;
      std::array<int, 4> axes{};
      int n = 0;
      for (int k = 0; k < ti.n_axes; ++k) axes[n++] = ti.axes[k];
      for (int k = 0; k < tj.n_axes; ++k) axes[n++] = tj.axes[k];
      // Derivatives at s enter with -1 each: d/ds C(t - s) = -C'(t - s).
      const double sign = (ti.n_axes % 2 == 0) ? 1.0 : -1.0;
      total += sign * ti.coef * tj.coef * s * der(std::span<const int>(axes.data(), n));
    }
  }
  return total;
}

double CrossCovariance::evaluate(VariableId i, VariableId j, Lag h) const {
  const int order = derivative_order(i) + derivative_order(j);
  return assemble(i, j, lag_derivatives(radial_, metric_, h, order));
}

double CrossCovariance::block(VariableId i, VariableId j, Lag h) const {
  const std::array<VariableId, 2> pair{i, j};
  try {
    require_smoothness(pair);
  } catch (const SmoothnessError& e) {
    throw SmoothnessError("block (" + std::string(to_string(i)) + ", " +
                          std::string(to_string(j)) + "): " + e.what());
  }
  const double value = evaluate(i, j, h);
  if (!std::isfinite(value))
    throw ConsistencyError("non-finite covariance for block (" + std::string(to_string(i)) +
                           ", " + std::string(to_string(j)) + ")");
  return value;
}

void CrossCovariance::evaluate_block(std::span<const VariableId> vars, Lag h,
                                     Eigen::MatrixXd& out) const {
  int max_order = 0;
  for (VariableId v : vars) max_order = std::max(max_order, derivative_order(v));
  const LagDerivatives der = lag_derivatives(radial_, metric_, h, 2 * max_order);
  const auto n = static_cast<Eigen::Index>(vars.size());
  out.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = assemble(vars[a], vars[b], der);
}

Eigen::MatrixXd CrossCovariance::block_matrix(std::span<const VariableId> vars, Lag h) const {
  require_smoothness(vars);
  Eigen::MatrixXd out;
  evaluate_block(vars, h, out);
  if (!out.allFinite()) throw ConsistencyError("non-finite entry in covariance block matrix");
  return out;
}

double potential_block(const ModelParams& p, VariableId i, VariableId j, Lag h) {
  return CrossCovariance(p).potential_block(i, j, h);
}

double aniso_block(const ModelParams& p, VariableId i, VariableId j, Lag h) {
  return CrossCovariance(p).block(i, j, h);
}

namespace {

// Closed-form isotropic table. Indices are 1-based as in the usual notation:
// X_1 = psi, X_2 = chi, U_1 = u, U_2 = v, partial_1 / partial_2 along e1 / e2.
class IsoTable {
public:
  IsoTable(const LagDerivatives& der, const Eigen::Matrix2d& sigma) : der_(der), sigma_(sigma) {}

  // Derivatives along s_axes on the first argument and t_axes on the second of C^{ij}(s, t).
  double d(int i, int j, std::initializer_list<int> s_axes, std::initializer_list<int> t_axes) const {
    std::array<int, 4> axes{};
    int n = 0;
    for (int a : s_axes) axes[n++] = a - 1;
    for (int a : t_axes) axes[n++] = a - 1;
    const double sign = (s_axes.size() % 2 == 0) ? 1.0 : -1.0;
    return sign * sigma_(i - 1, j - 1) * der_(std::span<const int>(axes.data(), n));
  }

  double xx(int i, int j) const { return d(i, j, {}, {}); }

  double uu(int i, int j) const {
    const double si = (i % 2 == 0) ? 1.0 : -1.0;
    const double sj = (j % 2 == 0) ? 1.0 : -1.0;
    return si * sj * d(1, 1, {3 - i}, {3 - j}) + si * d(1, 2, {3 - i}, {j}) +
           sj * d(2, 1, {i}, {3 - j}) + d(2, 2, {i}, {j});
  }

  double ll(int i, int j) const {
    double total = 0.0;
    for (int k = 1; k <= 2; ++k)
      for (int l = 1; l <= 2; ++l) total += d(i, j, {k, k}, {l, l});
    return total;
  }

  double ux(int i, int j) const {
    const double si = (i % 2 == 0) ? 1.0 : -1.0;
    return si * d(1, j, {3 - i}, {}) + d(2, j, {i}, {});
  }

  double xl(int i, int j) const { return d(i, j, {}, {1, 1}) + d(i, j, {}, {2, 2}); }

  double ul(int i, int j) const {
    const double si = (i % 2 == 0) ? 1.0 : -1.0;
    return si * d(1, j, {3 - i}, {1, 1}) + si * d(1, j, {3 - i}, {2, 2}) + d(2, j, {i}, {1, 1}) +
           d(2, j, {i}, {2, 2});
  }

private:
  const LagDerivatives& der_;
  const Eigen::Matrix2d& sigma_;
};

enum class Kind { Potential, Wind, Laplacian };

Kind kind_of(VariableId v) {
  switch (derivative_order(v)) {
    case 0: return Kind::Potential;
    case 1: return Kind::Wind;
    default: return Kind::Laplacian;
  }
}

// 1-based component index within its kind.
int component_of(VariableId v) {
  switch (v) {
    case VariableId::Psi:
    case VariableId::U:
    case VariableId::Zeta: return 1;
    default: return 2;
  }
}

}  // namespace

double iso_block(const ModelParams& p, VariableId i, VariableId j, Lag h) {
  const ModelParams q = p.normalized();
  if (q.r1 != 1.0 || q.r2 != 1.0 || q.theta != 0.0)
    throw DomainError("iso_block: requires r1 = r2 = 1 and theta = 0");
  q.validate();
  const CrossCovariance cov(q);
  const std::array<VariableId, 2> pair{i, j};
  cov.require_smoothness(pair);

  const int order = derivative_order(i) + derivative_order(j);
  const LagDerivatives der = lag_derivatives(cov.radial(), Eigen::Matrix2d::Identity(), h, order);
  const double cross = q.rho * q.sigma_psi * q.sigma_chi;
  Eigen::Matrix2d sigma;
  sigma << q.sigma_psi * q.sigma_psi, cross, cross, q.sigma_chi * q.sigma_chi;
  const IsoTable t(der, sigma);

  const int a = component_of(i);
  const int b = component_of(j);
  switch (kind_of(i)) {
    case Kind::Potential:
      switch (kind_of(j)) {
        case Kind::Potential: return t.xx(a, b);
        case Kind::Wind: return -t.ux(b, a);
        case Kind::Laplacian: return t.xl(a, b);
      }
      break;
    case Kind::Wind:
      switch (kind_of(j)) {
        case Kind::Potential: return t.ux(a, b);
        case Kind::Wind: return t.uu(a, b);
        case Kind::Laplacian: return t.ul(a, b);
      }
      break;
    case Kind::Laplacian:
      switch (kind_of(j)) {
        case Kind::Potential: return t.xl(b, a);
        case Kind::Wind: return -t.ul(b, a);
        case Kind::Laplacian: return t.ll(a, b);
      }
      break;
  }
  return 0.0;
}

Eigen::MatrixXd cross_matrix(const CrossCovariance& cov, std::span<const Site> rows,
                             std::span<const Site> cols) {
  std::vector<VariableId> vars;
  for (const Site& s : rows) vars.push_back(s.var);
  for (const Site& s : cols) vars.push_back(s.var);
  cov.require_smoothness(vars);

  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd out(nr, nc);
  bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
  for (Eigen::Index a = 0; a < nr; ++a) {
    for (Eigen::Index b = 0; b < nc; ++b) {
      const Lag h{cols[b].x - rows[a].x, cols[b].y - rows[a].y};
      const double value = cov.evaluate(rows[a].var, cols[b].var, h);
      out(a, b) = value;
      finite = finite && std::isfinite(value);
    }
  }
  if (!finite) throw ConsistencyError("non-finite entry in cross covariance matrix");
  return out;
}

Eigen::MatrixXd joint_matrix(const CrossCovariance& cov, std::span<const Site> sites) {
  std::vector<VariableId> vars;
  for (const Site& s : sites) vars.push_back(s.var);
  cov.require_smoothness(vars);

  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd out(n, n);
  bool finite = true;
#pragma omp parallel for schedule(dynamic, 8) reduction(&& : finite)
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const Lag h{sites[b].x - sites[a].x, sites[b].y - sites[a].y};
      const double value = cov.evaluate(sites[a].var, sites[b].var, h);
      out(a, b) = value;
      out(b, a) = value;  // C_ij(h) = C_ji(-h)
      finite = finite && std::isfinite(value);
    }
  }
  if (!finite) throw ConsistencyError("non-finite entry in joint covariance matrix");
  return out;
}

Eigen::MatrixXd joint_matrix(const ModelParams& p, std::span<const Site> sites) {
  return joint_matrix(CrossCovariance(p), sites);
}

}  // namespace hgrf
