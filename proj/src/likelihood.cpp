#include "hgrf/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hgrf/errors.hpp"
#include "hgrf/nelder_mead.hpp"
#include "hgrf/random.hpp"
#include "hgrf/simulation.hpp"

namespace hgrf {

namespace {

constexpr std::array<VariableId, 2> kWind{VariableId::U, VariableId::V};
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::string lag_name(const GridLag& h) {
  std::ostringstream os;
  os << "(" << h.dx << ", " << h.dy << ")";
  return os.str();
}

// Sigma_h = [[C(0), C(h)], [C(h)^T, C(0)]] for z = (u_s, v_s, u_{s+h}, v_{s+h}).
Eigen::Matrix4d pair_covariance(const Eigen::Matrix2d& c0, const Eigen::Matrix2d& ch) {
  Eigen::Matrix4d s;
  s.topLeftCorner<2, 2>() = c0;
  s.bottomRightCorner<2, 2>() = c0;
  s.topRightCorner<2, 2>() = ch;
  s.bottomLeftCorner<2, 2>() = ch.transpose();
  return s;
}

// Cholesky with the ridge fallback; false if both attempts fail.
bool factor(const Eigen::Matrix4d& s, Eigen::LLT<Eigen::Matrix4d>& llt) {
  llt.compute(s);
  if (llt.info() == Eigen::Success) return true;
  Eigen::Matrix4d r = s;
  r.diagonal().array() += 1e-10 * s.trace() / 4.0;
  llt.compute(r);
  return llt.info() == Eigen::Success;
}

Eigen::Matrix2d wind_block(const CrossCovariance& cov, Lag h) {
  Eigen::MatrixXd b;
  cov.evaluate_block(kWind, h, b);
  return b;
}

void check_wind_field(const GridField& field) {
  if (field.find(VariableId::U) < 0 || field.find(VariableId::V) < 0)
    throw LikelihoodError("pairwise likelihood needs a field with components u and v");
}

void check_fits(const GridSpec& g, const NeighborhoodSet& n) {
  if (n.lags.empty()) throw LikelihoodError("empty neighbourhood");
  for (const GridLag& h : n.lags) {
    if (h.dx == 0 && h.dy == 0) throw LikelihoodError("neighbourhood contains the zero lag");
    if (std::abs(h.dx) >= g.nx || std::abs(h.dy) >= g.ny)
      throw LikelihoodError("neighborhood exceeds grid: lag " + lag_name(h) + " on a " +
                            std::to_string(g.nx) + " x " + std::to_string(g.ny) + " grid");
  }
}

double wrap_pi(double t) {
  double w = std::fmod(t, std::numbers::pi);
  if (w < 0.0) w += std::numbers::pi;
  return w;
}

}  // namespace

NeighborhoodSet NeighborhoodSet::square(int half_width) {
  if (half_width < 1) throw DomainError("neighbourhood half width must be at least 1");
  NeighborhoodSet n;
  for (int dy = 0; dy <= half_width; ++dy)
    for (int dx = -half_width; dx <= half_width; ++dx)
      if (dy > 0 || dx > 0) n.lags.push_back({dx, dy});
  return n;
}

int NeighborhoodSet::extent_x() const {
  int e = 0;
  for (const GridLag& h : lags) e = std::max(e, std::abs(h.dx));
  return e;
}

int NeighborhoodSet::extent_y() const {
  int e = 0;
  for (const GridLag& h : lags) e = std::max(e, std::abs(h.dy));
  return e;
}

LagStatistics lag_statistics(const GridField& field, const NeighborhoodSet& n) {
  check_wind_field(field);
  const GridSpec& g = field.spec;
  check_fits(g, n);
  const auto u = field.component(VariableId::U);
  const auto v = field.component(VariableId::V);

  LagStatistics st;
  st.grid = g;
  st.lags = n.lags;
  st.counts.assign(n.lags.size(), 0);
  st.cross.assign(n.lags.size(), Eigen::Matrix4d::Zero());
  const auto nl = static_cast<long>(n.lags.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long k = 0; k < nl; ++k) {
    const GridLag h = n.lags[k];
    const int i0 = std::max(0, -h.dx), i1 = std::min(g.nx, g.nx - h.dx);
    const int j0 = std::max(0, -h.dy), j1 = std::min(g.ny, g.ny - h.dy);
    // upper triangle of z z^T, z = (u_s, v_s, u_t, v_t)
    double a[10] = {};
    for (int j = j0; j < j1; ++j) {
      const std::size_t rs = g.index(0, j);
      const std::size_t rt = g.index(0, j + h.dy);
      for (int i = i0; i < i1; ++i) {
        const double z0 = u[rs + i], z1 = v[rs + i];
        const double z2 = u[rt + i + h.dx], z3 = v[rt + i + h.dx];
        a[0] += z0 * z0; a[1] += z0 * z1; a[2] += z0 * z2; a[3] += z0 * z3;
        a[4] += z1 * z1; a[5] += z1 * z2; a[6] += z1 * z3;
        a[7] += z2 * z2; a[8] += z2 * z3;
        a[9] += z3 * z3;
      }
    }
    Eigen::Matrix4d& t = st.cross[k];
    t << a[0], a[1], a[2], a[3],
         a[1], a[4], a[5], a[6],
         a[2], a[5], a[7], a[8],
         a[3], a[6], a[8], a[9];
    st.counts[k] = static_cast<long>(i1 - i0) * (j1 - j0);
  }
  double e = 0.0;
  for (std::size_t s = 0; s < u.size(); ++s) e += u[s] * u[s] + v[s] * v[s];
  st.mean_energy = e / static_cast<double>(u.size());
  return st;
}

double pairwise_cl(const ModelParams& p, const LagStatistics& stats) {
  const CrossCovariance cov(p);
  cov.require_smoothness(kWind);
  const Eigen::Matrix2d c0 = wind_block(cov, {0.0, 0.0});
  const auto nl = static_cast<long>(stats.lags.size());
  std::vector<double> term(nl);
  std::vector<char> bad(nl, 0);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < nl; ++k) {
    const GridLag h = stats.lags[k];
    const Eigen::Matrix2d ch = wind_block(cov, {h.dx * stats.grid.dx, h.dy * stats.grid.dy});
    const Eigen::Matrix4d s = pair_covariance(c0, ch);
    Eigen::LLT<Eigen::Matrix4d> llt;
    if (!s.allFinite() || !factor(s, llt)) {
      bad[k] = 1;
      continue;
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double tr = llt.solve(stats.cross[k]).trace();
    term[k] = -0.5 * static_cast<double>(stats.counts[k]) * (logdet + 4.0 * kLog2Pi) - 0.5 * tr;
  }
  double total = 0.0;
  for (long k = 0; k < nl; ++k) {
    if (bad[k])
      throw LikelihoodError("covariance of the pair block at lag " + lag_name(stats.lags[k]) +
                            " is not positive definite");
    total += term[k];
  }
  return total;
}

double pairwise_cl(const ModelParams& p, const GridField& field, const NeighborhoodSet& n) {
  return pairwise_cl(p, lag_statistics(field, n));
}

double pairwise_cl_naive(const ModelParams& p, const GridField& field, const NeighborhoodSet& n) {
  check_wind_field(field);
  const GridSpec& g = field.spec;
  check_fits(g, n);
  const CrossCovariance cov(p);
  cov.require_smoothness(kWind);
  const auto u = field.component(VariableId::U);
  const auto v = field.component(VariableId::V);
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      for (const GridLag& h : n.lags) {
        const int it = i + h.dx, jt = j + h.dy;
        if (it < 0 || it >= g.nx || jt < 0 || jt >= g.ny) continue;
        const Eigen::Matrix4d s = pair_covariance(wind_block(cov, {0.0, 0.0}),
                                                  wind_block(cov, {h.dx * g.dx, h.dy * g.dy}));
        Eigen::LLT<Eigen::Matrix4d> llt;
        if (!factor(s, llt)) throw LikelihoodError("pair block at lag " + lag_name(h) + " is singular");
        const Eigen::Vector4d z(u[g.index(i, j)], v[g.index(i, j)], u[g.index(it, jt)],
                                v[g.index(it, jt)]);
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        total += -0.5 * (4.0 * kLog2Pi + logdet + z.dot(llt.solve(z)));
      }
    }
  }
  return total;
}

ModelParams profile_variance(const ModelParams& p, const LagStatistics& stats) {
  ModelParams q = p;
  q.sigma_chi = p.lambda();
  q.sigma_psi = 1.0;
  const CrossCovariance cov(q);
  cov.require_smoothness(kWind);
  const Eigen::Matrix2d c0 = wind_block(cov, {0.0, 0.0});
  const double s = std::sqrt(stats.mean_energy / c0.trace());
  q.sigma_psi = s;
  q.sigma_chi *= s;
  return q;
}

double correlogram_scale(const GridField& field) {
  check_wind_field(field);
  const GridSpec& g = field.spec;
  const auto u = field.component(VariableId::U);
  const auto v = field.component(VariableId::V);
  // trace correlation along each axis, first drop below 1/2 (linear interpolation)
  auto half_distance = [&](int ax) {
    const int n = ax == 0 ? g.nx : g.ny;
    const double step = ax == 0 ? g.dx : g.dy;
    double prev = 1.0;
    for (int k = 1; k < n / 2; ++k) {
      double num = 0.0, den = 0.0;
      for (int j = 0; j < g.ny - (ax == 1 ? k : 0); ++j)
        for (int i = 0; i < g.nx - (ax == 0 ? k : 0); ++i) {
          const std::size_t s = g.index(i, j);
          const std::size_t t = ax == 0 ? g.index(i + k, j) : g.index(i, j + k);
          num += u[s] * u[t] + v[s] * v[t];
          den += u[s] * u[s] + v[s] * v[s];
        }
      const double c = den > 0.0 ? num / den : 0.0;
      if (c < 0.5) return step * (k - 1 + (prev - 0.5) / (prev - c));
      prev = c;
    }
    return step * (n / 2);
  };
  const double d = 0.5 * (half_distance(0) + half_distance(1));
  return 1.0 / d;
}

FitResult fit(const GridField& field, const NeighborhoodSet& n, const FitOptions& opts) {
  if (opts.n_starts < 1) throw DomainError("fit: need at least one start");
  const LagStatistics stats = lag_statistics(field, n);
  if (!(stats.mean_energy > 0.0)) throw DegenerateError("fit: the wind field is identically zero");
  const double r0 = correlogram_scale(field);

  // Latin hypercube in the unit cube, one stratum per start in every dimension.
  const int ns = opts.n_starts;
  std::mt19937_64 rng = substream(opts.seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::array<double, 6>> cube(ns);
  for (int d = 0; d < 6; ++d) {
    std::vector<int> perm(ns);
    for (int k = 0; k < ns; ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int k = 0; k < ns; ++k) cube[k][d] = (perm[k] + unif(rng)) / ns;
  }

  auto decode = [](const Eigen::VectorXd& x) {
    ModelParams q;
    q.nu = 1.0 + std::exp(x[0]);
    q.sigma_psi = 1.0;
    q.sigma_chi = std::exp(x[1]);
    q.rho = std::tanh(x[2]);
    q.r1 = std::exp(x[3]);
    q.r2 = std::exp(x[4]);
    q.theta = wrap_pi(x[5]);
    return q;
  };
  auto objective = [&](const Eigen::VectorXd& x) {
    if (!x.allFinite() || x[0] > std::log(29.0) || std::abs(x[2]) > 10.0 ||
        std::abs(x[1]) > 12.0 || std::abs(x[3]) > 14.0 || std::abs(x[4]) > 14.0)
      return std::numeric_limits<double>::infinity();
    try {
      return -pairwise_cl(profile_variance(decode(x), stats), stats);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions nm;
  nm.max_evals = opts.max_evals;
  const Eigen::VectorXd step = Eigen::VectorXd::Constant(6, 0.5);
  std::vector<StartTrace> trace(ns);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < ns; ++k) {
    const auto& c = cube[k];
    Eigen::VectorXd x0(6);
    x0[0] = std::log(0.1 + 4.9 * c[0]);
    x0[1] = std::log(0.1) + (std::log(3.0) - std::log(0.1)) * c[1];
    x0[2] = std::atanh(-0.8 + 1.6 * c[2]);
    x0[3] = std::log(r0) + std::log(10.0) * (2.0 * c[3] - 1.0);
    x0[4] = std::log(r0) + std::log(10.0) * (2.0 * c[4] - 1.0);
    x0[5] = std::numbers::pi * c[5];
    const NelderMeadResult r = nelder_mead(objective, x0, step, nm);
    StartTrace& t = trace[k];
    t.start = profile_variance(decode(x0), stats);
    t.evals = r.evals;
    t.value = -r.f;
    t.converged = r.converged && std::isfinite(r.f);
    try {
      t.end = profile_variance(decode(r.x), stats).canonical();
    } catch (const Error&) {
      t.end = decode(r.x);
      t.value = -std::numeric_limits<double>::infinity();
    }
  }

  FitResult out;
  out.n_starts = ns;
  out.seed = opts.seed;
  out.trace = trace;
  int best = -1;
  for (int k = 0; k < ns; ++k) {
    if (!std::isfinite(trace[k].value)) continue;
    if (best < 0 || trace[k].value > trace[best].value) best = k;
  }
  if (best < 0) {
    std::ostringstream os;
    os << "fit: none of " << ns << " starts reached a finite likelihood";
    throw ConvergenceError(os.str());
  }
  out.params = trace[best].end;
  out.cl_value = trace[best].value;
  out.converged = trace[best].converged;
  return out;
}

BootstrapEnsemble bootstrap(const ModelParams& truth, const GridSpec& g, const NeighborhoodSet& n,
                            int n_rep, const FitOptions& opts) {
  if (n_rep < 2) throw DomainError("bootstrap: need at least 2 replicates");
  const CirculantSimulator sim(truth, g, {VariableId::U, VariableId::V});
  BootstrapEnsemble e;
  e.truth = truth;
  e.replicates.resize(n_rep);
  e.failures.resize(n_rep);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_rep; ++k) {
    const GridField f = sim.realization(opts.seed, static_cast<std::uint64_t>(k));
    FitOptions o = opts;
    o.seed = substream(opts.seed, static_cast<std::uint64_t>(n_rep + k))();
    try {
      e.replicates[k] = fit(f, n, o);
    } catch (const Error& err) {
      e.failures[k] = err.what();
    }
  }
  return e;
}

std::array<double, 6> free_parameters(const ModelParams& p) {
  return {p.nu, p.lambda(), p.rho, p.r1, p.r2, p.theta};
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::array<Quantiles, 6> summarize(const BootstrapEnsemble& e) {
  std::array<std::vector<double>, 6> cols;
  for (std::size_t k = 0; k < e.replicates.size(); ++k) {
    if (!e.failures[k].empty()) continue;
    const auto f = free_parameters(e.replicates[k].params);
    for (int d = 0; d < 6; ++d) cols[d].push_back(f[d]);
  }
  std::array<Quantiles, 6> out{};
  for (int d = 0; d < 6; ++d) {
    if (cols[d].empty()) throw DegenerateError("bootstrap: no successful replicates");
    out[d] = {quantile(cols[d], 0.0), quantile(cols[d], 0.25), quantile(cols[d], 0.5),
              quantile(cols[d], 0.75), quantile(cols[d], 1.0)};
  }
  return out;
}

RatioEstimates ratio_estimators(const GridField& field, const FitResult& fitted) {
  check_wind_field(field);
  const GridSpec& g = field.spec;
  if (g.nx < 3 || g.ny < 3) throw DomainError("ratio estimators need at least a 3 x 3 grid");
  const auto u = field.component(VariableId::U);
  const auto v = field.component(VariableId::V);
  double div2 = 0.0, curl2 = 0.0;
  for (int j = 1; j + 1 < g.ny; ++j) {
    for (int i = 1; i + 1 < g.nx; ++i) {
      const double ux = (u[g.index(i + 1, j)] - u[g.index(i - 1, j)]) / (2.0 * g.dx);
      const double uy = (u[g.index(i, j + 1)] - u[g.index(i, j - 1)]) / (2.0 * g.dy);
      const double vx = (v[g.index(i + 1, j)] - v[g.index(i - 1, j)]) / (2.0 * g.dx);
      const double vy = (v[g.index(i, j + 1)] - v[g.index(i, j - 1)]) / (2.0 * g.dy);
      div2 += (ux + vy) * (ux + vy);
      curl2 += (vx - uy) * (vx - uy);
    }
  }
  if (div2 == 0.0 && curl2 == 0.0)
    throw DegenerateError("ratio estimators: divergence and curl both vanish");
  RatioEstimates r;
  r.lambda_stat = fitted.params.lambda();
  r.lambda_num = curl2 == 0.0 ? std::numeric_limits<double>::infinity() : std::sqrt(div2 / curl2);
  return r;
}

}  // namespace hgrf
