#include "hgrf/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hgrf/errors.hpp"
#include "hgrf/random.hpp"
#include "hgrf/simulation.hpp"

namespace hgrf {

namespace {

// Targets are processed in blocks so the cross matrix stays bounded in memory.
constexpr Eigen::Index kTargetBlock = 2048;

bool same_point(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

std::string describe(const Observation& o) {
  std::ostringstream os;
  os << to_string(o.var) << "@(" << o.x << ", " << o.y << ")";
  return os.str();
}

// The observation pairs with the largest correlation, for the conditioning error message.
std::string collinear_pairs(const Eigen::MatrixXd& k, const std::vector<Observation>& obs) {
  struct Pair {
    double corr;
    Eigen::Index a, b;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index a = 0; a < k.rows(); ++a)
    for (Eigen::Index b = a + 1; b < k.cols(); ++b) {
      const double d = std::sqrt(k(a, a) * k(b, b));
      if (d > 0.0) pairs.push_back({std::abs(k(a, b)) / d, a, b});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.corr > y.corr; });
  std::ostringstream os;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, pairs.size()); ++i) {
    if (i) os << "; ";
    os << describe(obs[pairs[i].a]) << " ~ " << describe(obs[pairs[i].b])
       << " (correlation " << pairs[i].corr << ")";
  }
  return os.str();
}

// Pairs whose correlation is 1 to rounding; the ridge would only hide their conflict.
std::string duplicates(const Eigen::MatrixXd& k, const std::vector<Observation>& obs) {
  std::ostringstream os;
  int found = 0;
  for (Eigen::Index a = 0; a < k.rows() && found < 5; ++a)
    for (Eigen::Index b = a + 1; b < k.cols() && found < 5; ++b) {
      const double d = std::sqrt(k(a, a) * k(b, b));
      if (d > 0.0 && std::abs(k(a, b)) / d > 1.0 - 1e-12) {
        if (found++) os << "; ";
        os << describe(obs[a]) << " ~ " << describe(obs[b]);
      }
    }
  return os.str();
}

}  // namespace

Kriging::Kriging(const ModelParams& p, std::vector<Observation> obs)
    : cov_(p), obs_(std::move(obs)) {
  if (obs_.size() > kMaxObservations) {
    throw DomainError("kriging: " + std::to_string(obs_.size()) +
                      " observations exceed the dense limit of " +
                      std::to_string(kMaxObservations));
  }
  for (const Observation& o : obs_) {
    if (!(o.noise_sd >= 0.0) || !std::isfinite(o.noise_sd))
      throw DomainError("kriging: noise_sd must be finite and nonnegative");
    if (!std::isfinite(o.x) || !std::isfinite(o.y) || !std::isfinite(o.value))
      throw DomainError("kriging: observation " + describe(o) + " is not finite");
    sites_.push_back({o.var, o.x, o.y});
  }
  if (obs_.empty()) return;

  Eigen::MatrixXd k = joint_matrix(cov_, sites_);
  for (std::size_t i = 0; i < obs_.size(); ++i) k(i, i) += obs_[i].noise_sd * obs_[i].noise_sd;
  if (const std::string dup = duplicates(k, obs_); !dup.empty())
    throw ConditioningError("kriging: observation covariance is singular; near-duplicate "
                            "observations: " + dup);
  llt_.compute(k);
  if (llt_.info() != Eigen::Success) {
    Eigen::MatrixXd r = k;
    r.diagonal().array() += 1e-10 * k.trace() / static_cast<double>(k.rows());
    llt_.compute(r);
    ridged_ = true;
    if (llt_.info() != Eigen::Success)
      throw ConditioningError("kriging: observation covariance is singular beyond the ridge; "
                              "near-duplicate observations: " + collinear_pairs(k, obs_));
  }
  Eigen::VectorXd y(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) y[i] = obs_[i].value;
  alpha_ = llt_.solve(y);
}

Eigen::VectorXd Kriging::solve(const Eigen::VectorXd& r) const {
  if (obs_.empty()) return Eigen::VectorXd();
  return llt_.solve(r);
}

int Kriging::exact_at(VariableId v, double x, double y) const {
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const Observation& o = obs_[i];
    if (o.var == v && o.noise_sd == 0.0 && same_point(o.x, x) && same_point(o.y, y))
      return static_cast<int>(i);
  }
  return -1;
}

void Kriging::predict(const std::vector<Site>& targets, Eigen::VectorXd& mean,
                      Eigen::VectorXd& sd) const {
  const auto nt = static_cast<Eigen::Index>(targets.size());
  mean.setZero(nt);
  sd.resize(nt);
  std::vector<VariableId> vars;
  for (const Site& s : targets) vars.push_back(s.var);
  cov_.require_smoothness(vars);
  for (Eigen::Index t = 0; t < nt; ++t)
    sd[t] = cov_.evaluate(targets[t].var, targets[t].var, {0.0, 0.0});

  if (!obs_.empty()) {
    for (Eigen::Index b0 = 0; b0 < nt; b0 += kTargetBlock) {
      const Eigen::Index nb = std::min(kTargetBlock, nt - b0);
      const std::span<const Site> block(targets.data() + b0, static_cast<std::size_t>(nb));
      const Eigen::MatrixXd kot = cross_matrix(cov_, sites_, block);
      mean.segment(b0, nb) = kot.transpose() * alpha_;
      const Eigen::MatrixXd w = llt_.matrixL().solve(kot);
      sd.segment(b0, nb) -= w.colwise().squaredNorm().transpose();
    }
  }
  for (Eigen::Index t = 0; t < nt; ++t) {
    sd[t] = std::sqrt(std::max(sd[t], 0.0));
    const int e = exact_at(targets[t].var, targets[t].x, targets[t].y);
    if (e >= 0) {
      mean[t] = obs_[e].value;
      sd[t] = 0.0;
    }
  }
}

KrigeResult krige(const ModelParams& p, const std::vector<Observation>& obs, const GridSpec& grid,
                  const std::vector<VariableId>& vars) {
  grid.validate();
  const Kriging k(p, obs);
  std::vector<Site> targets;
  targets.reserve(grid.size() * vars.size());
  for (VariableId v : vars)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) targets.push_back({v, grid.x(i), grid.y(j)});
  Eigen::VectorXd mean, sd;
  k.predict(targets, mean, sd);

  KrigeResult r{GridField(grid, vars), GridField(grid, vars)};
  for (std::size_t c = 0; c < vars.size(); ++c) {
    const std::size_t off = c * grid.size();
    for (std::size_t s = 0; s < grid.size(); ++s) {
      r.mean.values[c][s] = mean[static_cast<Eigen::Index>(off + s)];
      r.sd.values[c][s] = sd[static_cast<Eigen::Index>(off + s)];
    }
  }
  return r;
}

std::vector<GridField> conditional_simulate(const ModelParams& p,
                                            const std::vector<Observation>& obs,
                                            const GridSpec& grid,
                                            const std::vector<VariableId>& vars,
                                            std::uint64_t seed, int n) {
  grid.validate();
  if (n < 0) throw DomainError("conditional simulation: negative realization count");
  const Kriging k(p, obs);

  // simulate the target variables plus any observed variable not among them
  std::vector<VariableId> all = vars;
  for (const Observation& o : obs)
    if (std::find(all.begin(), all.end(), o.var) == all.end()) all.push_back(o.var);

  // grid node and component of each observation
  std::vector<std::pair<int, std::size_t>> where;
  for (const Observation& o : obs) {
    const double fi = (o.x - grid.x0) / grid.dx;
    const double fj = (o.y - grid.y0) / grid.dy;
    const long i = std::lround(fi), j = std::lround(fj);
    if (std::abs(fi - i) > 1e-6 || std::abs(fj - j) > 1e-6 || i < 0 || j < 0 || i >= grid.nx ||
        j >= grid.ny)
      throw DomainError("conditional simulation: observation " + describe(o) +
                        " is not on a node of the target grid");
    const int c = static_cast<int>(std::find(all.begin(), all.end(), o.var) - all.begin());
    where.push_back({c, grid.index(static_cast<int>(i), static_cast<int>(j))});
  }

  std::vector<Site> targets;
  for (VariableId v : vars)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) targets.push_back({v, grid.x(i), grid.y(j)});
  const auto nt = static_cast<Eigen::Index>(targets.size());
  const auto no = static_cast<Eigen::Index>(obs.size());
  if (static_cast<double>(nt) * static_cast<double>(no) > 5e7)
    throw DomainError("conditional simulation: target grid times observation count is too large");
  Eigen::MatrixXd kot;
  if (no > 0) kot = cross_matrix(k.covariance(), [&] {
    std::vector<Site> s;
    for (const Observation& o : obs) s.push_back({o.var, o.x, o.y});
    return s;
  }(), targets);

  if (n == 0) return {};
  const CirculantSimulator sim(p, grid, all);
  std::vector<GridField> out(n);
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n; ++r) {
    const GridField z = sim.realization(seed, static_cast<std::uint64_t>(r));
    GridField f(grid, vars);
    for (std::size_t c = 0; c < vars.size(); ++c) f.values[c] = z.values[c];
    if (no > 0) {
      std::mt19937_64 rng = substream(~seed, static_cast<std::uint64_t>(r));
      std::normal_distribution<double> normal;
      Eigen::VectorXd resid(no);
      for (Eigen::Index o = 0; o < no; ++o) {
        const double eps = obs[o].noise_sd > 0.0 ? obs[o].noise_sd * normal(rng) : 0.0;
        resid[o] = obs[o].value - (z.values[where[o].first][where[o].second] + eps);
      }
      const Eigen::VectorXd corr = kot.transpose() * k.solve(resid);
      for (std::size_t c = 0; c < vars.size(); ++c)
        for (std::size_t s = 0; s < grid.size(); ++s)
          f.values[c][s] += corr[static_cast<Eigen::Index>(c * grid.size() + s)];
    }
    out[r] = std::move(f);
  }
  return out;
}

}  // namespace hgrf
