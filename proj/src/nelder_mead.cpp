#include "hgrf/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "hgrf/errors.hpp"

namespace hgrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Simplex {
  std::vector<Eigen::VectorXd> x;
  std::vector<double> f;
};

// One Nelder-Mead run with the standard coefficients (1, 2, 1/2, 1/2).
NelderMeadResult run(const std::function<double(const Eigen::VectorXd&)>& eval,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& step, int budget,
                     const NelderMeadOptions& opts) {
  const auto n = x0.size();
  Simplex s;
  int evals = 0;
  auto call = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = eval(x);
    return std::isfinite(v) ? v : kInf;
  };
  s.x.push_back(x0);
  s.f.push_back(call(x0));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = x0;
    v[i] += step[i];
    s.x.push_back(v);
    s.f.push_back(call(v));
  }

  std::vector<int> order(n + 1);
  bool converged = false;
  while (evals < budget) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[n - 1];

    double spread = 0.0;
    for (int i = 0; i <= n; ++i)
      spread = std::max(spread, (s.x[i] - s.x[best]).cwiseAbs().maxCoeff());
    const double fspread = s.f[worst] - s.f[best];
    if (std::isfinite(s.f[best]) && fspread <= opts.ftol * (std::abs(s.f[best]) + opts.ftol) &&
        spread <= opts.xtol) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += s.x[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - s.x[worst]);
    const double fr = call(xr);
    if (fr < s.f[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - s.x[worst]);
      const double fe = call(xe);
      if (fe < fr) {
        s.x[worst] = xe;
        s.f[worst] = fe;
      } else {
        s.x[worst] = xr;
        s.f[worst] = fr;
      }
      continue;
    }
    if (fr < s.f[second]) {
      s.x[worst] = xr;
      s.f[worst] = fr;
      continue;
    }
    // contraction, outside if the reflected point improved on the worst
    const bool outside = fr < s.f[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (s.x[worst] - centroid));
    const double fc = call(xc);
    if (fc < (outside ? fr : s.f[worst])) {
      s.x[worst] = xc;
      s.f[worst] = fc;
      continue;
    }
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      s.x[i] = s.x[best] + 0.5 * (s.x[i] - s.x[best]);
      s.f[i] = call(s.x[i]);
    }
  }

  const auto it = std::min_element(s.f.begin(), s.f.end());
  NelderMeadResult r;
  r.x = s.x[it - s.f.begin()];
  r.f = *it;
  r.evals = evals;
  r.converged = converged;
  return r;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& opts) {
  if (x0.size() == 0 || step.size() != x0.size())
    throw DomainError("nelder_mead: start and step must be nonempty and of equal size");
  NelderMeadResult best = run(f, x0, step, opts.max_evals, opts);
  for (int k = 0; k < opts.restarts && best.evals < opts.max_evals; ++k) {
    NelderMeadResult again = run(f, best.x, step, opts.max_evals - best.evals, opts);
    again.evals += best.evals;
    const bool moved = again.f < best.f - opts.ftol * (std::abs(best.f) + opts.ftol);
    if (again.f <= best.f) {
      best.x = again.x;
      best.f = again.f;
    }
    best.evals = again.evals;
    best.converged = again.converged;
    if (!moved) break;
  }
  return best;
}

}  // namespace hgrf
