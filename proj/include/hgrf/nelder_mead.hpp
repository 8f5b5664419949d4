#pragma once

#include <Eigen/Dense>

#include <functional>

namespace hgrf {

struct NelderMeadOptions {
  int max_evals = 2000;
  /// Stop when the spread of simplex values falls below ftol * (|f_best| + ftol)...
  double ftol = 1e-10;
  /// ...and every vertex lies within xtol of the best one (max norm).
  double xtol = 1e-7;
  /// Fresh simplices built around the incumbent after convergence; guards against
  /// premature collapse.
  int restarts = 1;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Minimizes f from x0 with an initial simplex of axis steps `step`. Non-finite values
/// count as +infinity, so the objective may reject points by returning NaN or inf.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& opts = {});

}  // namespace hgrf
