#pragma once

// Finite-difference reference for the derivative blocks. The variables are written out as
// differential operators on the potentials, independently of the library's assembly, and
// only the scalar potential covariance is taken from the library.

#include <algorithm>
#include <vector>

#include "hgrf/covariance.hpp"
#include "oracles.hpp"

namespace hgrf::oracle {

// One term coef * d^axes of potential `pot` (0 = psi, 1 = chi); axes 0/1 = x/y.
struct Term {
  int pot;
  double coef;
  std::vector<int> axes;
};

inline std::vector<Term> terms_of(VariableId v) {
  switch (v) {
    case VariableId::Psi: return {{0, 1.0, {}}};
    case VariableId::Chi: return {{1, 1.0, {}}};
    case VariableId::U: return {{0, -1.0, {1}}, {1, 1.0, {0}}};
    case VariableId::V: return {{0, 1.0, {0}}, {1, 1.0, {1}}};
    case VariableId::Zeta: return {{0, 1.0, {0, 0}}, {0, 1.0, {1, 1}}};
    case VariableId::Div: return {{1, 1.0, {0, 0}}, {1, 1.0, {1, 1}}};
  }
  return {};
}

// Finite-difference oracle: apply the operators of i (at s) and j (at t = s + h) to the
// scalar potential covariance. Derivatives in s flip sign in the lag variable.
inline double fd_block(const ModelParams& p, VariableId i, VariableId j, Lag h) {
  const VariableId pots[2] = {VariableId::Psi, VariableId::Chi};
  const double scale = std::max(p.r1, p.r2);
  double total = 0.0;
  for (const Term& a : terms_of(i)) {
    for (const Term& b : terms_of(j)) {
      std::vector<int> axes = a.axes;
      axes.insert(axes.end(), b.axes.begin(), b.axes.end());
      auto f = [&](double x, double y) { return potential_block(p, pots[a.pot], pots[b.pot], {x, y}); };
      static constexpr double kStep[5] = {0.0, 1e-3, 4e-3, 1e-2, 2e-2};
      const double d = axes.empty() ? 0.0
                                    : fd_partial(f, h.h1, h.h2, axes, kStep[axes.size()] / scale);
      const double v = axes.empty() ? f(h.h1, h.h2) : d;
      const double sign = (a.axes.size() % 2 == 0) ? 1.0 : -1.0;
      total += sign * a.coef * b.coef * v;
    }
  }
  return total;
}

}  // namespace hgrf::oracle
