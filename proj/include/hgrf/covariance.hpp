#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgrf/matern.hpp"

namespace hgrf {

/// The six field variables. Zeta = laplacian(psi) (vorticity), Div = laplacian(chi) (divergence).
enum class VariableId { Psi, Chi, U, V, Zeta, Div };

inline constexpr std::array<VariableId, 6> kAllVariables = {
    VariableId::Psi, VariableId::Chi, VariableId::U, VariableId::V, VariableId::Zeta, VariableId::Div};

/// Lower-case name used in files and on the command line ("psi", "chi", "u", "v", "zeta", "div").
std::string_view to_string(VariableId v);
/// Inverse of to_string; throws ParseError on unknown names.
VariableId parse_variable(std::string_view name);
/// Number of spatial derivatives applied to the potentials: 0 (psi, chi), 1 (u, v), 2 (zeta, div).
int derivative_order(VariableId v);
/// Physical unit of a variable (m^2/s, m/s, 1/s).
std::string_view unit_of(VariableId v);
/// Smallest nu (exclusive) for which the variable is a mean-square random variable.
double smoothness_threshold(VariableId v);

/// Lag h = t - s between two sites.
struct Lag {
  double h1 = 0.0;
  double h2 = 0.0;
  Lag operator-() const { return {-h1, -h2}; }
};

/// Parameters of the bivariate Matern model for (psi, chi) with geometric anisotropy.
struct ModelParams {
  double sigma_psi = 1.0;
  double sigma_chi = 1.0;
  double rho = 0.0;
  double nu = 2.5;
  double r1 = 1.0;
  double r2 = 1.0;
  double theta = 0.0;

  /// Throws DomainError unless sigmas >= 0 (not both 0), |rho| <= 1, nu > 0, r1, r2 > 0.
  void validate() const;
  /// Copy with theta reduced to [0, pi).
  ModelParams normalized() const;
  /// Copy with r1 >= r2 (swapping the axes adds pi/2 to theta) and theta in [0, pi).
  /// Both forms describe the same covariance.
  ModelParams canonical() const;

  double lambda() const { return sigma_chi / sigma_psi; }
};

/// A = [[r1 cos t, r1 sin t], [-r2 sin t, r2 cos t]]; the model depends on the lag through |A h|.
struct AnisotropyMatrix {
  Eigen::Matrix2d a;

  static AnisotropyMatrix from(const ModelParams& p);
  /// Quarter-turn R = [[0, -1], [1, 0]], so that curl(psi) = R grad(psi).
  static Eigen::Matrix2d rotation();

  double det() const { return a.determinant(); }
  /// A^T A, the quadratic form of the anisotropic distance.
  Eigen::Matrix2d metric() const { return a.transpose() * a; }
};

/// Cached derivatives of F(h) = M(|A h|, nu) at a single lag, up to fourth order.
/// d[n][m] is the n-th order partial derivative with m derivatives along axis 2
/// (the partials commute, so this indexes every mixed partial).
struct LagDerivatives {
  std::array<std::array<double, 5>, 5> d{};
  int order = 0;

  double operator()(std::span<const int> axes) const;
};

/// Derivatives of F at lag h from the radial ladder and the chain rule through A.
LagDerivatives lag_derivatives(const MaternRadial& m, const Eigen::Matrix2d& metric, Lag h,
                               int order);

/// Stationary covariance of the six-variable field,
///   C_ij(h) = Cov(V_i(s), V_j(s + h)).
class CrossCovariance {
public:
  explicit CrossCovariance(const ModelParams& p);

  const ModelParams& params() const { return params_; }
  const MaternRadial& radial() const { return radial_; }
  const AnisotropyMatrix& anisotropy() const { return aniso_; }

  /// Sigma_ij * M(|A h|) for i, j in {Psi, Chi}.
  double potential_block(VariableId i, VariableId j, Lag h) const;

  /// Any block, by differentiating C(A h) through the chain rule.
  double block(VariableId i, VariableId j, Lag h) const;

  /// All blocks among vars at one lag, sharing the radial ladder evaluation.
  Eigen::MatrixXd block_matrix(std::span<const VariableId> vars, Lag h) const;

  /// block() without the smoothness gate or finiteness check; for hot loops whose
  /// variables were already cleared by require_smoothness().
  double evaluate(VariableId i, VariableId j, Lag h) const;

  /// block_matrix() without the gate or finiteness check; writes into out (resized as needed).
  void evaluate_block(std::span<const VariableId> vars, Lag h, Eigen::MatrixXd& out) const;

  /// Throws SmoothnessError if any of vars needs more smoothness than nu provides.
  void require_smoothness(std::span<const VariableId> vars) const;

private:
  double assemble(VariableId i, VariableId j, const LagDerivatives& der) const;

  ModelParams params_;
  MaternRadial radial_;
  AnisotropyMatrix aniso_;
  Eigen::Matrix2d metric_;
  Eigen::Matrix2d sigma_;
};

/// Sigma_ij * M(|A h|, nu) for the potentials.
double potential_block(const ModelParams& p, VariableId i, VariableId j, Lag h);

/// Isotropic blocks (r1 = r2 = 1, theta = 0) written out term by term from the closed-form
/// table of derivative covariances. Partial derivatives there act on the first (s) or second
/// (t) argument of C(s, t) = C(t - s), so every s-derivative contributes a factor -1 in lag form.
double iso_block(const ModelParams& p, VariableId i, VariableId j, Lag h);

/// General anisotropic block; equals CrossCovariance(p).block(i, j, h).
double aniso_block(const ModelParams& p, VariableId i, VariableId j, Lag h);

struct Site {
  VariableId var;
  double x;
  double y;
};

/// n x n covariance over (variable, location) pairs; entry (a, b) = C_{var_a var_b}(loc_b - loc_a).
Eigen::MatrixXd joint_matrix(const CrossCovariance& cov, std::span<const Site> sites);
Eigen::MatrixXd joint_matrix(const ModelParams& p, std::span<const Site> sites);

/// Cross matrix between two site lists: entry (a, b) = C(row_a, col_b).
Eigen::MatrixXd cross_matrix(const CrossCovariance& cov, std::span<const Site> rows,
                             std::span<const Site> cols);

}  // namespace hgrf
