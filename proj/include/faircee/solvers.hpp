#pragma once

#include "faircee/estimators.hpp"

#include <Eigen/Dense>

#include <vector>

namespace faircee {

struct Solution {
  Eigen::VectorXd w;
  double objective = 0.0;
  double constraint_residual = 0.0;  // ||P w - q||_inf
  int iterations = 0;
  std::vector<double> loss_trace;  // PGM only; entry 0 is the projected start point
  bool converged = true;
  /// KKT matrix was singular and 1e-10 I was added to the X^T X block.
  bool ridge_fallback = false;
  /// Lagrange multipliers from the KKT solve (least squares only).
  Eigen::VectorXd multipliers;
};

struct PgmOptions {
  double eta0 = 1.0;
  double beta = 0.5;
  int max_iter = 10000;
  double grad_tol = 1e-8;

  void validate() const;
};

/// Lower bound on L used when X is identically zero.
inline constexpr double kLipschitzFloor = 1e-12;

/// Sum of squared row norms of X.
template <typename Derived>
typename Derived::Scalar lipschitz_constant(const Eigen::MatrixBase<Derived>& X) {
  return X.squaredNorm();
}

/// Euclidean projection of w onto {v : P v = q}.
inline Eigen::VectorXd project_affine(const Eigen::Ref<const Eigen::VectorXd>& w, const ConstraintSystem& c) {
  return c.project(w);
}

/// argmin ||X w - y||^2 s.t. P w = q via the KKT system
/// [2 X^T X, P^T; P, 0] [w; lambda] = [2 X^T y; q], solved in null-space form (QR of P^T).
Solution solve_constrained_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const ConstraintSystem& c);

/// Logistic loss sum log(1 + exp(-y_i w^T x_i)) with y mapped from {0,1} to {-1,+1}.
double logistic_loss(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y01,
                     const Eigen::Ref<const Eigen::VectorXd>& w);

struct PgmTrace {
  std::vector<Eigen::VectorXd> iterates;  // w_0, w_1, ...
  std::vector<double> step_sizes;         // accepted eta per iteration
};

/// Projected proximal gradient with backtracking (step floored at 1/L) on the logistic loss.
Solution pgm_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y01,
                      const ConstraintSystem& c, const PgmOptions& opts = {}, PgmTrace* trace = nullptr);

/// Same iteration on ||X w - y||^2 with L = 2 sum ||x_i||^2; a cross-check of the KKT solver.
Solution pgm_squared(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ConstraintSystem& c, const PgmOptions& opts = {}, PgmTrace* trace = nullptr);

}  // namespace faircee
