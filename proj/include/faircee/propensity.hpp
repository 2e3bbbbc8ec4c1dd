#pragma once

#include "faircee/data.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace faircee {

/// Propensity scores are clipped to [kPropensityClip, 1 - kPropensityClip].
inline constexpr double kPropensityClip = 1e-6;

struct PropensityOptions {
  int max_iter = 100;
  double tol = 1e-10;  // on the gradient infinity-norm
};

struct PropensityScores {
  Eigen::VectorXd z;
  /// Explanatory-feature coefficients followed by the intercept.
  Eigen::VectorXd model_weights;
  double auc = 0.5;
  int iterations = 0;
  bool converged = false;
};

struct LogisticFit {
  Eigen::VectorXd weights;
  std::vector<double> loglik_trace;  // one entry per accepted iterate, starting at w = 0
  int iterations = 0;
  bool converged = false;
};

/// Logistic maximum likelihood by damped Newton with step halving, started at zero.
///
/// `ridge` adds ridge * ||w||^2 / 2 on every coefficient except the last
/// column of `design` (the intercept by convention).
LogisticFit fit_logistic_newton(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                const Eigen::Ref<const Eigen::VectorXd>& target01,
                                const PropensityOptions& opts = {}, double ridge = 0.0);

/// Logistic log-likelihood sum(t * eta - log(1 + e^eta)), evaluated stably.
double logistic_loglik(const Eigen::Ref<const Eigen::VectorXd>& eta,
                       const Eigen::Ref<const Eigen::VectorXd>& target01);

/// P(S = 1 | explanatory features) by logistic regression with an intercept.
PropensityScores fit_propensity(const Dataset& data, const PropensityOptions& opts = {});

/// Mann-Whitney AUC of scores z against labels s; ties count 1/2.
double compute_auc(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& s);

/// Elementwise clip into [kPropensityClip, 1 - kPropensityClip].
Eigen::VectorXd clip_scores(const Eigen::Ref<const Eigen::VectorXd>& z);

inline double sigmoid(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace faircee
