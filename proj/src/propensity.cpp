#include "faircee/propensity.hpp"

#include "faircee/errors.hpp"

#include <algorithm>
#include <numeric>

namespace faircee {

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

double logistic_loglik(const Eigen::Ref<const Eigen::VectorXd>& eta,
                       const Eigen::Ref<const Eigen::VectorXd>& target01) {
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += target01(i) * eta(i) - softplus(eta(i));
  return ll;
}

LogisticFit fit_logistic_newton(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                const Eigen::Ref<const Eigen::VectorXd>& target01,
                                const PropensityOptions& opts, double ridge) {
  const Index p = design.cols();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, ridge);
  if (p > 0) penalty(p - 1) = 0.0;

  auto objective = [&](const Eigen::VectorXd& w) {
    return logistic_loglik(design * w, target01) - 0.5 * w.dot(penalty.cwiseProduct(w));
  };

  LogisticFit fit;
  fit.weights = Eigen::VectorXd::Zero(p);
  double current = objective(fit.weights);
  fit.loglik_trace.push_back(current);

  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd eta = design * fit.weights;
    Eigen::VectorXd prob(eta.size());
    for (Index i = 0; i < eta.size(); ++i) prob(i) = sigmoid(eta(i));
    const Eigen::VectorXd grad = design.transpose() * (target01 - prob) - penalty.cwiseProduct(fit.weights);
    if (grad.lpNorm<Eigen::Infinity>() <= opts.tol) {
      fit.converged = true;
      break;
    }

    const Eigen::VectorXd curvature = prob.cwiseProduct(Eigen::VectorXd::Ones(prob.size()) - prob);
    Eigen::MatrixXd hessian = design.transpose() * curvature.asDiagonal() * design;
    hessian.diagonal() += penalty;
    // Tiny Levenberg term keeps the system solvable once the fit saturates.
    hessian.diagonal().array() += 1e-12 * std::max(1.0, hessian.diagonal().maxCoeff());
    const Eigen::VectorXd direction = hessian.ldlt().solve(grad);
    if (!direction.allFinite()) break;

    bool accepted = false;
    bool stalled = false;
    double step = 1.0;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const Eigen::VectorXd candidate = fit.weights + step * direction;
      const double value = objective(candidate);
      if (std::isfinite(value) && value >= current) {
        stalled = value == current;
        fit.weights = candidate;
        current = value;
        accepted = true;
        break;
      }
    }
    ++fit.iterations;
    if (!accepted) break;
    fit.loglik_trace.push_back(current);
    if (stalled) {
      // Gradient is at round-off level: no step changes the objective any more.
      fit.converged = true;
      break;
    }
  }
  return fit;
}

Eigen::VectorXd clip_scores(const Eigen::Ref<const Eigen::VectorXd>& z) {
  return z.cwiseMax(kPropensityClip).cwiseMin(1.0 - kPropensityClip);
}

PropensityScores fit_propensity(const Dataset& data, const PropensityOptions& opts) {
  if (data.explanatory_idx.empty()) throw ValidationError("propensity model needs explanatory features");
  const Eigen::MatrixXd Xe = data.explanatory();
  if (!Xe.allFinite()) throw ValidationError("explanatory features contain non-finite values");
  Eigen::MatrixXd design(Xe.rows(), Xe.cols() + 1);
  design << Xe, Eigen::VectorXd::Ones(Xe.rows());

  const LogisticFit fit = fit_logistic_newton(design, data.s, opts);
  const Eigen::VectorXd eta = design * fit.weights;
  Eigen::VectorXd z(eta.size());
  for (Index i = 0; i < eta.size(); ++i) z(i) = sigmoid(eta(i));

  PropensityScores out;
  out.z = clip_scores(z);
  out.model_weights = fit.weights;
  out.auc = compute_auc(out.z, data.s);
  out.iterations = fit.iterations;
  out.converged = fit.converged;
  return out;
}

double compute_auc(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& s) {
  if (z.size() != s.size()) throw ValidationError("compute_auc: score and label lengths differ");
  require_two_groups(s, "compute_auc");
  const Index n = z.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z(a) < z(b); });

  // Midranks (1-based) over tie blocks.
  double rank_sum_plus = 0.0;
  double n_plus = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && z(order[j + 1]) == z(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (s(order[k]) == 1.0) {
        rank_sum_plus += midrank;
        n_plus += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_minus = static_cast<double>(n) - n_plus;
  return (rank_sum_plus - n_plus * (n_plus + 1.0) / 2.0) / (n_plus * n_minus);
}

}  // namespace faircee
