#include "faircee/solvers.hpp"

#include "faircee/propensity.hpp"

#include <algorithm>
#include <cmath>

namespace faircee {

void PgmOptions::validate() const {
  if (!(eta0 > 0.0)) throw ValidationError("PGM: eta0 must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("PGM: beta must lie in (0, 1)");
  if (max_iter <= 0) throw ValidationError("PGM: max_iter must be positive");
  if (!(grad_tol > 0.0)) throw ValidationError("PGM: grad_tol must be positive");
}

Solution solve_constrained_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const ConstraintSystem& c) {
  const Index d = X.cols();
  const Index m = c.rows();
  if (y.size() != X.rows()) throw ValidationError("least squares: X and y row counts differ");
  if (c.dim() != d) throw ValidationError("least squares: constraint width does not match X");
  if (m > d) throw DegenerateConstraintError("least squares: more constraints than weights");

  // Null-space form of the KKT system: P^T = Q1 R, w = Q1 u + Q2 v with R^T u = q,
  // then v solves the least-squares problem on the reduced design X Q2.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd R(m, m);
  Eigen::VectorXd w_particular = Eigen::VectorXd::Zero(d);
  if (m > 0) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(c.P().transpose());
    Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    R = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
    const Eigen::VectorXd u = R.transpose().triangularView<Eigen::Lower>().solve(c.q());
    w_particular = Q.leftCols(m) * u;
  }
  const Eigen::MatrixXd null_basis = Q.rightCols(d - m);

  Solution sol;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d - m);
  if (d > m) {
    const Eigen::MatrixXd reduced = X * null_basis;
    const Eigen::VectorXd target = y - X * w_particular;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rqr(reduced);
    if (rqr.rank() == d - m) {
      v = rqr.solve(target);
    } else {
      // Singular KKT matrix: 1e-10 I on the X^T X block, restricted to the null space.
      Eigen::MatrixXd normal = reduced.transpose() * reduced;
      normal.diagonal().array() += 1e-10;
      v = normal.ldlt().solve(reduced.transpose() * target);
      sol.ridge_fallback = true;
    }
  }

  sol.w = w_particular + null_basis * v;
  // Stationarity 2 X^T (X w - y) + P^T lambda = 0 gives lambda = -R^{-1} Q1^T g.
  sol.multipliers = Eigen::VectorXd::Zero(m);
  if (m > 0) {
    const Eigen::VectorXd g = 2.0 * X.transpose() * (X * sol.w - y);
    sol.multipliers = -R.triangularView<Eigen::Upper>().solve(Q.leftCols(m).transpose() * g);
  }
  sol.objective = (X * sol.w - y).squaredNorm();
  sol.constraint_residual = c.residual(sol.w);
  sol.iterations = 1;
  return sol;
}

double logistic_loss(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y01,
                     const Eigen::Ref<const Eigen::VectorXd>& w) {
  const Eigen::VectorXd margin = X * w;
  double total = 0.0;
  for (Index i = 0; i < margin.size(); ++i) {
    const double t = (y01(i) == 1.0 ? -1.0 : 1.0) * margin(i);  // -y_i w^T x_i with y in {-1, +1}
    total += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  return total;
}

namespace {

struct LogisticObjective {
  const Eigen::Ref<const Eigen::MatrixXd>& X;
  Eigen::VectorXd signs;

  double value(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd t = -signs.cwiseProduct(X * w);
    double total = 0.0;
    for (Index i = 0; i < t.size(); ++i) {
      total += t(i) > 0 ? t(i) + std::log1p(std::exp(-t(i))) : std::log1p(std::exp(t(i)));
    }
    return total;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd t = -signs.cwiseProduct(X * w);
    Eigen::VectorXd coef(t.size());
    for (Index i = 0; i < t.size(); ++i) coef(i) = -signs(i) * sigmoid(t(i));
    return X.transpose() * coef;
  }
};

struct SquaredObjective {
  const Eigen::Ref<const Eigen::MatrixXd>& X;
  const Eigen::Ref<const Eigen::VectorXd>& y;

  double value(const Eigen::VectorXd& w) const { return (X * w - y).squaredNorm(); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * X.transpose() * (X * w - y); }
};

template <typename Objective>
Solution projected_gradient(const Objective& f, Index dim, double lipschitz, const ConstraintSystem& c,
                            const PgmOptions& opts, PgmTrace* trace) {
  opts.validate();
  if (c.dim() != dim) throw ValidationError("PGM: constraint width does not match X");
  const double min_step = 1.0 / std::max(lipschitz, kLipschitzFloor);

  Solution sol;
  sol.converged = false;
  Eigen::VectorXd w = c.project(Eigen::VectorXd::Zero(dim));
  double fw = f.value(w);
  sol.loss_trace.push_back(fw);
  if (trace) {
    trace->iterates.push_back(w);
  }

  double eta = opts.eta0;
  for (int t = 1; t <= opts.max_iter; ++t) {
    const Eigen::VectorXd grad = f.gradient(w);
    Eigen::VectorXd candidate;
    double f_candidate = 0.0;
    while (true) {
      candidate = c.project(w - eta * grad);
      f_candidate = f.value(candidate);
      const Eigen::VectorXd diff = candidate - w;
      const double model = fw + grad.dot(diff) + diff.squaredNorm() / (2.0 * eta);
      if (f_candidate <= model) break;
      // At the 1/L floor the model is a true upper bound, so a failed test is round-off.
      if (eta <= min_step) break;
      eta = std::max(opts.beta * eta, min_step);
    }
    if (f_candidate > fw) {
      // No representable decrease left: w is stationary to machine precision.
      sol.converged = true;
      break;
    }
    const double step = (candidate - w).lpNorm<Eigen::Infinity>() / eta;
    w = std::move(candidate);
    fw = f_candidate;
    sol.loss_trace.push_back(fw);
    sol.iterations = t;
    if (trace) {
      trace->iterates.push_back(w);
      trace->step_sizes.push_back(eta);
    }
    if (step <= opts.grad_tol) {
      sol.converged = true;
      break;
    }
  }
  sol.w = std::move(w);
  sol.objective = fw;
  sol.constraint_residual = c.residual(sol.w);
  return sol;
}

}  // namespace

Solution pgm_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y01,
                      const ConstraintSystem& c, const PgmOptions& opts, PgmTrace* trace) {
  if (y01.size() != X.rows()) throw ValidationError("PGM: X and y row counts differ");
  Eigen::VectorXd signs(y01.size());
  for (Index i = 0; i < y01.size(); ++i) {
    if (y01(i) != 0.0 && y01(i) != 1.0) throw ValidationError("PGM: labels must be 0 or 1");
    signs(i) = y01(i) == 1.0 ? 1.0 : -1.0;
  }
  const LogisticObjective f{X, std::move(signs)};
  return projected_gradient(f, X.cols(), lipschitz_constant(X), c, opts, trace);
}

Solution pgm_squared(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ConstraintSystem& c, const PgmOptions& opts, PgmTrace* trace) {
  if (y.size() != X.rows()) throw ValidationError("PGM: X and y row counts differ");
  const SquaredObjective f{X, y};
  return projected_gradient(f, X.cols(), 2.0 * lipschitz_constant(X), c, opts, trace);
}

}  // namespace faircee
