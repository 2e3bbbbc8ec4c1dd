#include "faircee/estimators.hpp"
#include "faircee/solvers.hpp"
#include "faircee/synthetic.hpp"

#include <doctest.h>

#include <limits>

using namespace faircee;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Index n, Index d) {
  Eigen::MatrixXd X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = rng.normal();
  return X;
}

Eigen::VectorXd random_vector(Rng& rng, Index n) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Eigen::VectorXd balanced_groups(Index n) {
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) s(i) = static_cast<double>(i % 2);
  return s;
}

// Logistic loss written out term by term.
double logistic_by_loops(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01, const Eigen::VectorXd& w) {
  double total = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double m = (2.0 * y01(i) - 1.0) * X.row(i).dot(w);
    total += std::log1p(std::exp(-m));
  }
  return total;
}

ConstraintSystem one_row(const Eigen::RowVectorXd& p, double q = 0.0) {
  return ConstraintSystem(p, Eigen::VectorXd::Constant(1, q), ConstraintKind::SingleMD);
}

}  // namespace

TEST_CASE("KKT example: identity design with an MD constraint") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(2, 2);
  Eigen::Vector2d y(1, -1), s(1, 0);
  const Solution sol = solve_constrained_least_squares(X, y, single_md_constraint(X, s));
  CHECK(sol.w.norm() <= 1e-12);
  CHECK(sol.objective == doctest::Approx(2.0));
  CHECK_FALSE(sol.ridge_fallback);
}

TEST_CASE("KKT example: inactive constraint returns least squares") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(2, 2);
  Eigen::Vector2d y(1, 1), s(1, 0);
  const Solution sol = solve_constrained_least_squares(X, y, single_md_constraint(X, s));
  CHECK(sol.w.isApprox(Eigen::Vector2d(1, 1)));
  CHECK(sol.objective <= 1e-20);
  CHECK(std::abs(sol.multipliers(0)) <= 1e-12);
}

TEST_CASE("unconstrained KKT reduces to ordinary least squares") {
  Rng rng(1);
  const Eigen::MatrixXd X = random_matrix(rng, 40, 5);
  const Eigen::VectorXd y = random_vector(rng, 40);
  const Solution sol = solve_constrained_least_squares(X, y, ConstraintSystem::unconstrained(5));
  const Eigen::VectorXd ols = X.householderQr().solve(y);
  CHECK((sol.w - ols).norm() <= 1e-10);
}

TEST_CASE("square full-rank design: constrained loss equals (c'y)^2 / ||c||^2") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd X = random_matrix(rng, 6, 6);
    const Eigen::VectorXd y = random_vector(rng, 6);
    const Eigen::VectorXd s = balanced_groups(6);
    const Eigen::VectorXd z = (0.2 + 0.6 * (random_vector(rng, 6).array().tanh() + 1.0) / 2.0).matrix();
    for (const Eigen::VectorXd& c : {md_constraint_vector(s), ipw_constraint_vector(s, z)}) {
      const ConstraintSystem sys = one_row(c.transpose() * X);
      const Solution sol = solve_constrained_least_squares(X, y, sys);
      const double oracle = std::pow(c.dot(y), 2) / c.squaredNorm();
      CHECK(sol.objective == doctest::Approx(oracle).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("tall design: constrained loss equals residual plus projected violation") {
  // Xw ranges over col(X); the constraint removes the direction Hc from the fit.
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Index n = 30, d = 4;
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::VectorXd y = random_vector(rng, n);
    const Eigen::VectorXd c = md_constraint_vector(balanced_groups(n));
    const Eigen::MatrixXd H = X * (X.transpose() * X).inverse() * X.transpose();
    const Eigen::VectorXd Hy = H * y, Hc = H * c;
    const double oracle = (y - Hy).squaredNorm() + std::pow(c.dot(Hy), 2) / Hc.squaredNorm();
    const Solution sol = solve_constrained_least_squares(X, y, one_row(c.transpose() * X));
    CHECK(sol.objective == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
    CHECK(sol.constraint_residual <= 1e-10);
  }
}

TEST_CASE("KKT solution satisfies stationarity and feasibility") {
  Rng rng(4);
  const Index n = 50, d = 6;
  const Eigen::MatrixXd X = random_matrix(rng, n, d);
  const Eigen::VectorXd y = random_vector(rng, n);
  Eigen::MatrixXd P = random_matrix(rng, 3, d);
  const Eigen::VectorXd q = random_vector(rng, 3);
  const ConstraintSystem sys(P, q, ConstraintKind::MultiMD, 3);
  const Solution sol = solve_constrained_least_squares(X, y, sys);
  const Eigen::VectorXd grad = 2.0 * X.transpose() * (X * sol.w - y) + P.transpose() * sol.multipliers;
  CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK((P * sol.w - q).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("rank-deficient design falls back to a ridge term") {
  Eigen::MatrixXd X(4, 3);
  X << 1, 2, 0, 2, 5, 0, 1, 0, 0, 0, 3, 0;
  X.col(2) = X.col(0) + X.col(1);  // rank 2
  Eigen::Vector4d y(1, 2, 3, 4);
  const Solution sol = solve_constrained_least_squares(X, y, ConstraintSystem::unconstrained(3));
  CHECK(sol.ridge_fallback);
  CHECK(sol.w.allFinite());
  const Eigen::VectorXd ols = X.completeOrthogonalDecomposition().solve(y);
  CHECK(sol.objective == doctest::Approx((X * ols - y).squaredNorm()).epsilon(1e-6));
}

TEST_CASE("lipschitz_constant examples") {
  CHECK(lipschitz_constant(Eigen::MatrixXd::Identity(3, 3)) == 3.0);
  Eigen::MatrixXd X(1, 2);
  X << 3, 4;
  CHECK(lipschitz_constant(X) == 25.0);
  CHECK(lipschitz_constant(Eigen::MatrixXd::Zero(5, 2)) == 0.0);
}

TEST_CASE("project_affine examples and idempotence") {
  const ConstraintSystem c = one_row(Eigen::RowVector2d(1, 1));
  CHECK(project_affine(Eigen::Vector2d(1, 0), c).isApprox(Eigen::Vector2d(0.5, -0.5)));
  const Eigen::Vector2d feasible(2, -2);
  CHECK(project_affine(feasible, c) == feasible);
  CHECK(project_affine(Eigen::Vector2d(7, 1), ConstraintSystem::unconstrained(2)) == Eigen::Vector2d(7, 1));

  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd P = random_matrix(rng, 2, 5);
    const ConstraintSystem sys(P, random_vector(rng, 2), ConstraintKind::MultiMD, 2);
    const Eigen::VectorXd w = random_vector(rng, 5);
    const Eigen::VectorXd once = project_affine(w, sys);
    CHECK((project_affine(once, sys) - once).norm() <= 1e-12 * (1.0 + once.norm()));
    CHECK(sys.residual(once) <= 1e-12);
    // The step from w is orthogonal to the null space of P.
    const Eigen::VectorXd step = w - once;
    CHECK((step - P.transpose() * (P * P.transpose()).ldlt().solve(P * step)).norm() <= 1e-10);
  }
}

TEST_CASE("PGM: feasible iterates, monotone loss, step never below 1/L") {
  SyntheticConfig cfg = preset(SyntheticCase::Default);
  cfg.N = 400;
  cfg.seed = 12;
  const SyntheticData gen = generate(cfg);
  const Dataset& data = gen.dataset;
  const Eigen::MatrixXd X = data.design();
  const double median = [&] {
    std::vector<double> v(data.y.data(), data.y.data() + data.y.size());
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  }();
  const Eigen::VectorXd y01 = (data.y.array() > median).cast<double>().matrix();
  const ConstraintSystem sys = single_md_constraint(X, data.s);

  PgmTrace trace;
  const Solution sol = pgm_logistic(X, y01, sys, {}, &trace);
  const double L = lipschitz_constant(X);
  CHECK(sol.converged);
  for (const auto& w : trace.iterates) CHECK(sys.residual(w) <= 1e-8);
  for (std::size_t t = 1; t < sol.loss_trace.size(); ++t)
    CHECK(sol.loss_trace[t] <= sol.loss_trace[t - 1] + 1e-9 * std::abs(sol.loss_trace[t - 1]));
  for (double eta : trace.step_sizes) CHECK(eta >= (1.0 / L) * (1.0 - 1e-12));
  CHECK(sol.objective == doctest::Approx(logistic_by_loops(X, y01, sol.w)).epsilon(1e-10));
}

TEST_CASE("PGM on two weights matches a grid search along the feasible line") {
  Rng rng(7);
  const Index n = 8;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y01(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y01(i) = static_cast<double>(i % 2);
  }
  y01(0) = 1.0;  // avoid perfect separation along the line
  const Eigen::RowVector2d p(1.0, 2.0);
  const ConstraintSystem sys = one_row(p, 0.5);
  const Solution sol = pgm_logistic(X, y01, sys);

  // Feasible set: w = w0 + t v, w0 = q p^T / ||p||^2, v orthogonal to p.
  const Eigen::Vector2d w0 = 0.5 * p.transpose() / p.squaredNorm();
  const Eigen::Vector2d v = Eigen::Vector2d(-p(1), p(0)).normalized();
  double best = std::numeric_limits<double>::infinity();
  for (double t = -20.0; t <= 20.0; t += 1e-4) best = std::min(best, logistic_by_loops(X, y01, w0 + t * v));
  CHECK(std::abs(sol.objective - best) <= 1e-3);
  CHECK(sys.residual(sol.w) <= 1e-10);
}

TEST_CASE("pgm_squared agrees with the KKT solution") {
  Rng rng(8);
  const Index n = 60, d = 4;
  const Eigen::MatrixXd X = random_matrix(rng, n, d);
  const Eigen::VectorXd y = random_vector(rng, n);
  const ConstraintSystem sys = single_md_constraint(X, balanced_groups(n));
  const Solution kkt = solve_constrained_least_squares(X, y, sys);
  PgmOptions opts;
  opts.max_iter = 100000;
  opts.grad_tol = 1e-10;
  const Solution pgm = pgm_squared(X, y, sys, opts);
  CHECK((pgm.w - kkt.w).norm() <= 1e-5 * (1.0 + kkt.w.norm()));
  CHECK(pgm.objective == doctest::Approx(kkt.objective).epsilon(1e-8));
}

TEST_CASE("PGM options are validated") {
  PgmOptions o;
  o.beta = 1.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.eta0 = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = {};
  o.max_iter = 0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
}

TEST_CASE("PGM on an all-zero design returns the projected start") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 2);
  Eigen::Vector4d y(1, 0, 1, 0);
  const Solution sol = pgm_logistic(X, y, ConstraintSystem::unconstrained(2));
  CHECK(sol.w.isZero());
  CHECK(sol.objective == doctest::Approx(4.0 * std::log(2.0)));
}
