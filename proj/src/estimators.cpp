#include "faircee/estimators.hpp"

#include "faircee/propensity.hpp"

#include <algorithm>
#include <numeric>

namespace faircee {

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::None: return "none";
    case ConstraintKind::SingleMD: return "single_md";
    case ConstraintKind::MultiMD: return "multi_md";
    case ConstraintKind::IPW: return "ipw";
    case ConstraintKind::DR: return "dr";
  }
  return "unknown";
}

ConstraintSystem::ConstraintSystem(Eigen::MatrixXd P, Eigen::VectorXd q, ConstraintKind kind, int strata)
    : P_(std::move(P)), q_(std::move(q)), kind_(kind), strata_(strata) {
  if (q_.size() != P_.rows()) throw DegenerateConstraintError("constraint: P and q row counts differ");
  if (!P_.allFinite() || !q_.allFinite()) throw DegenerateConstraintError("constraint has non-finite entries");
  if (P_.rows() > P_.cols()) {
    throw DegenerateConstraintError("constraint has " + std::to_string(P_.rows()) + " rows but only " +
                                    std::to_string(P_.cols()) + " weights");
  }
  for (Index k = 0; k < P_.rows(); ++k) {
    if (P_.row(k).lpNorm<Eigen::Infinity>() == 0.0) {
      throw DegenerateConstraintError("constraint row " + std::to_string(k) + " is identically zero");
    }
  }
  if (P_.rows() == 0) return;
  const Eigen::MatrixXd gram = P_ * P_.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConstraintCondition) {
    throw DegenerateConstraintError("constraint matrix is rank deficient (cond(PP^T) = " +
                                    std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");
  }
  gram_.compute(gram);
}

ConstraintSystem ConstraintSystem::unconstrained(Index dim) {
  ConstraintSystem c;
  c.P_ = Eigen::MatrixXd::Zero(0, dim);
  c.q_ = Eigen::VectorXd::Zero(0);
  c.kind_ = ConstraintKind::None;
  return c;
}

Eigen::VectorXd ConstraintSystem::project(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (empty()) return w;
  const Eigen::VectorXd violation = P_ * w - q_;
  return w - P_.transpose() * gram_.solve(violation);
}

double ConstraintSystem::residual(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (empty()) return 0.0;
  return (P_ * w - q_).lpNorm<Eigen::Infinity>();
}

ConstraintSystem single_md_constraint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& s) {
  const Eigen::VectorXd d = md_constraint_vector(s);
  return ConstraintSystem(d.transpose() * X, Eigen::VectorXd::Zero(1), ConstraintKind::SingleMD);
}

ConstraintSystem ipw_constraint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& s,
                                const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::VectorXd h = ipw_constraint_vector(s, z);
  return ConstraintSystem(h.transpose() * X, Eigen::VectorXd::Zero(1), ConstraintKind::IPW);
}

ConstraintSystem dr_constraint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& s,
                               const Eigen::Ref<const Eigen::VectorXd>& z, const OutcomeModels& models) {
  if (models.g_plus.size() != X.rows() || models.g_minus.size() != X.rows()) {
    throw EstimatorError("dr_constraint: outcome predictions do not match the row count");
  }
  const auto w = ipw_weights(s, z);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(X.rows());
  const Eigen::RowVectorXd P = (w.a - w.b).transpose() * X;
  if (P.lpNorm<Eigen::Infinity>() == 0.0) {
    throw DegenerateConstraintError("DR constraint row is zero (a = b)");
  }
  Eigen::VectorXd q(1);
  q(0) = (one - w.b).dot(models.g_minus) - (one - w.a).dot(models.g_plus);
  return ConstraintSystem(P, q, ConstraintKind::DR);
}

std::vector<std::vector<Index>> stratify(const Eigen::Ref<const Eigen::VectorXd>& z, int K) {
  const Index n = z.size();
  if (K < 1 || K > n) {
    throw StratificationError(K, "stratify: K = " + std::to_string(K) + " must lie in [1, " +
                                     std::to_string(n) + "]");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z(a) < z(b); });

  std::vector<std::vector<Index>> strata(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const Index lo = static_cast<Index>(k) * n / K;
    const Index hi = static_cast<Index>(k + 1) * n / K;
    if (hi <= lo) throw StratificationError(K, "stratify: stratum " + std::to_string(k) + " is empty");
    auto& stratum = strata[static_cast<std::size_t>(k)];
    stratum.assign(order.begin() + lo, order.begin() + hi);
    std::sort(stratum.begin(), stratum.end());
  }
  return strata;
}

int first_one_sided_stratum(const std::vector<std::vector<Index>>& strata,
                            const Eigen::Ref<const Eigen::VectorXd>& s) {
  for (std::size_t k = 0; k < strata.size(); ++k) {
    std::size_t ones = 0;
    for (Index i : strata[k]) ones += s(i) == 1.0 ? 1 : 0;
    if (ones == 0 || ones == strata[k].size()) return static_cast<int>(k);
  }
  return -1;
}

namespace {

Eigen::VectorXd gather(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace

ConstraintSystem multi_md_constraints(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& s,
                                      const Eigen::Ref<const Eigen::VectorXd>& z, int K) {
  if (z.size() != X.rows() || s.size() != X.rows()) {
    throw EstimatorError("multi_md_constraints: input lengths differ");
  }
  const auto strata = stratify(z, K);
  if (const int bad = first_one_sided_stratum(strata, s); bad >= 0) {
    throw MultiMDInfeasible(bad, "Multi MD infeasible with K = " + std::to_string(K) + ": stratum " +
                                     std::to_string(bad) + " has only one sensitive group");
  }
  Eigen::MatrixXd P(K, X.cols());
  for (int k = 0; k < K; ++k) {
    const auto& idx = strata[static_cast<std::size_t>(k)];
    const Eigen::VectorXd dk = md_constraint_vector(gather(s, idx));
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) row += dk(static_cast<Index>(i)) * X.row(idx[i]);
    P.row(k) = row;
  }
  return ConstraintSystem(std::move(P), Eigen::VectorXd::Zero(K), ConstraintKind::MultiMD, K);
}

std::vector<double> stratum_mean_differences(const Eigen::Ref<const Eigen::VectorXd>& y,
                                             const Eigen::Ref<const Eigen::VectorXd>& s,
                                             const std::vector<std::vector<Index>>& strata) {
  std::vector<double> out;
  out.reserve(strata.size());
  for (const auto& idx : strata) out.push_back(mean_difference(gather(y, idx), gather(s, idx)));
  return out;
}

namespace {

struct GroupFit {
  Eigen::VectorXd weights;
  bool ridge = false;
};

GroupFit fit_group(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, Task task) {
  GroupFit fit;
  const Index p = design.cols();
  fit.ridge = design.rows() <= p;
  if (task == Task::Classification) {
    fit.weights = fit_logistic_newton(design, target, {}, fit.ridge ? kOutcomeRidge : 0.0).weights;
    return fit;
  }
  if (fit.ridge) {
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().head(p - 1).array() += kOutcomeRidge;
    fit.weights = gram.ldlt().solve(design.transpose() * target);
  } else {
    fit.weights = design.colPivHouseholderQr().solve(target);
  }
  return fit;
}

}  // namespace

OutcomeModels fit_outcome_models(const Dataset& data) {
  if (data.explanatory_idx.empty()) throw EstimatorError("outcome models need explanatory features");
  const auto groups = index_sets(data.s);
  if (groups.plus.empty() || groups.minus.empty()) {
    throw EstimatorError("outcome models need both sensitive groups");
  }
  const Eigen::MatrixXd Xe = data.explanatory();
  Eigen::MatrixXd design(Xe.rows(), Xe.cols() + 1);
  design << Xe, Eigen::VectorXd::Ones(Xe.rows());

  auto rows_of = [&](const std::vector<Index>& idx) {
    Eigen::MatrixXd D(static_cast<Index>(idx.size()), design.cols());
    Eigen::VectorXd t(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      D.row(static_cast<Index>(i)) = design.row(idx[i]);
      t(static_cast<Index>(i)) = data.y(idx[i]);
    }
    return std::make_pair(D, t);
  };
  auto predict = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd g = design * w;
    if (data.task == Task::Classification) g = g.unaryExpr([](double t) { return sigmoid(t); });
    return g;
  };

  const auto [Dp, tp] = rows_of(groups.plus);
  const auto [Dm, tm] = rows_of(groups.minus);
  const GroupFit plus = fit_group(Dp, tp, data.task);
  const GroupFit minus = fit_group(Dm, tm, data.task);

  OutcomeModels out;
  out.weights_plus = plus.weights;
  out.weights_minus = minus.weights;
  out.ridge_plus = plus.ridge;
  out.ridge_minus = minus.ridge;
  out.g_plus = predict(plus.weights);
  out.g_minus = predict(minus.weights);
  return out;
}

}  // namespace faircee
