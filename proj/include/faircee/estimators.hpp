#pragma once

#include "faircee/data.hpp"
#include "faircee/errors.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace faircee {

// ---------------------------------------------------------------------------
// Estimators of the effect of S on an outcome vector y.
//
// Each estimator is linear in y and is paired with a constraint vector c such
// that c^T y reproduces it. Constraining c^T X w = 0 therefore sets the
// estimate on the model's outputs to zero.
// ---------------------------------------------------------------------------

namespace detail {

template <typename DerivedS>
void check_binary_groups(const Eigen::MatrixBase<DerivedS>& s, const char* where) {
  using Scalar = typename DerivedS::Scalar;
  Index ones = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) == Scalar(1)) {
      ++ones;
    } else if (s(i) != Scalar(0)) {
      throw EstimatorError(std::string(where) + ": sensitive values must be 0 or 1");
    }
  }
  if (ones == 0 || ones == s.size()) {
    throw EstimatorError(std::string(where) + ": both sensitive groups must be nonempty");
  }
}

template <typename DerivedA, typename DerivedB>
void check_same_size(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                     const char* where) {
  if (a.size() != b.size()) throw EstimatorError(std::string(where) + ": vector lengths differ");
}

template <typename DerivedZ>
void check_open_unit(const Eigen::MatrixBase<DerivedZ>& z, const char* where) {
  using Scalar = typename DerivedZ::Scalar;
  for (Index i = 0; i < z.size(); ++i) {
    if (!(z(i) > Scalar(0) && z(i) < Scalar(1))) {
      throw EstimatorError(std::string(where) + ": propensity scores must lie in (0, 1)");
    }
  }
}

}  // namespace detail

/// d = s / 1^T s - (1 - s) / 1^T (1 - s).
template <typename DerivedS>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, 1> md_constraint_vector(
    const Eigen::MatrixBase<DerivedS>& s) {
  using Scalar = typename DerivedS::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  detail::check_binary_groups(s, "md_constraint_vector");
  const Vec plus = s;
  const Vec minus = Vec::Ones(s.size()) - plus;
  return plus / plus.sum() - minus / minus.sum();
}

/// Mean of y over S = 1 minus mean over S = 0.
template <typename DerivedY, typename DerivedS>
typename DerivedY::Scalar mean_difference(const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedS>& s) {
  using Scalar = typename DerivedY::Scalar;
  detail::check_same_size(y, s, "mean_difference");
  detail::check_binary_groups(s, "mean_difference");
  Scalar sum_plus(0), sum_minus(0);
  Index n_plus = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (s(i) == 1) {
      sum_plus += y(i);
      ++n_plus;
    } else {
      sum_minus += y(i);
    }
  }
  return sum_plus / Scalar(n_plus) - sum_minus / Scalar(y.size() - n_plus);
}

/// Inverse-propensity weights a_i = s_i / z_i and b_i = (1 - s_i) / (1 - z_i).
template <typename Scalar>
struct IpwWeights {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> a;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b;
};

template <typename DerivedS, typename DerivedZ>
IpwWeights<typename DerivedS::Scalar> ipw_weights(const Eigen::MatrixBase<DerivedS>& s,
                                                  const Eigen::MatrixBase<DerivedZ>& z) {
  using Scalar = typename DerivedS::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  detail::check_same_size(s, z, "ipw_weights");
  detail::check_open_unit(z, "ipw_weights");
  const Vec one = Vec::Ones(s.size());
  IpwWeights<Scalar> w;
  w.a = s.cwiseQuotient(z);
  w.b = (one - s).cwiseQuotient(one - z);
  return w;
}

/// h = a / 1^T a - b / 1^T b.
template <typename DerivedS, typename DerivedZ>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, 1> ipw_constraint_vector(
    const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedZ>& z) {
  detail::check_binary_groups(s, "ipw_constraint_vector");
  const auto w = ipw_weights(s, z);
  return w.a / w.a.sum() - w.b / w.b.sum();
}

/// Difference of the inverse-propensity weighted group means of y.
template <typename DerivedY, typename DerivedS, typename DerivedZ>
typename DerivedY::Scalar ipw_estimate(const Eigen::MatrixBase<DerivedY>& y,
                                       const Eigen::MatrixBase<DerivedS>& s,
                                       const Eigen::MatrixBase<DerivedZ>& z) {
  detail::check_same_size(y, s, "ipw_estimate");
  detail::check_binary_groups(s, "ipw_estimate");
  const auto w = ipw_weights(s, z);
  return w.a.dot(y) / w.a.sum() - w.b.dot(y) / w.b.sum();
}

// ---------------------------------------------------------------------------
// Outcome models for the doubly robust estimator.
// ---------------------------------------------------------------------------

/// Per-group regressions of y on the explanatory features, evaluated on all rows.
struct OutcomeModels {
  Eigen::VectorXd g_plus;
  Eigen::VectorXd g_minus;
  /// Explanatory coefficients followed by the intercept.
  Eigen::VectorXd weights_plus;
  Eigen::VectorXd weights_minus;
  bool ridge_plus = false;
  bool ridge_minus = false;
};

/// Ridge used when a group has at most d_e + 1 rows.
inline constexpr double kOutcomeRidge = 1e-6;

/// Fits G+ on rows with S = 1 and G- on rows with S = 0 (OLS or logistic MLE).
OutcomeModels fit_outcome_models(const Dataset& data);

/// (1/N) sum[(a - b) y + (1 - a) g+ - (1 - b) g-].
template <typename DerivedY, typename DerivedS, typename DerivedZ>
typename DerivedY::Scalar dr_estimate(const Eigen::MatrixBase<DerivedY>& y,
                                      const Eigen::MatrixBase<DerivedS>& s,
                                      const Eigen::MatrixBase<DerivedZ>& z,
                                      const OutcomeModels& models) {
  using Scalar = typename DerivedY::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  detail::check_same_size(y, s, "dr_estimate");
  if (models.g_plus.size() != y.size() || models.g_minus.size() != y.size()) {
    throw EstimatorError("dr_estimate: outcome predictions do not match the label length");
  }
  const auto w = ipw_weights(s, z);
  const Vec one = Vec::Ones(y.size());
  const Scalar total = (w.a - w.b).dot(y) + (one - w.a).dot(models.g_plus.template cast<Scalar>()) -
                       (one - w.b).dot(models.g_minus.template cast<Scalar>());
  return total / Scalar(y.size());
}

// ---------------------------------------------------------------------------
// Affine constraints P w = q on model weights.
// ---------------------------------------------------------------------------

enum class ConstraintKind { None, SingleMD, MultiMD, IPW, DR };

std::string to_string(ConstraintKind kind);

/// Condition-number bound on P P^T accepted at construction.
inline constexpr double kMaxConstraintCondition = 1e12;

class ConstraintSystem {
 public:
  /// Validates P (finite, no zero rows, m <= d, cond(P P^T) <= 1e12).
  ConstraintSystem(Eigen::MatrixXd P, Eigen::VectorXd q, ConstraintKind kind, int strata = 1);

  /// No constraints over `dim` weights.
  static ConstraintSystem unconstrained(Index dim);

  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::VectorXd& q() const { return q_; }
  ConstraintKind kind() const { return kind_; }
  int strata() const { return strata_; }
  Index rows() const { return P_.rows(); }
  Index dim() const { return P_.cols(); }
  bool empty() const { return P_.rows() == 0; }

  /// Euclidean projection onto {v : P v = q}.
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& w) const;
  /// ||P w - q||_inf (0 when unconstrained).
  double residual(const Eigen::Ref<const Eigen::VectorXd>& w) const;

 private:
  ConstraintSystem() = default;

  Eigen::MatrixXd P_;
  Eigen::VectorXd q_;
  ConstraintKind kind_ = ConstraintKind::None;
  int strata_ = 1;
  Eigen::LLT<Eigen::MatrixXd> gram_;  // of P P^T
};

/// P = d^T X, q = 0.
ConstraintSystem single_md_constraint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& s);
/// P = h^T X, q = 0.
ConstraintSystem ipw_constraint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& s,
                                const Eigen::Ref<const Eigen::VectorXd>& z);
/// P = (a - b)^T X, q = (1 - b)^T g- - (1 - a)^T g+.
ConstraintSystem dr_constraint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& s,
                               const Eigen::Ref<const Eigen::VectorXd>& z, const OutcomeModels& models);

/// Splits instances into K strata at the k/K quantiles of z.
///
/// Instances are stable-sorted by (z, index) and cut at positions floor(kN/K);
/// strata come back in increasing z order, each sorted by index.
std::vector<std::vector<Index>> stratify(const Eigen::Ref<const Eigen::VectorXd>& z, int K);

/// Index of the first stratum with a single sensitive group, or -1.
int first_one_sided_stratum(const std::vector<std::vector<Index>>& strata,
                            const Eigen::Ref<const Eigen::VectorXd>& s);

/// Row k is d_(k)^T X_(k); q = 0. Throws MultiMDInfeasible for a one-sided stratum.
ConstraintSystem multi_md_constraints(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& s,
                                      const Eigen::Ref<const Eigen::VectorXd>& z, int K);

/// Per-stratum mean differences MD_k of y.
std::vector<double> stratum_mean_differences(const Eigen::Ref<const Eigen::VectorXd>& y,
                                             const Eigen::Ref<const Eigen::VectorXd>& s,
                                             const std::vector<std::vector<Index>>& strata);

}  // namespace faircee
