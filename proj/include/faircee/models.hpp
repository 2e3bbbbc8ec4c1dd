#pragma once

#include "faircee/data.hpp"
#include "faircee/estimators.hpp"
#include "faircee/propensity.hpp"
#include "faircee/solvers.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace faircee {

enum class Method { Unconstrained, SingleMD, MultiMD, FairCEE_IPW, FairCEE_DR };

struct MethodSpec {
  Method method = Method::Unconstrained;
  /// Number of strata for MultiMD; 0 means "largest feasible", resolved by the harness.
  int strata = 0;
  Task task = Task::Regression;
  PgmOptions solver;
  PropensityOptions propensity;

  /// Parses "unconstrained", "single", "multi:K", "multi:max", "ipw" or "dr".
  static MethodSpec parse(const std::string& text, Task task = Task::Regression);
  /// Short name as accepted by parse(), e.g. "multi:4".
  std::string name() const;
  bool needs_propensity() const;
};

struct FittedModel {
  MethodSpec spec;
  Solution solution;
  std::optional<PropensityScores> scores_used;
  std::optional<OutcomeModels> outcome_models;
  bool intercept = true;
  Index features = 0;  // d of the training data, without intercept
};

/// Builds the constraint a method places on the design matrix.
ConstraintSystem build_constraint(const Dataset& data, const MethodSpec& spec, const PropensityScores* scores,
                                  const OutcomeModels* outcome);

/// Fits a method, estimating propensity scores when it needs them.
FittedModel fit(const Dataset& data, const MethodSpec& spec);
/// Fits a method with externally supplied (shared) propensity scores.
FittedModel fit(const Dataset& data, const MethodSpec& spec, const PropensityScores& scores);

/// Linear scores X w (intercept column appended when the model has one).
Eigen::VectorXd predict_scores(const FittedModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_new);
/// Regression: X w. Classification: sigmoid(X w).
Eigen::VectorXd predict(const FittedModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_new);

nlohmann::json to_json(const FittedModel& model);

}  // namespace faircee
