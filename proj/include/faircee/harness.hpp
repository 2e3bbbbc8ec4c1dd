#pragma once

#include "faircee/data.hpp"
#include "faircee/models.hpp"
#include "faircee/synthetic.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace faircee {

/// Fixed-width real formatting for output CSVs (12 significant digits).
std::string format_real(double value);

/// One method on one trial.
struct MetricsRow {
  std::string method;
  std::optional<int> K;
  int trial = 0;
  double loss = 0.0;  // RMSE (regression) or mean logistic loss (classification)
  double md_pred = 0.0;  // MD of X w
  std::optional<double> md_probs;      // MD of sigmoid(X w), classification only
  std::optional<double> discrim_pred;  // md_pred - explanatory bias, synthetic only
  bool infeasible = false;
  std::string message;
};

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

/// Mean and standard error over trials where the method was feasible.
struct AggregateRow {
  std::string method;
  std::optional<int> K;
  int trials = 0;
  int feasible_trials = 0;
  std::optional<Summary> loss;
  std::optional<Summary> md_pred;
  std::optional<Summary> md_probs;
  std::optional<Summary> discrim_pred;
};

struct TradeoffResult {
  Task task = Task::Regression;
  bool has_truth = false;
  std::vector<MetricsRow> per_trial;
  std::vector<AggregateRow> aggregated;
};

using DataSource = std::variant<SyntheticConfig, Dataset>;

struct TradeoffOptions {
  int trials = 1;
  std::uint64_t seed = 0;
  /// Fraction of rows held out for evaluation; 0 evaluates in-sample.
  double holdout = 0.0;
  /// Largest K tried when resolving "multi:max".
  int max_probe_strata = 10;
};

/// Fits every method on every trial and summarizes loss against unfairness.
TradeoffResult run_tradeoff(const DataSource& source, const std::vector<MethodSpec>& methods,
                            const TradeoffOptions& opts);

std::string aggregated_csv(const TradeoffResult& result);
std::string per_trial_csv(const TradeoffResult& result);

Summary summarize(const std::vector<double>& values);

/// A dataset and its propensity scores for one trial.
struct TrialData {
  Dataset data;
  std::optional<GroundTruth> truth;
  PropensityScores scores;
};

/// Largest K in [2, max_k] such that every K' <= K stratifies into two-sided
/// strata on every trial. With `require_solvable`, K must also stay below the
/// number of design columns (K >= d leaves only w = 0) and give a valid
/// constraint system. Returns 1 when even K = 2 fails.
int probe_max_strata(const std::vector<TrialData>& trials, int max_k, bool require_solvable);

/// Squared error of an estimator of Discrim., averaged over trials.
struct EstimatorSERow {
  std::string estimator;  // "single", "multi", "ipw", "dr"
  std::optional<int> K;
  int trials = 0;
  double se = 0.0;        // mean over trials; for multi, (1/K) sum_k (MD_k - Discrim.)^2 per trial
  double se_stderr = 0.0;
  double estimate_mean = 0.0;
};

struct EstimatorOptions {
  int trials = 50;
  std::uint64_t seed = 0;
  /// Strata for the stratified estimator; 0 probes the largest feasible K.
  int strata = 0;
  int max_probe_strata = 10;
};

std::vector<EstimatorSERow> run_estimator_accuracy(const SyntheticConfig& config, const EstimatorOptions& opts);

std::string estimator_csv(const std::vector<EstimatorSERow>& rows);

}  // namespace faircee
