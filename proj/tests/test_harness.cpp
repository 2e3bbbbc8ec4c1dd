#include "faircee/harness.hpp"

#include <doctest.h>

using namespace faircee;

namespace {

SyntheticConfig small(SyntheticCase which, Index n = 500) {
  SyntheticConfig c = preset(which);
  c.N = n;
  return c;
}

std::vector<MethodSpec> methods(std::initializer_list<const char*> names) {
  std::vector<MethodSpec> out;
  for (const char* n : names) out.push_back(MethodSpec::parse(n));
  return out;
}

}  // namespace

TEST_CASE("summarize examples") {
  const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(summarize({7.0}).se == 0.0);
}

TEST_CASE("format_real keeps 12 significant digits") {
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(0.1 + 0.2) == "0.3");
  CHECK(format_real(-1234567.891011121) == "-1234567.89101");
}

TEST_CASE("aggregated rows average the feasible per-trial rows") {
  TradeoffOptions opts;
  opts.trials = 4;
  opts.seed = 3;
  const TradeoffResult r = run_tradeoff(small(SyntheticCase::Default), methods({"single", "multi:2", "ipw", "dr"}), opts);
  CHECK(r.has_truth);
  REQUIRE(r.aggregated.size() == 4);
  CHECK(r.per_trial.size() == 16);
  for (const AggregateRow& agg : r.aggregated) {
    std::vector<double> loss, md;
    for (const MetricsRow& row : r.per_trial)
      if (row.method == agg.method && !row.infeasible) {
        loss.push_back(row.loss);
        md.push_back(row.md_pred);
      }
    REQUIRE(agg.loss);
    CHECK(agg.feasible_trials == static_cast<int>(loss.size()));
    CHECK(agg.loss->mean == doctest::Approx(summarize(loss).mean).epsilon(1e-14));
    CHECK(agg.loss->se == doctest::Approx(summarize(loss).se).epsilon(1e-12));
    CHECK(agg.md_pred->mean == doctest::Approx(summarize(md).mean).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("per-trial loss is the RMSE of the fitted model on the trial data") {
  TradeoffOptions opts;
  opts.trials = 2;
  opts.seed = 11;
  const SyntheticConfig base = small(SyntheticCase::Default);
  const TradeoffResult r = run_tradeoff(base, methods({"single"}), opts);
  for (int t = 0; t < 2; ++t) {
    SyntheticConfig c = base;
    c.seed = trial_seed(11, static_cast<std::uint64_t>(t));
    const SyntheticData gen = generate(c);
    const FittedModel m = fit(gen.dataset, MethodSpec::parse("single"));
    const Eigen::VectorXd resid = predict(m, gen.dataset.X) - gen.dataset.y;
    const double rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
    CHECK(r.per_trial[static_cast<std::size_t>(t)].loss == doctest::Approx(rmse).epsilon(1e-12));
    CHECK(std::abs(r.per_trial[static_cast<std::size_t>(t)].md_pred) <= 1e-9);
    CHECK(*r.per_trial[static_cast<std::size_t>(t)].discrim_pred ==
          doctest::Approx(-gen.truth.explanatory_bias).epsilon(1e-9));
  }
}

TEST_CASE("tradeoff output is deterministic for a seed") {
  TradeoffOptions opts;
  opts.trials = 3;
  opts.seed = 5;
  opts.holdout = 0.25;
  const auto ms = methods({"single", "multi:max", "ipw", "dr"});
  const TradeoffResult a = run_tradeoff(small(SyntheticCase::Imbalance), ms, opts);
  const TradeoffResult b = run_tradeoff(small(SyntheticCase::Imbalance), ms, opts);
  CHECK(aggregated_csv(a) == aggregated_csv(b));
  CHECK(per_trial_csv(a) == per_trial_csv(b));
  opts.seed = 6;
  CHECK(aggregated_csv(run_tradeoff(small(SyntheticCase::Imbalance), ms, opts)) != aggregated_csv(a));
}

TEST_CASE("one-sided strata are reported per trial without aborting the run") {
  // Strong explanatory separation with many strata leaves pure strata at both ends.
  TradeoffOptions opts;
  opts.trials = 3;
  opts.seed = 1;
  const TradeoffResult r = run_tradeoff(small(SyntheticCase::Inferred), methods({"single", "multi:10"}), opts);
  int infeasible = 0;
  for (const MetricsRow& row : r.per_trial)
    if (row.method == "multi") {
      CHECK(row.K == 10);
      CHECK(row.infeasible);
      CHECK_FALSE(row.message.empty());
      ++infeasible;
    } else {
      CHECK_FALSE(row.infeasible);
    }
  CHECK(infeasible == 3);
  CHECK(r.aggregated[1].feasible_trials == 0);
  CHECK_FALSE(r.aggregated[1].loss);
  CHECK(per_trial_csv(r).find(",1\n") != std::string::npos);
}

TEST_CASE("a run where nothing is feasible raises") {
  TradeoffOptions opts;
  opts.trials = 2;
  CHECK_THROWS_AS(run_tradeoff(small(SyntheticCase::Inferred), methods({"multi:10"}), opts), AllInfeasibleError);
}

TEST_CASE("bad harness options are rejected") {
  TradeoffOptions opts;
  opts.trials = 0;
  CHECK_THROWS_AS(run_tradeoff(small(SyntheticCase::Default), methods({"single"}), opts), HarnessError);
  opts.trials = 1;
  opts.holdout = 1.0;
  CHECK_THROWS_AS(run_tradeoff(small(SyntheticCase::Default), methods({"single"}), opts), HarnessError);
  opts.holdout = 0.0;
  CHECK_THROWS_AS(run_tradeoff(small(SyntheticCase::Default), {}, opts), HarnessError);
}

TEST_CASE("CSV headers") {
  TradeoffOptions opts;
  const TradeoffResult r = run_tradeoff(small(SyntheticCase::Default, 100), methods({"single"}), opts);
  const std::string agg = aggregated_csv(r);
  CHECK(agg.rfind("method,K,trials,feasible_trials,loss_mean,loss_se,md_pred_mean,md_pred_se,discrim_pred_mean,"
                  "discrim_pred_se\n",
                  0) == 0);
}

TEST_CASE("max-strata probe stops before K reaches the design width") {
  std::vector<TrialData> trials;
  for (int t = 0; t < 3; ++t) {
    SyntheticConfig c = small(SyntheticCase::Degenerate, 2000);
    c.seed = trial_seed(2, static_cast<std::uint64_t>(t));
    SyntheticData gen = generate(c);
    TrialData td{std::move(gen.dataset), gen.truth, {}};
    td.scores = fit_propensity(td.data);
    trials.push_back(std::move(td));
  }
  const int solvable = probe_max_strata(trials, 10, true);
  CHECK(solvable <= 6);
  CHECK(probe_max_strata(trials, 10, false) >= solvable);
}

TEST_CASE("estimator accuracy rows") {
  EstimatorOptions opts;
  opts.trials = 5;
  opts.seed = 9;
  opts.strata = 2;
  const SyntheticConfig c = small(SyntheticCase::Default, 800);
  const auto rows = run_estimator_accuracy(c, opts);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].estimator == "single");
  CHECK(rows[1].estimator == "multi");
  CHECK(rows[1].K == 2);
  CHECK(rows[2].estimator == "ipw");
  CHECK(rows[3].estimator == "dr");

  // Oracle for the unadjusted row: squared error of the raw mean difference.
  std::vector<double> se;
  for (int t = 0; t < 5; ++t) {
    SyntheticConfig ct = c;
    ct.seed = trial_seed(9, static_cast<std::uint64_t>(t));
    const SyntheticData gen = generate(ct);
    const double md = mean_difference(gen.dataset.y, gen.dataset.s);
    se.push_back((md - gen.truth.discrim) * (md - gen.truth.discrim));
  }
  CHECK(rows[0].se == doctest::Approx(summarize(se).mean).epsilon(1e-12));
  CHECK(estimator_csv(rows).rfind("estimator,K,trials,se_mean,se_stderr,estimate_mean\n", 0) == 0);
}
