#include "faircee/harness.hpp"

#include "faircee/errors.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace faircee {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

Summary summarize(const std::vector<double>& values) {
  Summary out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

namespace {

struct Trial {
  TrialData train;
  std::optional<Dataset> test;
};

bool is_infeasibility(const std::exception& e) {
  return dynamic_cast<const MultiMDInfeasible*>(&e) != nullptr ||
         dynamic_cast<const DegenerateConstraintError*>(&e) != nullptr ||
         dynamic_cast<const StratificationError*>(&e) != nullptr;
}

bool has_two_groups(const Eigen::VectorXd& s) {
  const double ones = s.sum();
  return ones > 0.0 && ones < static_cast<double>(s.size());
}

std::vector<Trial> prepare_trials(const DataSource& source, const TradeoffOptions& opts, bool need_scores) {
  std::vector<Trial> trials;
  for (int t = 0; t < opts.trials; ++t) {
    const std::uint64_t stream = trial_seed(opts.seed, static_cast<std::uint64_t>(t));
    Trial trial;
    if (const auto* config = std::get_if<SyntheticConfig>(&source)) {
      SyntheticConfig c = *config;
      c.seed = stream;
      SyntheticData gen = generate(c);
      trial.train.data = std::move(gen.dataset);
      trial.train.truth = gen.truth;
    } else {
      trial.train.data = std::get<Dataset>(source);
    }

    if (opts.holdout > 0.0) {
      const Dataset full = std::move(trial.train.data);
      std::vector<Index> order(static_cast<std::size_t>(full.rows()));
      std::iota(order.begin(), order.end(), Index{0});
      Rng rng(splitmix64(stream ^ 0x5EED5A17ULL));
      for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
      const auto n_test = static_cast<std::size_t>(std::llround(opts.holdout * static_cast<double>(full.rows())));
      if (n_test < 2 || n_test + 2 > order.size()) throw HarnessError("holdout fraction leaves too few rows");
      std::vector<Index> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
      std::vector<Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
      trial.train.data = full.subset(train_rows);
      trial.test = full.subset(test_rows);
      if (!has_two_groups(trial.train.data.s) || !has_two_groups(trial.test->s)) {
        throw HarnessError("holdout split left a sensitive group empty in trial " + std::to_string(t));
      }
    }
    if (need_scores) trial.train.scores = fit_propensity(trial.train.data);
    trials.push_back(std::move(trial));
  }
  return trials;
}

double mean_logistic_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& y01) {
  double total = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    const double t = (y01(i) == 1.0 ? -1.0 : 1.0) * scores(i);
    total += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  return total / static_cast<double>(scores.size());
}

MetricsRow evaluate(const FittedModel& model, const Dataset& eval, const std::optional<GroundTruth>& truth) {
  MetricsRow row;
  const Eigen::VectorXd scores = predict_scores(model, eval.X);
  if (eval.task == Task::Regression) {
    row.loss = std::sqrt((scores - eval.y).squaredNorm() / static_cast<double>(eval.rows()));
  } else {
    row.loss = mean_logistic_loss(scores, eval.y);
    row.md_probs = mean_difference(predict(model, eval.X), eval.s);
  }
  row.md_pred = mean_difference(scores, eval.s);
  if (truth) row.discrim_pred = row.md_pred - truth->explanatory_bias;
  return row;
}

std::optional<Summary> summarize_if(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return summarize(values);
}

}  // namespace

int probe_max_strata(const std::vector<TrialData>& trials, int max_k, bool require_solvable) {
  int best = 1;
  for (int k = 2; k <= max_k; ++k) {
    for (const auto& trial : trials) {
      const Dataset& data = trial.data;
      if (k > data.rows()) return best;
      const auto strata = stratify(trial.scores.z, k);
      if (first_one_sided_stratum(strata, data.s) >= 0) return best;
      if (require_solvable) {
        if (k >= data.design_cols()) return best;  // K >= d pins w to the zero vector
        try {
          multi_md_constraints(data.design(), data.s, trial.scores.z, k);
        } catch (const DegenerateConstraintError&) {
          return best;
        }
      }
    }
    best = k;
  }
  return best;
}

TradeoffResult run_tradeoff(const DataSource& source, const std::vector<MethodSpec>& methods,
                            const TradeoffOptions& opts) {
  if (methods.empty()) throw HarnessError("no methods requested");
  if (opts.trials < 1) throw HarnessError("trials must be positive");
  if (!(opts.holdout >= 0.0 && opts.holdout < 1.0)) throw HarnessError("holdout must lie in [0, 1)");

  bool need_scores = false;
  for (const auto& m : methods) need_scores = need_scores || m.needs_propensity();
  std::vector<Trial> trials = prepare_trials(source, opts, need_scores);

  TradeoffResult result;
  result.task = trials.front().train.data.task;
  result.has_truth = trials.front().train.truth.has_value();

  std::optional<int> probed;
  for (MethodSpec spec : methods) {
    spec.task = result.task;
    if (spec.method == Method::MultiMD && spec.strata == 0) {
      if (!probed) {
        std::vector<TrialData> views;
        views.reserve(trials.size());
        for (const auto& t : trials) views.push_back(t.train);
        probed = probe_max_strata(views, opts.max_probe_strata, true);
      }
      spec.strata = *probed;
    }

    AggregateRow agg;
    agg.method = spec.method == Method::MultiMD ? "multi" : spec.name();
    if (spec.method == Method::MultiMD) agg.K = spec.strata;
    agg.trials = opts.trials;
    std::vector<double> loss, md, probs, discrim;

    for (int t = 0; t < opts.trials; ++t) {
      const Trial& trial = trials[static_cast<std::size_t>(t)];
      MetricsRow row;
      try {
        const FittedModel model = spec.needs_propensity() ? fit(trial.train.data, spec, trial.train.scores)
                                                          : fit(trial.train.data, spec);
        row = evaluate(model, trial.test ? *trial.test : trial.train.data, trial.train.truth);
        ++agg.feasible_trials;
        loss.push_back(row.loss);
        md.push_back(row.md_pred);
        if (row.md_probs) probs.push_back(*row.md_probs);
        if (row.discrim_pred) discrim.push_back(*row.discrim_pred);
      } catch (const Error& e) {
        if (!is_infeasibility(e)) throw;
        row = MetricsRow{};
        row.infeasible = true;
        row.message = e.what();
      }
      row.method = agg.method;
      row.K = agg.K;
      row.trial = t;
      result.per_trial.push_back(std::move(row));
    }
    agg.loss = summarize_if(loss);
    agg.md_pred = summarize_if(md);
    agg.md_probs = summarize_if(probs);
    agg.discrim_pred = summarize_if(discrim);
    result.aggregated.push_back(std::move(agg));
  }

  bool any_feasible = false;
  for (const auto& agg : result.aggregated) any_feasible = any_feasible || agg.feasible_trials > 0;
  if (!any_feasible) throw AllInfeasibleError("every requested method was infeasible on every trial");
  return result;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }
std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

void append_summary(std::string& out, const std::optional<Summary>& s) {
  out += "," + (s ? format_real(s->mean) : std::string()) + "," + (s ? format_real(s->se) : std::string());
}

}  // namespace

std::string aggregated_csv(const TradeoffResult& result) {
  const bool cls = result.task == Task::Classification;
  std::string out = "method,K,trials,feasible_trials,loss_mean,loss_se,";
  out += cls ? "md_scores_mean,md_scores_se,md_probs_mean,md_probs_se" : "md_pred_mean,md_pred_se";
  if (result.has_truth) out += ",discrim_pred_mean,discrim_pred_se";
  out += "\n";
  for (const auto& a : result.aggregated) {
    out += a.method + "," + cell(a.K) + "," + std::to_string(a.trials) + "," + std::to_string(a.feasible_trials);
    append_summary(out, a.loss);
    append_summary(out, a.md_pred);
    if (cls) append_summary(out, a.md_probs);
    if (result.has_truth) append_summary(out, a.discrim_pred);
    out += "\n";
  }
  return out;
}

std::string per_trial_csv(const TradeoffResult& result) {
  const bool cls = result.task == Task::Classification;
  std::string out = "method,K,trial,loss,";
  out += cls ? "md_scores,md_probs" : "md_pred";
  if (result.has_truth) out += ",discrim_pred";
  out += ",infeasible\n";
  for (const auto& r : result.per_trial) {
    out += r.method + "," + cell(r.K) + "," + std::to_string(r.trial) + ",";
    if (r.infeasible) {
      out += ",";
      if (cls) out += ",";
      if (result.has_truth) out += ",";
      out += "1\n";
      continue;
    }
    out += format_real(r.loss) + "," + format_real(r.md_pred);
    if (cls) out += "," + cell(r.md_probs);
    if (result.has_truth) out += "," + cell(r.discrim_pred);
    out += ",0\n";
  }
  return out;
}

std::vector<EstimatorSERow> run_estimator_accuracy(const SyntheticConfig& config, const EstimatorOptions& opts) {
  if (opts.trials < 1) throw HarnessError("trials must be positive");
  std::vector<TrialData> trials;
  for (int t = 0; t < opts.trials; ++t) {
    SyntheticConfig c = config;
    c.seed = trial_seed(opts.seed, static_cast<std::uint64_t>(t));
    SyntheticData gen = generate(c);
    TrialData trial{std::move(gen.dataset), gen.truth, {}};
    trial.scores = fit_propensity(trial.data);
    trials.push_back(std::move(trial));
  }
  const int K = opts.strata > 0 ? opts.strata : probe_max_strata(trials, opts.max_probe_strata, true);

  std::vector<double> se_single, se_multi, se_ipw, se_dr;
  std::vector<double> est_single, est_multi, est_ipw, est_dr;
  for (const auto& trial : trials) {
    const Dataset& data = trial.data;
    const double truth = trial.truth->discrim;
    const Eigen::VectorXd& z = trial.scores.z;

    const double md = mean_difference(data.y, data.s);
    est_single.push_back(md);
    se_single.push_back((md - truth) * (md - truth));

    const auto strata = stratify(z, K);
    if (const int bad = first_one_sided_stratum(strata, data.s); bad >= 0) {
      throw MultiMDInfeasible(bad, "stratified estimator undefined with K = " + std::to_string(K));
    }
    const auto mds = stratum_mean_differences(data.y, data.s, strata);
    double se = 0.0, mean_md = 0.0;
    for (double m : mds) {
      se += (m - truth) * (m - truth);
      mean_md += m;
    }
    se_multi.push_back(se / K);
    est_multi.push_back(mean_md / K);

    const double ipw = ipw_estimate(data.y, data.s, z);
    est_ipw.push_back(ipw);
    se_ipw.push_back((ipw - truth) * (ipw - truth));

    const double dr = dr_estimate(data.y, data.s, z, fit_outcome_models(data));
    est_dr.push_back(dr);
    se_dr.push_back((dr - truth) * (dr - truth));
  }

  auto row = [&](std::string name, std::optional<int> k, const std::vector<double>& se,
                 const std::vector<double>& est) {
    const Summary s = summarize(se);
    return EstimatorSERow{std::move(name), k, opts.trials, s.mean, s.se, summarize(est).mean};
  };
  return {row("single", std::nullopt, se_single, est_single), row("multi", K, se_multi, est_multi),
          row("ipw", std::nullopt, se_ipw, est_ipw), row("dr", std::nullopt, se_dr, est_dr)};
}

std::string estimator_csv(const std::vector<EstimatorSERow>& rows) {
  std::string out = "estimator,K,trials,se_mean,se_stderr,estimate_mean\n";
  for (const auto& r : rows) {
    out += r.estimator + "," + cell(r.K) + "," + std::to_string(r.trials) + "," + format_real(r.se) + "," +
           format_real(r.se_stderr) + "," + format_real(r.estimate_mean) + "\n";
  }
  return out;
}

}  // namespace faircee
