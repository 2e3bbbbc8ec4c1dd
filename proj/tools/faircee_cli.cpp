// faircee: generate synthetic data, fit fairness-constrained models, and run
// the loss/unfairness and estimator-accuracy experiments.
//
// Exit codes: 0 success, 1 usage or validation error, 2 infeasible constraints.

#include "faircee/errors.hpp"
#include "faircee/harness.hpp"
#include "faircee/models.hpp"
#include "faircee/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace faircee;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitInfeasible = 2;

struct ColumnArgs {
  std::string config;
  std::string sensitive;
  std::string label;
  std::vector<std::string> explanatory;
  std::string task = "regression";
  bool no_intercept = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "Column config JSON (a generate sidecar works)");
    app->add_option("--sensitive", sensitive, "Sensitive column name");
    app->add_option("--label", label, "Label column name");
    app->add_option("--explanatory", explanatory, "Explanatory column names")->delimiter(',');
    app->add_option("--task", task, "regression | classification");
    app->add_flag("--no-intercept", no_intercept, "Do not append an intercept column");
  }

  ColumnConfig resolve() const {
    ColumnConfig c;
    if (!config.empty()) c = ColumnConfig::from_json_file(config);
    if (!sensitive.empty()) c.sensitive = sensitive;
    if (!label.empty()) c.label = label;
    if (!explanatory.empty()) c.explanatory = explanatory;
    if (config.empty() || task != "regression") c.task = parse_task(task);
    if (no_intercept) c.intercept = false;
    if (c.sensitive.empty() || c.label.empty()) {
      throw ConfigError("need --config or both --sensitive and --label");
    }
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::vector<MethodSpec> parse_methods(const std::vector<std::string>& names, Task task) {
  std::vector<MethodSpec> out;
  for (const auto& n : names) out.push_back(MethodSpec::parse(n, task));
  return out;
}

int run_generate(const std::string& case_name, std::uint64_t seed, const std::string& out_path,
                 std::string truth_path, long long n_override, bool intercept) {
  SyntheticConfig config = preset(parse_case(case_name));
  config.seed = seed;
  config.intercept = intercept;
  if (n_override > 0) config.N = n_override;
  const SyntheticData gen = generate(config);
  write_csv(out_path, gen.dataset);
  if (truth_path.empty()) truth_path = fs::path(out_path).replace_extension(".json").string();
  write_text(truth_path, sidecar_json(config, gen.truth, gen.dataset).dump(2) + "\n");
  std::cerr << "wrote " << out_path << " (" << gen.dataset.rows() << " rows, " << gen.dataset.s.sum()
            << " with s=1); discrim=" << format_real(gen.truth.discrim)
            << " explanatory_bias=" << format_real(gen.truth.explanatory_bias) << "\n";
  return kExitOk;
}

int run_fit(const std::string& csv, const ColumnArgs& columns, const std::string& method, const std::string& model_out,
            const std::string& metrics_out, const std::string& truth_path) {
  const Dataset data = load_csv(csv, columns.resolve());
  MethodSpec spec = MethodSpec::parse(method, data.task);
  std::optional<GroundTruth> truth;
  if (!truth_path.empty()) {
    std::ifstream in(truth_path);
    if (!in) throw ConfigError("cannot open " + truth_path);
    const auto j = nlohmann::json::parse(in);
    truth = GroundTruth{j.at("discrim").get<double>(), j.at("explanatory_bias").get<double>()};
  }
  std::optional<PropensityScores> scores;
  if (spec.needs_propensity()) scores = fit_propensity(data, spec.propensity);
  if (spec.method == Method::MultiMD && spec.strata == 0) {
    spec.strata = probe_max_strata({TrialData{data, truth, *scores}}, 10, true);
  }
  const FittedModel model = scores ? fit(data, spec, *scores) : fit(data, spec);
  write_text(model_out, to_json(model).dump(2) + "\n");

  const Eigen::VectorXd pred = predict_scores(model, data.X);
  std::string metrics = "method,K,loss,";
  metrics += data.task == Task::Classification ? "md_scores,md_probs" : "md_pred";
  if (truth) metrics += ",discrim_pred";
  metrics += ",constraint_residual\n";
  metrics += spec.method == Method::MultiMD ? "multi," + std::to_string(spec.strata) : spec.name() + ",";
  double md = mean_difference(pred, data.s);
  if (data.task == Task::Regression) {
    metrics += "," + format_real(std::sqrt((pred - data.y).squaredNorm() / static_cast<double>(data.rows())));
    metrics += "," + format_real(md);
  } else {
    metrics += "," + format_real(model.solution.objective / static_cast<double>(data.rows()));
    metrics += "," + format_real(md) + "," + format_real(mean_difference(predict(model, data.X), data.s));
  }
  if (truth) metrics += "," + format_real(md - truth->explanatory_bias);
  metrics += "," + format_real(model.solution.constraint_residual) + "\n";
  if (metrics_out.empty()) {
    std::cerr << metrics;
  } else {
    write_text(metrics_out, metrics);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-constrained regression and classification with causal-effect estimators"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset and its ground-truth sidecar JSON");
  std::string gen_case = "default", gen_out, gen_truth;
  std::uint64_t gen_seed = 0;
  long long gen_n = 0;
  bool gen_intercept = false;
  gen->add_option("--case", gen_case, "default | imbalance | degenerate | inferred")->capture_default_str();
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--truth", gen_truth, "Sidecar JSON path (default: <out>.json)");
  gen->add_option("--n", gen_n, "Override the number of rows");
  gen->add_flag("--intercept", gen_intercept, "Record intercept=true in the sidecar column config");

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit one method on a CSV dataset and write the model JSON");
  std::string fit_csv, fit_method, fit_out, fit_metrics, fit_truth;
  ColumnArgs fit_cols;
  fitc->add_option("--csv", fit_csv, "Input CSV")->required();
  fit_cols.attach(fitc);
  fitc->add_option("--method", fit_method, "unconstrained | single | multi:K | multi:max | ipw | dr")->required();
  fitc->add_option("--out", fit_out, "Model JSON path (default: stdout)");
  fitc->add_option("--metrics", fit_metrics, "Metrics CSV path (default: stderr)");
  fitc->add_option("--truth", fit_truth, "Ground-truth sidecar JSON, enables discrim_pred");

  // tradeoff
  auto* trade = app.add_subcommand("tradeoff", "Loss versus unfairness over repeated trials");
  std::string trade_case, trade_csv, trade_out, trade_per_trial;
  ColumnArgs trade_cols;
  std::vector<std::string> trade_methods{"single", "multi:max", "ipw", "dr"};
  int trade_trials = 50, trade_max_k = 10;
  std::uint64_t trade_seed = 0;
  double trade_holdout = 0.0;
  trade->add_option("--case", trade_case, "Synthetic preset");
  trade->add_option("--csv", trade_csv, "Input CSV (instead of --case)");
  trade_cols.attach(trade);
  trade->add_option("--methods", trade_methods, "Comma-separated methods")->delimiter(',')->capture_default_str();
  trade->add_option("--trials", trade_trials, "Number of trials")->capture_default_str();
  trade->add_option("--seed", trade_seed, "RNG seed")->capture_default_str();
  trade->add_option("--holdout", trade_holdout, "Held-out fraction for evaluation")->capture_default_str();
  trade->add_option("--max-k", trade_max_k, "Largest K probed for multi:max")->capture_default_str();
  trade->add_option("--out", trade_out, "Aggregated CSV path (default: stdout)");
  trade->add_option("--per-trial", trade_per_trial, "Per-trial CSV path");

  // estimators
  auto* est = app.add_subcommand("estimators", "Squared error of MD, stratified MD, IPW and DR estimates");
  std::string est_case = "default", est_out;
  int est_trials = 50, est_strata = 0;
  std::uint64_t est_seed = 0;
  long long est_n = 0;
  est->add_option("--case", est_case, "Synthetic preset")->capture_default_str();
  est->add_option("--trials", est_trials, "Number of trials")->capture_default_str();
  est->add_option("--seed", est_seed, "RNG seed")->capture_default_str();
  est->add_option("--strata", est_strata, "Strata for the stratified estimator (0 = largest feasible)");
  est->add_option("--n", est_n, "Override the number of rows");
  est->add_option("--out", est_out, "Output CSV path (default: stdout)");

  // propensity
  auto* prop = app.add_subcommand("propensity", "Fit propensity scores and report AUC");
  std::string prop_csv, prop_out;
  ColumnArgs prop_cols;
  prop->add_option("--csv", prop_csv, "Input CSV")->required();
  prop_cols.attach(prop);
  prop->add_option("--out", prop_out, "Scores CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitInvalid;
  }

  try {
    if (*gen) return run_generate(gen_case, gen_seed, gen_out, gen_truth, gen_n, gen_intercept);
    if (*fitc) return run_fit(fit_csv, fit_cols, fit_method, fit_out, fit_metrics, fit_truth);
    if (*trade) {
      if (trade_case.empty() == trade_csv.empty()) throw ConfigError("give exactly one of --case or --csv");
      TradeoffOptions opts;
      opts.trials = trade_trials;
      opts.seed = trade_seed;
      opts.holdout = trade_holdout;
      opts.max_probe_strata = trade_max_k;
      TradeoffResult result;
      if (!trade_case.empty()) {
        result = run_tradeoff(preset(parse_case(trade_case)), parse_methods(trade_methods, Task::Regression), opts);
      } else {
        Dataset data = load_csv(trade_csv, trade_cols.resolve());
        const Task task = data.task;
        result = run_tradeoff(std::move(data), parse_methods(trade_methods, task), opts);
      }
      write_text(trade_out, aggregated_csv(result));
      if (!trade_per_trial.empty()) write_text(trade_per_trial, per_trial_csv(result));
      return kExitOk;
    }
    if (*est) {
      SyntheticConfig config = preset(parse_case(est_case));
      if (est_n > 0) config.N = est_n;
      EstimatorOptions opts;
      opts.trials = est_trials;
      opts.seed = est_seed;
      opts.strata = est_strata;
      write_text(est_out, estimator_csv(run_estimator_accuracy(config, opts)));
      return kExitOk;
    }
    if (*prop) {
      const Dataset data = load_csv(prop_csv, prop_cols.resolve());
      const PropensityScores scores = fit_propensity(data);
      std::ostringstream out;
      out << "z,s\n";
      for (Index i = 0; i < data.rows(); ++i) out << format_real(scores.z(i)) << "," << data.s(i) << "\n";
      write_text(prop_out, out.str());
      std::cerr << "auc=" << format_real(scores.auc) << " iterations=" << scores.iterations
                << " converged=" << (scores.converged ? "true" : "false") << "\n";
      return kExitOk;
    }
  } catch (const MultiMDInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const DegenerateConstraintError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const StratificationError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const AllInfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
