#include "faircee/models.hpp"

#include "faircee/errors.hpp"

#include <charconv>

namespace faircee {

MethodSpec MethodSpec::parse(const std::string& text, Task task) {
  MethodSpec spec;
  spec.task = task;
  if (text == "unconstrained" || text == "none") {
    spec.method = Method::Unconstrained;
  } else if (text == "single") {
    spec.method = Method::SingleMD;
  } else if (text == "ipw") {
    spec.method = Method::FairCEE_IPW;
  } else if (text == "dr") {
    spec.method = Method::FairCEE_DR;
  } else if (text.rfind("multi:", 0) == 0) {
    spec.method = Method::MultiMD;
    const std::string arg = text.substr(6);
    if (arg == "max") {
      spec.strata = 0;
    } else {
      int k = 0;
      const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
      if (ec != std::errc() || ptr != arg.data() + arg.size() || k < 1) {
        throw ConfigError("bad strata count in method '" + text + "'");
      }
      spec.strata = k;
    }
  } else {
    throw ConfigError("unknown method '" + text + "' (expected unconstrained, single, multi:K, ipw, dr)");
  }
  return spec;
}

std::string MethodSpec::name() const {
  switch (method) {
    case Method::Unconstrained: return "unconstrained";
    case Method::SingleMD: return "single";
    case Method::MultiMD: return strata > 0 ? "multi:" + std::to_string(strata) : "multi:max";
    case Method::FairCEE_IPW: return "ipw";
    case Method::FairCEE_DR: return "dr";
  }
  return "unknown";
}

bool MethodSpec::needs_propensity() const {
  return method == Method::MultiMD || method == Method::FairCEE_IPW || method == Method::FairCEE_DR;
}

ConstraintSystem build_constraint(const Dataset& data, const MethodSpec& spec, const PropensityScores* scores,
                                  const OutcomeModels* outcome) {
  const Eigen::MatrixXd X = data.design();
  if (spec.needs_propensity() && scores == nullptr) {
    throw ValidationError("method " + spec.name() + " needs propensity scores");
  }
  switch (spec.method) {
    case Method::Unconstrained: return ConstraintSystem::unconstrained(X.cols());
    case Method::SingleMD: return single_md_constraint(X, data.s);
    case Method::MultiMD:
      if (spec.strata < 1) throw ValidationError("MultiMD needs K >= 1 (resolve multi:max first)");
      return multi_md_constraints(X, data.s, scores->z, spec.strata);
    case Method::FairCEE_IPW: return ipw_constraint(X, data.s, scores->z);
    case Method::FairCEE_DR:
      if (outcome == nullptr) throw ValidationError("FairCEE-DR needs outcome models");
      return dr_constraint(X, data.s, scores->z, *outcome);
  }
  throw ValidationError("unknown method");
}

namespace {

FittedModel fit_with(const Dataset& data, const MethodSpec& spec, std::optional<PropensityScores> scores) {
  if (spec.task != data.task) {
    throw ValidationError("method task (" + to_string(spec.task) + ") does not match dataset task (" +
                          to_string(data.task) + ")");
  }
  FittedModel model;
  model.spec = spec;
  model.intercept = data.intercept;
  model.features = data.features();
  if (spec.needs_propensity()) {
    if (!scores) scores = fit_propensity(data, spec.propensity);
    if (scores->z.size() != data.rows()) throw ValidationError("propensity scores do not match the dataset");
    model.scores_used = std::move(scores);
  }
  if (spec.method == Method::FairCEE_DR) model.outcome_models = fit_outcome_models(data);

  const ConstraintSystem constraint =
      build_constraint(data, spec, model.scores_used ? &*model.scores_used : nullptr,
                       model.outcome_models ? &*model.outcome_models : nullptr);
  const Eigen::MatrixXd X = data.design();
  model.solution = data.task == Task::Regression ? solve_constrained_least_squares(X, data.y, constraint)
                                                 : pgm_logistic(X, data.y, constraint, spec.solver);
  return model;
}

}  // namespace

FittedModel fit(const Dataset& data, const MethodSpec& spec) { return fit_with(data, spec, std::nullopt); }

FittedModel fit(const Dataset& data, const MethodSpec& spec, const PropensityScores& scores) {
  return fit_with(data, spec, scores);
}

Eigen::VectorXd predict_scores(const FittedModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_new) {
  if (X_new.cols() != model.features) {
    throw ValidationError("predict: expected " + std::to_string(model.features) + " columns, got " +
                          std::to_string(X_new.cols()));
  }
  Eigen::VectorXd scores = X_new * model.solution.w.head(model.features);
  if (model.intercept) scores.array() += model.solution.w(model.features);
  return scores;
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_new) {
  Eigen::VectorXd out = predict_scores(model, X_new);
  if (model.spec.task == Task::Classification) out = out.unaryExpr([](double t) { return sigmoid(t); });
  return out;
}

nlohmann::json to_json(const FittedModel& model) {
  const Solution& sol = model.solution;
  nlohmann::json diagnostics = {
      {"objective", sol.objective},
      {"constraint_residual", sol.constraint_residual},
      {"iterations", sol.iterations},
      {"converged", sol.converged},
      {"ridge_fallback", sol.ridge_fallback},
  };
  if (model.scores_used) {
    diagnostics["propensity_auc"] = model.scores_used->auc;
    diagnostics["propensity_weights"] = std::vector<double>(model.scores_used->model_weights.data(),
                                                            model.scores_used->model_weights.data() +
                                                                model.scores_used->model_weights.size());
  }
  ConstraintKind kind = ConstraintKind::None;
  switch (model.spec.method) {
    case Method::Unconstrained: kind = ConstraintKind::None; break;
    case Method::SingleMD: kind = ConstraintKind::SingleMD; break;
    case Method::MultiMD: kind = ConstraintKind::MultiMD; break;
    case Method::FairCEE_IPW: kind = ConstraintKind::IPW; break;
    case Method::FairCEE_DR: kind = ConstraintKind::DR; break;
  }
  nlohmann::json j = {
      {"method", model.spec.name()},
      {"task", to_string(model.spec.task)},
      {"weights", std::vector<double>(sol.w.data(), sol.w.data() + sol.w.size())},
      {"intercept_flag", model.intercept},
      {"constraint_kind", to_string(kind)},
      {"diagnostics", diagnostics},
  };
  if (model.spec.method == Method::MultiMD) j["strata"] = model.spec.strata;
  return j;
}

}  // namespace faircee
