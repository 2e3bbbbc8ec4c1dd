#include "faircee/synthetic.hpp"

#include "faircee/errors.hpp"
#include "faircee/propensity.hpp"

#include <cmath>
#include <numbers>

namespace faircee {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(splitmix64(seed) ^ (0xD1B54A32D192ED03ULL * (trial + 1)));
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 == 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

SyntheticCase parse_case(const std::string& name) {
  if (name == "default") return SyntheticCase::Default;
  if (name == "imbalance") return SyntheticCase::Imbalance;
  if (name == "degenerate") return SyntheticCase::Degenerate;
  if (name == "inferred") return SyntheticCase::Inferred;
  throw ConfigError("unknown case '" + name + "' (expected default, imbalance, degenerate, inferred)");
}

std::string to_string(SyntheticCase c) {
  switch (c) {
    case SyntheticCase::Default: return "default";
    case SyntheticCase::Imbalance: return "imbalance";
    case SyntheticCase::Degenerate: return "degenerate";
    case SyntheticCase::Inferred: return "inferred";
  }
  return "unknown";
}

void SyntheticConfig::validate() const {
  if (d < 2 || d_e < 1 || d_e >= d) throw ConfigError("synthetic config needs 1 <= d_e < d");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("synthetic config needs 0 < r < 1");
  const double n = static_cast<double>(N);
  if (std::round(n * r) < 2.0 || n - std::round(n * r) < 2.0) {
    throw ConfigError("synthetic config needs at least two rows in each sensitive group");
  }
  const Index d_n = d - d_e;
  if (mu_e_plus.size() != d_e || mu_e_minus.size() != d_e || w_e.size() != d_e) {
    throw ConfigError("explanatory means and weights must have length d_e");
  }
  if (mu_n_plus.size() != d_n || mu_n_minus.size() != d_n || w_n.size() != d_n) {
    throw ConfigError("non-explanatory means and weights must have length d - d_e");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(w_s)) throw ConfigError("bad noise level or sensitive weight");
}

SyntheticConfig SyntheticConfig::with_levels(Index N, Index d, Index d_e, double r, double mu_e_plus,
                                              double mu_e_minus, double mu_n_plus, double mu_n_minus, double w_e,
                                              double w_n, double w_s) {
  SyntheticConfig c;
  c.N = N;
  c.d = d;
  c.d_e = d_e;
  c.r = r;
  const Index d_n = std::max<Index>(d - d_e, 0);
  c.mu_e_plus = Eigen::VectorXd::Constant(d_e, mu_e_plus);
  c.mu_e_minus = Eigen::VectorXd::Constant(d_e, mu_e_minus);
  c.mu_n_plus = Eigen::VectorXd::Constant(d_n, mu_n_plus);
  c.mu_n_minus = Eigen::VectorXd::Constant(d_n, mu_n_minus);
  c.w_e = Eigen::VectorXd::Constant(d_e, w_e);
  c.w_n = Eigen::VectorXd::Constant(d_n, w_n);
  c.w_s = w_s;
  return c;
}

GroundTruth ground_truth(const SyntheticConfig& c) {
  return GroundTruth{c.w_n.dot(c.mu_n_plus - c.mu_n_minus) + c.w_s, c.w_e.dot(c.mu_e_plus - c.mu_e_minus)};
}

SyntheticConfig preset(SyntheticCase which) {
  // mu_e- = 0, mu_n+ = 0.5, mu_n- = 0, w_e = w_n = 1, w_s = 1 are library choices.
  switch (which) {
    case SyntheticCase::Default: return SyntheticConfig::with_levels(2000, 14, 4, 0.5, 1.0, 0.0, 0.5, 0.0, 1.0, 1.0, 1.0);
    case SyntheticCase::Imbalance: return SyntheticConfig::with_levels(2000, 14, 4, 0.8, 1.0, 0.0, 0.5, 0.0, 1.0, 1.0, 1.0);
    case SyntheticCase::Degenerate: return SyntheticConfig::with_levels(2000, 7, 2, 0.5, 1.0, 0.0, 0.5, 0.0, 1.0, 1.0, 1.0);
    case SyntheticCase::Inferred: return SyntheticConfig::with_levels(2000, 14, 4, 0.5, 1.5, 0.0, 0.5, 0.0, 1.0, 1.0, 1.0);
  }
  throw ConfigError("unknown case");
}

SyntheticData generate(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Index n = config.N;
  const auto n_plus = static_cast<Index>(std::llround(static_cast<double>(n) * config.r));

  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  s.head(n_plus).setOnes();
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(s(i), s(j));
  }

  const Index d_e = config.d_e;
  const Index d_n = config.d - d_e;
  Eigen::MatrixXd X(n, config.d);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    const bool plus = s(i) == 1.0;
    const Eigen::VectorXd& mu_e = plus ? config.mu_e_plus : config.mu_e_minus;
    const Eigen::VectorXd& mu_n = plus ? config.mu_n_plus : config.mu_n_minus;
    for (Index j = 0; j < d_e; ++j) X(i, j) = mu_e(j) + rng.normal();
    for (Index j = 0; j < d_n; ++j) X(i, d_e + j) = mu_n(j) + rng.normal();
    y(i) = config.w_e.dot(X.row(i).head(d_e).transpose()) + config.w_n.dot(X.row(i).tail(d_n).transpose()) +
           config.w_s * s(i) + config.noise_sd * rng.normal();
  }

  std::vector<Index> explanatory(static_cast<std::size_t>(d_e));
  std::vector<std::string> names;
  for (Index j = 0; j < d_e; ++j) {
    explanatory[static_cast<std::size_t>(j)] = j;
    names.push_back("xe" + std::to_string(j + 1));
  }
  for (Index j = 0; j < d_n; ++j) names.push_back("xn" + std::to_string(j + 1));

  return SyntheticData{make_dataset(std::move(X), std::move(s), std::move(y), std::move(explanatory),
                                    Task::Regression, config.intercept, std::move(names)),
                       ground_truth(config)};
}

Eigen::VectorXd oracle_propensity(const SyntheticConfig& config, const Eigen::Ref<const Eigen::MatrixXd>& Xe) {
  if (Xe.cols() != config.d_e) throw ValidationError("oracle_propensity: expected d_e columns");
  const double prior = std::log(config.r / (1.0 - config.r));
  const Eigen::VectorXd shift = config.mu_e_plus - config.mu_e_minus;
  const double offset = 0.5 * (config.mu_e_plus.squaredNorm() - config.mu_e_minus.squaredNorm());
  const Eigen::VectorXd logit = (Xe * shift).array() + (prior - offset);
  return logit.unaryExpr([](double t) { return sigmoid(t); });
}

namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

nlohmann::json sidecar_json(const SyntheticConfig& config, const GroundTruth& truth, const Dataset& data) {
  const ColumnConfig columns = column_config_for(data);
  return {
      {"config",
       {{"N", config.N},
        {"d", config.d},
        {"d_e", config.d_e},
        {"r", config.r},
        {"mu_e_plus", as_vector(config.mu_e_plus)},
        {"mu_e_minus", as_vector(config.mu_e_minus)},
        {"mu_n_plus", as_vector(config.mu_n_plus)},
        {"mu_n_minus", as_vector(config.mu_n_minus)},
        {"w_e", as_vector(config.w_e)},
        {"w_n", as_vector(config.w_n)},
        {"w_s", config.w_s},
        {"noise_sd", config.noise_sd},
        {"seed", config.seed},
        {"intercept", config.intercept}}},
      {"discrim", truth.discrim},
      {"explanatory_bias", truth.explanatory_bias},
      {"sensitive", columns.sensitive},
      {"label", columns.label},
      {"explanatory", columns.explanatory},
      {"task", to_string(columns.task)},
      {"intercept", columns.intercept},
  };
}

}  // namespace faircee
