#include "faircee/estimators.hpp"
#include "faircee/synthetic.hpp"

#include <doctest.h>

using namespace faircee;

namespace {

double group_mean(const Eigen::VectorXd& v, const Eigen::VectorXd& s, double group) {
  double total = 0.0, count = 0.0;
  for (Index i = 0; i < v.size(); ++i)
    if (s(i) == group) {
      total += v(i);
      count += 1.0;
    }
  return total / count;
}

double group_var(const Eigen::VectorXd& v, const Eigen::VectorXd& s, double group) {
  const double m = group_mean(v, s, group);
  double ss = 0.0, count = 0.0;
  for (Index i = 0; i < v.size(); ++i)
    if (s(i) == group) {
      ss += (v(i) - m) * (v(i) - m);
      count += 1.0;
    }
  return ss / (count - 1.0);
}

// Standard error of a difference of two group means.
double md_standard_error(const Eigen::VectorXd& v, const Eigen::VectorXd& s) {
  const double np = s.sum(), nm = static_cast<double>(s.size()) - np;
  return std::sqrt(group_var(v, s, 1.0) / np + group_var(v, s, 0.0) / nm);
}

}  // namespace

TEST_CASE("splitmix64 reference value") {
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(trial_seed(1, 0) != trial_seed(1, 1));
  CHECK(trial_seed(1, 0) != trial_seed(2, 0));
}

TEST_CASE("Rng draws stay in range and have the right moments") {
  Rng rng(42);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
    CHECK(rng.below(7) < 7);
  }
  CHECK(std::abs(sum / n) <= 4.0 / std::sqrt(n));
  CHECK(std::abs(sumsq / n - 1.0) <= 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("presets") {
  const SyntheticConfig def = preset(SyntheticCase::Default);
  CHECK(def.N == 2000);
  CHECK(def.d == 14);
  CHECK(def.d_e == 4);
  CHECK(def.r == 0.5);
  CHECK(preset(SyntheticCase::Imbalance).r == 0.8);
  CHECK(preset(SyntheticCase::Degenerate).d == 7);
  CHECK(preset(SyntheticCase::Degenerate).d_e == 2);
  CHECK(preset(SyntheticCase::Inferred).mu_e_plus(0) == 1.5);
  CHECK(parse_case("imbalance") == SyntheticCase::Imbalance);
  CHECK_THROWS_AS(parse_case("unknown"), ConfigError);
}

TEST_CASE("ground truth of the default preset") {
  const GroundTruth t = ground_truth(preset(SyntheticCase::Default));
  CHECK(t.discrim == doctest::Approx(10 * 0.5 + 1.0));
  CHECK(t.explanatory_bias == doctest::Approx(4.0));
  CHECK(ground_truth(preset(SyntheticCase::Inferred)).explanatory_bias == doctest::Approx(6.0));
}

TEST_CASE("no sensitive effect gives zero discrimination") {
  SyntheticConfig c = SyntheticConfig::with_levels(500, 6, 2, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0);
  CHECK(ground_truth(c).discrim == 0.0);
}

TEST_CASE("group sizes are exact") {
  SyntheticConfig c = preset(SyntheticCase::Imbalance);
  c.seed = 7;
  const SyntheticData gen = generate(c);
  CHECK(gen.dataset.s.sum() == 1600.0);
  CHECK(gen.dataset.rows() == 2000);
  c.N = 11;
  c.r = 0.5;
  CHECK(generate(c).dataset.s.sum() == 6.0);  // round half away from zero
}

TEST_CASE("generation is deterministic per seed") {
  SyntheticConfig c = preset(SyntheticCase::Default);
  c.N = 300;
  c.seed = 3;
  const Dataset a = generate(c).dataset;
  const Dataset b = generate(c).dataset;
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK(a.s == b.s);
  c.seed = 4;
  CHECK_FALSE(generate(c).dataset.X == a.X);
}

TEST_CASE("large-sample mean difference matches discrimination plus explanatory bias") {
  SyntheticConfig c = preset(SyntheticCase::Default);
  c.N = 200000;
  c.seed = 2024;
  const SyntheticData gen = generate(c);
  const double md = mean_difference(gen.dataset.y, gen.dataset.s);
  const double se = md_standard_error(gen.dataset.y, gen.dataset.s);
  CHECK(std::abs(md - (gen.truth.discrim + gen.truth.explanatory_bias)) <= 3.0 * se);

  for (Index j = 0; j < c.d; ++j) {
    const Eigen::VectorXd col = gen.dataset.X.col(j);
    const double expected = j < c.d_e ? c.mu_e_plus(j) - c.mu_e_minus(j) : c.mu_n_plus(j - c.d_e) - c.mu_n_minus(j - c.d_e);
    CHECK(std::abs(mean_difference(col, gen.dataset.s) - expected) <= 4.0 * md_standard_error(col, gen.dataset.s));
    CHECK(group_var(col, gen.dataset.s, 1.0) == doctest::Approx(1.0).epsilon(0.03));
  }
}

TEST_CASE("IPW with the oracle propensity recovers discrimination") {
  SyntheticConfig c = preset(SyntheticCase::Default);
  c.N = 200000;
  c.seed = 77;
  const SyntheticData gen = generate(c);
  const Dataset& data = gen.dataset;
  const Eigen::VectorXd z = oracle_propensity(c, data.explanatory());
  const double est = ipw_estimate(data.y, data.s, z);

  // Linearized (influence-function) standard error of the weighted mean difference.
  const Index n = data.rows();
  Eigen::VectorXd a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a(i) = data.s(i) / z(i);
    b(i) = (1.0 - data.s(i)) / (1.0 - z(i));
  }
  const double mu1 = a.dot(data.y) / a.sum(), mu0 = b.dot(data.y) / b.sum();
  const double ma = a.mean(), mb = b.mean();
  Eigen::VectorXd phi(n);
  for (Index i = 0; i < n; ++i) phi(i) = a(i) * (data.y(i) - mu1) / ma - b(i) * (data.y(i) - mu0) / mb;
  const double se = std::sqrt((phi.array() - phi.mean()).square().sum() / static_cast<double>(n - 1)) /
                    std::sqrt(static_cast<double>(n));
  CHECK(std::abs(est - gen.truth.discrim) <= 4.0 * se);
}

TEST_CASE("oracle propensity is the posterior of the sensitive attribute") {
  const SyntheticConfig c = preset(SyntheticCase::Imbalance);
  Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 4);
  // At x = 0 the likelihood ratio is exp(-||mu+||^2 / 2).
  const double lr = std::exp(-0.5 * c.mu_e_plus.squaredNorm());
  const double expected = 0.8 * lr / (0.8 * lr + 0.2);
  CHECK(oracle_propensity(c, origin)(0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(oracle_propensity(c, Eigen::MatrixXd::Zero(1, 3)), ValidationError);
}

TEST_CASE("invalid configs are rejected") {
  SyntheticConfig c = preset(SyntheticCase::Default);
  c.d_e = c.d;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset(SyntheticCase::Default);
  c.r = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset(SyntheticCase::Default);
  c.N = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset(SyntheticCase::Default);
  c.w_e.resize(2);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset(SyntheticCase::Default);
  c.noise_sd = -1.0;
  CHECK_THROWS_AS(generate(c), ConfigError);
}

TEST_CASE("sidecar doubles as a column config") {
  SyntheticConfig c = preset(SyntheticCase::Degenerate);
  c.N = 50;
  const SyntheticData gen = generate(c);
  const nlohmann::json j = sidecar_json(c, gen.truth, gen.dataset);
  CHECK(j.at("discrim").get<double>() == gen.truth.discrim);
  const ColumnConfig cols = ColumnConfig::from_json_text(j.dump());
  CHECK(cols.explanatory == std::vector<std::string>{"xe1", "xe2"});
  CHECK_FALSE(cols.intercept);
}
