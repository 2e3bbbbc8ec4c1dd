#pragma once

#include "faircee/data.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

namespace faircee {

/// Portable seeded generator: mt19937_64 seeded through splitmix64, with
/// uniform and Gaussian draws implemented here so that streams are
/// bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller, second variate cached).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Independent stream seed for trial `trial` of a run seeded with `seed`.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

enum class SyntheticCase { Default, Imbalance, Degenerate, Inferred };

SyntheticCase parse_case(const std::string& name);
std::string to_string(SyntheticCase c);

/// Group-conditional Gaussian features with a linear label.
///
/// Columns [0, d_e) are explanatory, [d_e, d) non-explanatory. Labels are
/// y = w_e^T x_e + w_n^T x_n + w_s s + eps with eps ~ N(0, noise_sd^2).
struct SyntheticConfig {
  Index N = 2000;
  Index d = 14;
  Index d_e = 4;
  double r = 0.5;  // fraction of rows with S = 1
  Eigen::VectorXd mu_e_plus;
  Eigen::VectorXd mu_e_minus;
  Eigen::VectorXd mu_n_plus;
  Eigen::VectorXd mu_n_minus;
  Eigen::VectorXd w_e;
  Eigen::VectorXd w_n;
  double w_s = 1.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
  /// Whether generated datasets fit an intercept column.
  bool intercept = false;

  void validate() const;
  /// Rebuilds every vector at the current sizes from scalar levels.
  static SyntheticConfig with_levels(Index N, Index d, Index d_e, double r, double mu_e_plus, double mu_e_minus,
                                     double mu_n_plus, double mu_n_minus, double w_e, double w_n, double w_s);
};

struct GroundTruth {
  double discrim = 0.0;           // w_n^T (mu_n+ - mu_n-) + w_s
  double explanatory_bias = 0.0;  // w_e^T (mu_e+ - mu_e-)
};

GroundTruth ground_truth(const SyntheticConfig& config);

/// Settings for each scenario; unstated parameters use the library defaults.
SyntheticConfig preset(SyntheticCase c);

struct SyntheticData {
  Dataset dataset;
  GroundTruth truth;
};

/// Exactly round(N r) rows get S = 1; group labels are shuffled by the seeded RNG.
SyntheticData generate(const SyntheticConfig& config);

/// True P(S = 1 | x_e) implied by the two Gaussians and the group proportion.
Eigen::VectorXd oracle_propensity(const SyntheticConfig& config, const Eigen::Ref<const Eigen::MatrixXd>& Xe);

/// Sidecar document {config: {...}, discrim, explanatory_bias} plus the column mapping.
nlohmann::json sidecar_json(const SyntheticConfig& config, const GroundTruth& truth, const Dataset& data);

}  // namespace faircee
