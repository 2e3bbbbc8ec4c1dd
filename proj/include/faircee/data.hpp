#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace faircee {

using Index = Eigen::Index;

enum class Task { Regression, Classification };

std::string to_string(Task task);
Task parse_task(const std::string& name);

/// Feature matrix, binary sensitive attribute and labels.
///
/// X never contains the sensitive column. When `intercept` is set, model
/// fitting works on design(), which appends a column of ones; every
/// MD-style constraint vector sums to zero, so the intercept column is
/// annihilated by the constraints.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  std::vector<Index> explanatory_idx;
  Task task = Task::Regression;
  bool intercept = true;
  std::vector<std::string> feature_names;

  Index rows() const { return X.rows(); }
  Index features() const { return X.cols(); }
  Index design_cols() const { return X.cols() + (intercept ? 1 : 0); }

  /// X with the intercept column appended (if enabled).
  Eigen::MatrixXd design() const;
  /// The explanatory columns of X, without intercept.
  Eigen::MatrixXd explanatory() const;
  /// Same data restricted to `rows`, in the given order.
  Dataset subset(const std::vector<Index>& rows) const;
};

/// Builds a Dataset and checks every invariant; throws ValidationError.
Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd s, Eigen::VectorXd y,
                     std::vector<Index> explanatory_idx, Task task, bool intercept = true,
                     std::vector<std::string> feature_names = {});

/// Column mapping for CSV ingestion.
struct ColumnConfig {
  std::string sensitive;
  std::string label;
  std::vector<std::string> explanatory;
  Task task = Task::Regression;
  bool intercept = true;

  /// Reads {sensitive, label, explanatory, task, intercept} from a JSON file.
  static ColumnConfig from_json_file(const std::filesystem::path& path);
  static ColumnConfig from_json_text(const std::string& text);
};

Dataset load_csv(const std::filesystem::path& path, const ColumnConfig& config);
Dataset parse_csv(const std::string& text, const ColumnConfig& config);

/// Writes features, then `sensitive` and `label` columns, at 17 significant digits.
void write_csv(const std::filesystem::path& path, const Dataset& data,
               const std::string& sensitive = "s", const std::string& label = "y");
std::string to_csv(const Dataset& data, const std::string& sensitive = "s",
                   const std::string& label = "y");

/// Column config matching what write_csv emits for `data`.
ColumnConfig column_config_for(const Dataset& data, const std::string& sensitive = "s",
                               const std::string& label = "y");

struct IndexSets {
  std::vector<Index> plus;
  std::vector<Index> minus;
};

IndexSets index_sets(const Eigen::Ref<const Eigen::VectorXd>& s);

/// Throws ValidationError unless s is binary with both groups present.
void require_two_groups(const Eigen::Ref<const Eigen::VectorXd>& s, const char* where);

}  // namespace faircee
