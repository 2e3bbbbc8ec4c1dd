#include "faircee/data.hpp"

#include "faircee/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace faircee {

namespace {

std::string_view trim(std::string_view v) {
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\r')) v.remove_suffix(1);
  return v;
}

// Comma-separated fields; double quotes may wrap a field (no embedded newlines).
std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

bool parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Task task) {
  return task == Task::Regression ? "regression" : "classification";
}

Task parse_task(const std::string& name) {
  if (name == "regression") return Task::Regression;
  if (name == "classification") return Task::Classification;
  throw ConfigError("unknown task '" + name + "' (expected regression or classification)");
}

Eigen::MatrixXd Dataset::design() const {
  if (!intercept) return X;
  Eigen::MatrixXd D(X.rows(), X.cols() + 1);
  D.leftCols(X.cols()) = X;
  D.col(X.cols()).setOnes();
  return D;
}

Eigen::MatrixXd Dataset::explanatory() const {
  Eigen::MatrixXd E(X.rows(), static_cast<Index>(explanatory_idx.size()));
  for (std::size_t j = 0; j < explanatory_idx.size(); ++j) E.col(static_cast<Index>(j)) = X.col(explanatory_idx[j]);
  return E;
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out = *this;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.s.resize(static_cast<Index>(rows.size()));
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Index>(i);
    out.X.row(r) = X.row(rows[i]);
    out.s(r) = s(rows[i]);
    out.y(r) = y(rows[i]);
  }
  return out;
}

void require_two_groups(const Eigen::Ref<const Eigen::VectorXd>& s, const char* where) {
  Index ones = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) == 1.0) {
      ++ones;
    } else if (s(i) != 0.0) {
      throw ValidationError(std::string(where) + ": sensitive values must be 0 or 1");
    }
  }
  if (ones == 0 || ones == s.size()) {
    throw ValidationError(std::string(where) + ": sensitive attribute has a single group");
  }
}

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd s, Eigen::VectorXd y,
                     std::vector<Index> explanatory_idx, Task task, bool intercept,
                     std::vector<std::string> feature_names) {
  if (X.rows() < 2 || X.cols() < 1) throw ValidationError("dataset needs N >= 2 rows and d >= 1 features");
  if (s.size() != X.rows() || y.size() != X.rows()) throw ValidationError("X, s and y row counts differ");
  if (!X.allFinite()) throw ValidationError("feature matrix has non-finite entries");
  if (!y.allFinite()) throw ValidationError("labels have non-finite entries");
  require_two_groups(s, "dataset");
  std::set<Index> seen;
  for (Index j : explanatory_idx) {
    if (j < 0 || j >= X.cols()) throw ValidationError("explanatory column index out of range");
    if (!seen.insert(j).second) throw ValidationError("duplicate explanatory column index");
  }
  if (task == Task::Classification) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) throw ValidationError("classification labels must be 0 or 1");
    }
  }
  if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != X.cols()) {
    throw ValidationError("feature name count does not match column count");
  }
  if (feature_names.empty()) {
    for (Index j = 0; j < X.cols(); ++j) feature_names.push_back("x" + std::to_string(j));
  }
  return Dataset{std::move(X), std::move(s), std::move(y), std::move(explanatory_idx),
                 task, intercept, std::move(feature_names)};
}

ColumnConfig ColumnConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ColumnConfig c;
  try {
    c.sensitive = j.at("sensitive").get<std::string>();
    c.label = j.at("label").get<std::string>();
    c.explanatory = j.value("explanatory", std::vector<std::string>{});
    c.task = parse_task(j.value("task", std::string("regression")));
    c.intercept = j.value("intercept", true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad column config: ") + e.what());
  }
  return c;
}

ColumnConfig ColumnConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

Dataset parse_csv(const std::string& text, const ColumnConfig& config) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV is empty (header row required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);

  auto find_col = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("column '" + name + "' not found in CSV header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t s_col = find_col(config.sensitive);
  const std::size_t y_col = find_col(config.label);
  if (s_col == y_col) throw ConfigError("sensitive and label columns must differ");

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == s_col || c == y_col) continue;
    feature_cols.push_back(c);
    names.push_back(header[c]);
  }
  std::vector<Index> explanatory;
  for (const auto& name : config.explanatory) {
    if (name == config.sensitive || name == config.label) {
      throw ConfigError("explanatory column '" + name + "' cannot be the sensitive or label column");
    }
    find_col(name);
    const auto it = std::find(names.begin(), names.end(), name);
    explanatory.push_back(static_cast<Index>(it - names.begin()));
  }

  std::vector<double> xs, ss, ys;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(row, fields.size(), "row " + std::to_string(row) + " has " +
                                               std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw ParseError(row, c, "row " + std::to_string(row) + ", column '" + header[c] +
                                     "': cannot parse '" + fields[c] + "' as a number");
      }
      if (c == s_col) {
        if (v != 0.0 && v != 1.0) {
          throw ParseError(row, c, "row " + std::to_string(row) + ": sensitive value must be 0 or 1");
        }
        ss.push_back(v);
      } else if (c == y_col) {
        ys.push_back(v);
      } else {
        xs.push_back(v);
      }
    }
  }

  const auto n = static_cast<Index>(row);
  const auto d = static_cast<Index>(feature_cols.size());
  Eigen::MatrixXd X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = xs[static_cast<std::size_t>(i * d + j)];
  Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(ss.data(), n);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  return make_dataset(std::move(X), std::move(s), std::move(y), std::move(explanatory), config.task,
                      config.intercept, std::move(names));
}

Dataset load_csv(const std::filesystem::path& path, const ColumnConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), config);
}

std::string to_csv(const Dataset& data, const std::string& sensitive, const std::string& label) {
  std::string out;
  for (const auto& name : data.feature_names) out += name + ",";
  out += sensitive + "," + label + "\n";
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.features(); ++j) out += fmt17(data.X(i, j)) + ",";
    out += fmt17(data.s(i)) + "," + fmt17(data.y(i)) + "\n";
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data, const std::string& sensitive,
               const std::string& label) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_csv(data, sensitive, label);
}

ColumnConfig column_config_for(const Dataset& data, const std::string& sensitive, const std::string& label) {
  ColumnConfig c;
  c.sensitive = sensitive;
  c.label = label;
  for (Index j : data.explanatory_idx) c.explanatory.push_back(data.feature_names[static_cast<std::size_t>(j)]);
  c.task = data.task;
  c.intercept = data.intercept;
  return c;
}

IndexSets index_sets(const Eigen::Ref<const Eigen::VectorXd>& s) {
  IndexSets out;
  for (Index i = 0; i < s.size(); ++i) (s(i) == 1.0 ? out.plus : out.minus).push_back(i);
  return out;
}

}  // namespace faircee
