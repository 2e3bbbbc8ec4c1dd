#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace faircee {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing configuration (unknown column, invalid generator parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A CSV cell that could not be parsed as a real number.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : Error(what), row_(row), col_(col) {}

  /// 1-based data row (the header is row 0).
  std::size_t row() const { return row_; }
  std::size_t column() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// Constraint matrix with a zero row, more rows than columns, or singular PP^T.
class DegenerateConstraintError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  StratificationError(int strata, const std::string& what) : Error(what), strata_(strata) {}
  int strata() const { return strata_; }

 private:
  int strata_;
};

/// A propensity stratum holds only one sensitive group, so its MD is undefined.
class MultiMDInfeasible : public Error {
 public:
  MultiMDInfeasible(int stratum, const std::string& what) : Error(what), stratum_(stratum) {}
  int stratum() const { return stratum_; }

 private:
  int stratum_;
};

class HarnessError : public Error {
 public:
  using Error::Error;
};

/// Every requested method was infeasible on every trial.
class AllInfeasibleError : public HarnessError {
 public:
  using HarnessError::HarnessError;
};

}  // namespace faircee
