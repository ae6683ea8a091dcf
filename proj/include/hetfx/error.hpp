#pragma once

#include <stdexcept>
#include <string>

namespace hetfx {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  RankDeficient,
  OutOfRangeCategory,
  EmptyCell,
  ContinuousCovariate,
  SingularCovariance,
  Nonconvergence,
  SeparationSuspected,
  MissingCategory,
  BadCategory,
  DegenerateDenominator,
  DegeneratePsr,
  EmptySubsampleSide,
  SingularScoreOuterProduct,
  InvalidSpecCombination,
  ExcessFailures,
  DataError,
};

const char* to_string(ErrorKind kind);

// Numerical failures map to CLI exit code 3, everything else to 2.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by fit_ols when a column is (numerically) a combination of the
/// columns before it.
class RankDeficientError : public Error {
 public:
  RankDeficientError(long column, const std::string& what)
      : Error(ErrorKind::RankDeficient, what), column_(column) {}
  long column() const noexcept { return column_; }

 private:
  long column_;
};

class NonconvergenceError : public Error {
 public:
  NonconvergenceError(int iterations, double grad_norm, const std::string& what)
      : Error(ErrorKind::Nonconvergence, what), iterations_(iterations), grad_norm_(grad_norm) {}
  int iterations() const noexcept { return iterations_; }
  double grad_norm() const noexcept { return grad_norm_; }

 private:
  int iterations_;
  double grad_norm_;
};

}  // namespace hetfx
