#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsci {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  data = 3,
  numerical = 4,
};

/// Base of every error raised by the library. Each subclass knows which
/// exit code the CLI should map it to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::numerical; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

/// Missing or duplicated column in an input file.
class SchemaError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

/// Unparseable or non-finite cell. Row is 1-based over data rows (the header
/// is row 0); column is the header name.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t row, std::string column)
      : Error(what), row_(row), column_(std::move(column)) {}
  explicit DataError(const std::string& what) : Error(what) {}

  ExitCode exit_code() const noexcept override { return ExitCode::data; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_ = 0;
  std::string column_;
};

/// Too few observations for the requested operation.
class SizeError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

/// Basis dimension too large for the sample.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Projection or variance computation without enough residual degrees of
/// freedom, or a numerically negative quantity that must be non-negative.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// D'M(V)D <= 0: the instrument carries no usable variation after adjusting
/// for the violation space.
class WeakIvError : public Error {
 public:
  using Error::Error;
};

/// The first stage reproduces D exactly, so the strength denominator is zero.
class PerfectFitError : public Error {
 public:
  using Error::Error;
};

/// Zero-norm column selected as a boosting base learner.
class SingularBaseError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsci
