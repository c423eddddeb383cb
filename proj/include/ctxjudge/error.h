#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctxjudge {

// Base of every error the harness raises. The CLI maps the concrete type to
// an exit code (config 2, backend 3, data 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input files and datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Backend unreachable or returned something unusable.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, bool transient = false)
      : Error(what), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

class ContextOverflowError : public BackendError {
 public:
  ContextOverflowError(const std::string& what, long limit)
      : BackendError(what), limit_(limit) {}
  long limit() const { return limit_; }

 private:
  long limit_;
};

// Offsets returned by a backend violate the ScoredSequence invariants.
class TokenizationError : public BackendError {
 public:
  using BackendError::BackendError;
};

class FormulaSyntaxError : public Error {
 public:
  FormulaSyntaxError(const std::string& message, std::size_t position)
      : Error("syntax error at position " + std::to_string(position) + ": " +
              message),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Invalid arguments to a statistics routine (missing class, zero variance,
// singular system).
class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctxjudge
