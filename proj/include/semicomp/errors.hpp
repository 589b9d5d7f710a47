#pragma once

#include <stdexcept>
#include <string>

namespace semicomp {

// Invalid model, design or run configuration.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that violates the record contract (times outside the partition, ...).
class DataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input file; carries the 1-based line number of the offending row.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// A probability or variance left its valid domain during evaluation.
class NumericalDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Variance or degrees-of-freedom computation is not possible at the estimate.
class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No fit on a lambda grid reached an admissible optimum.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semicomp
