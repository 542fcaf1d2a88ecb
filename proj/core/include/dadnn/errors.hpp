#pragma once

#include <stdexcept>
#include <string>

namespace dadnn {

// Shapes, flags or specs that cannot describe a valid model or run.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input data (dataset rows, feature indices, scene ids).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value requested outside the domain of the function (empty loss input, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A validation oracle could not produce a trustworthy answer.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The synthetic generator cannot satisfy its targets.
class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// AUC or calibration requested on input where it is not defined.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace dadnn
