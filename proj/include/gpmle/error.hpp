#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gpmle {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two design points coincide, so R_theta is singular.
class DuplicatePointError : public std::invalid_argument {
 public:
  DuplicatePointError(std::size_t i, std::size_t j)
      : std::invalid_argument("design points " + std::to_string(i) + " and " + std::to_string(j) +
                              " coincide"),
        first(i),
        second(j) {}
  std::size_t first;
  std::size_t second;
};

/// Cholesky breakdown. `pivot` is the zero-based column where the pivot was not positive.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(std::size_t pivot_index, const std::string& context = {})
      : std::runtime_error("matrix not positive definite at pivot " + std::to_string(pivot_index) +
                           (context.empty() ? std::string{} : " (" + context + ")")),
        pivot(pivot_index) {}
  std::size_t pivot;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. `key` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string offending_key, const std::string& message)
      : std::invalid_argument(offending_key + ": " + message), key(std::move(offending_key)) {}
  std::string key;
};

}  // namespace gpmle
