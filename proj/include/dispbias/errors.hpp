#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dispbias {

/// Argument outside the domain of a link, family or special function.
/// Carries the offending observation index when raised while walking a dataset.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
  DomainError(const std::string& what, std::size_t row)
      : std::domain_error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Family lacks the requested capability (likelihood, sampler, dispersion cumulants).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dispbias
