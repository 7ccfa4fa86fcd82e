#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gridtune {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Restriction-expression syntax, unknown-identifier, or type errors.
/// `position` is the 0-based character offset into the expression text.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Restrictions exclude every configuration.
class EmptySearchSpaceError : public Error {
 public:
  using Error::Error;
};

/// Gram-matrix factorization failed even after jitter escalation.
class ModelConditioningError : public Error {
 public:
  using Error::Error;
};

/// Cache file is unreadable, fails schema validation, or is inconsistent.
class CacheError : public Error {
 public:
  using Error::Error;
};

/// Evaluation budget exhausted (or space too small) before the requested
/// number of valid observations could be collected.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Invalid strategy / experiment configuration, including unknown overrides.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Metric computation impossible (missing minimum, no valid best, ...).
class MetricsError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridtune
