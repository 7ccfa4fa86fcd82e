#pragma once

#include <functional>
#include <optional>
#include <string>

#include "gridtune/errors.hpp"
#include "gridtune/search_space.hpp"

namespace gridtune {

enum class InvalidReason { compile_error, runtime_error, restricted };

inline const char* to_string(InvalidReason r) {
  switch (r) {
    case InvalidReason::compile_error: return "compile_error";
    case InvalidReason::runtime_error: return "runtime_error";
    case InvalidReason::restricted: return "restricted";
  }
  return "?";
}

inline std::optional<InvalidReason> invalid_reason_from_string(const std::string& s) {
  if (s == "compile_error") return InvalidReason::compile_error;
  if (s == "runtime_error") return InvalidReason::runtime_error;
  if (s == "restricted") return InvalidReason::restricted;
  return std::nullopt;
}

/// Outcome of one objective evaluation: either a positive value in the
/// objective unit, or an invalid marker with its reason.
struct Measurement {
  std::optional<double> value;
  InvalidReason reason = InvalidReason::runtime_error;

  static Measurement valid(double v) { return Measurement{v, InvalidReason::runtime_error}; }
  static Measurement invalid(InvalidReason r) { return Measurement{std::nullopt, r}; }

  bool is_valid() const { return value.has_value(); }
};

/// The (possibly expensive) objective function: configuration to measurement.
using Objective = std::function<Measurement(const Configuration&)>;

}  // namespace gridtune
