#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "gridtune/errors.hpp"

namespace gridtune {

enum class ParamKind { numeric, categorical, boolean };

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::numeric: return "numeric";
    case ParamKind::categorical: return "categorical";
    case ParamKind::boolean: return "boolean";
  }
  return "?";
}

// A literal parameter value. Numeric values are always stored as double;
// tunable-parameter grids stay well below the 2^53 exact-integer limit.
using Value = std::variant<bool, double, std::string>;

inline ParamKind kind_of(const Value& v) {
  if (std::holds_alternative<bool>(v)) return ParamKind::boolean;
  if (std::holds_alternative<double>(v)) return ParamKind::numeric;
  return ParamKind::categorical;
}

/// Renders a value the way cache files and traces spell it: integral numerics
/// without a decimal point, other numerics with round-trip precision.
inline std::string to_string(const Value& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (const double* d = std::get_if<double>(&v)) {
    if (*d == std::floor(*d) && std::fabs(*d) < 1e15) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.0f", *d);
      return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", *d);
    return buf;
  }
  return std::get<std::string>(v);
}

inline bool is_identifier(const std::string& name) {
  if (name.empty()) return false;
  auto word = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  };
  if (!word(name[0])) return false;
  for (char c : name.substr(1)) {
    if (!word(c) && !(c >= '0' && c <= '9')) return false;
  }
  return true;
}

/// One tunable parameter: a name, a kind, and its ordered set of values.
/// The user-supplied value order is authoritative; it defines the rank used
/// for normalization.
struct ParameterDef {
  std::string name;
  ParamKind kind = ParamKind::numeric;
  std::vector<Value> values;

  ParameterDef() = default;
  ParameterDef(std::string n, ParamKind k, std::vector<Value> v)
      : name(std::move(n)), kind(k), values(std::move(v)) {
    validate();
  }

  /// Convenience for the common numeric case.
  ParameterDef(std::string n, std::vector<double> v)
      : name(std::move(n)), kind(ParamKind::numeric) {
    values.reserve(v.size());
    for (double d : v) values.emplace_back(d);
    validate();
  }

  std::size_t size() const { return values.size(); }

  /// Position of `v` in the value list, or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t rank_of(const Value& v) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] == v) return i;
    }
    return npos;
  }

  void validate() const {
    if (!is_identifier(name)) {
      throw Error("parameter name '" + name + "' is not a valid identifier");
    }
    if (values.empty()) {
      throw Error("parameter '" + name + "' has no values");
    }
    for (const Value& v : values) {
      if (kind_of(v) != kind) {
        throw Error("parameter '" + name + "' declares kind " +
                    std::string(to_string(kind)) + " but contains a " +
                    std::string(to_string(kind_of(v))) + " value");
      }
      if (const double* d = std::get_if<double>(&v); d && !std::isfinite(*d)) {
        throw Error("parameter '" + name + "' contains a non-finite value");
      }
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = i + 1; j < values.size(); ++j) {
        if (values[i] == values[j]) {
          throw Error("parameter '" + name + "' has duplicate value " +
                      to_string(values[i]));
        }
      }
    }
  }
};

}  // namespace gridtune
