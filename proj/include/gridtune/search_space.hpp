#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gridtune/errors.hpp"
#include "gridtune/parameter.hpp"
#include "gridtune/restriction.hpp"

namespace gridtune {

using ConfigIndex = std::uint64_t;

/// A full assignment of one value per parameter. `index` is the canonical
/// enumeration rank: lexicographic over value indices with the first
/// parameter most significant, counted over the unrestricted Cartesian grid.
/// Canonical indices are stable under restrictions, which makes them usable
/// as configuration IDs in cache files and traces.
struct Configuration {
  std::vector<Value> values;
  ConfigIndex index = 0;
};

class SearchSpace {
 public:
  SearchSpace(std::vector<ParameterDef> params, std::vector<Restriction> restrictions = {})
      : params_(std::move(params)), restrictions_(std::move(restrictions)) {
    validate();
  }

  SearchSpace(std::vector<ParameterDef> params, const std::vector<std::string>& restriction_sources)
      : params_(std::move(params)) {
    restrictions_.reserve(restriction_sources.size());
    for (const std::string& src : restriction_sources) {
      restrictions_.push_back(Restriction::parse(src, params_));
    }
    validate();
  }

  const std::vector<ParameterDef>& params() const { return params_; }
  const std::vector<Restriction>& restrictions() const { return restrictions_; }
  std::size_t dimension() const { return params_.size(); }

  std::uint64_t cartesian_size() const {
    std::uint64_t n = 1;
    for (const ParameterDef& p : params_) n *= p.size();
    return n;
  }

  // -- canonical indexing ---------------------------------------------------

  ConfigIndex index_of_ranks(std::span<const std::size_t> ranks) const {
    ConfigIndex idx = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      idx = idx * params_[i].size() + ranks[i];
    }
    return idx;
  }

  std::vector<std::size_t> ranks_of_index(ConfigIndex index) const {
    std::vector<std::size_t> ranks(params_.size());
    for (std::size_t i = params_.size(); i-- > 0;) {
      ranks[i] = static_cast<std::size_t>(index % params_[i].size());
      index /= params_[i].size();
    }
    return ranks;
  }

  Configuration config_at(ConfigIndex index) const {
    if (index >= cartesian_size()) {
      throw Error("configuration index " + std::to_string(index) + " out of range");
    }
    std::vector<std::size_t> ranks = ranks_of_index(index);
    Configuration c;
    c.index = index;
    c.values.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      c.values.push_back(params_[i].values[ranks[i]]);
    }
    return c;
  }

  /// The per-parameter value ranks of a configuration; throws if any value is
  /// not a member of its parameter's value list.
  std::vector<std::size_t> ranks_of(const Configuration& config) const {
    if (config.values.size() != params_.size()) {
      throw Error("configuration has " + std::to_string(config.values.size()) +
                  " values, expected " + std::to_string(params_.size()));
    }
    std::vector<std::size_t> ranks(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::size_t r = params_[i].rank_of(config.values[i]);
      if (r == ParameterDef::npos) {
        throw Error("value " + to_string(config.values[i]) + " is not in parameter '" +
                    params_[i].name + "'");
      }
      ranks[i] = r;
    }
    return ranks;
  }

  bool satisfies_restrictions(std::span<const Value> values) const {
    for (const Restriction& r : restrictions_) {
      if (!r.evaluate(values)) return false;
    }
    return true;
  }

  // -- enumeration ----------------------------------------------------------

  /// Every restriction-satisfying configuration, in canonical index order.
  /// Restriction-violating configurations are pruned here and are never
  /// presented to any strategy. Throws EmptySearchSpaceError if the
  /// restrictions exclude everything.
  std::vector<Configuration> enumerate_valid() const {
    constexpr std::uint64_t kEnumerationLimit = 20'000'000;
    if (cartesian_size() > kEnumerationLimit) {
      throw Error("Cartesian size " + std::to_string(cartesian_size()) +
                  " exceeds the enumeration limit of " + std::to_string(kEnumerationLimit));
    }
    std::vector<Configuration> out;
    std::vector<std::size_t> ranks(params_.size(), 0);
    std::vector<Value> values(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) values[i] = params_[i].values[0];

    const std::uint64_t total = cartesian_size();
    for (ConfigIndex idx = 0; idx < total; ++idx) {
      if (satisfies_restrictions(values)) {
        out.push_back(Configuration{values, idx});
      }
      // odometer step, last parameter fastest
      for (std::size_t i = params_.size(); i-- > 0;) {
        if (++ranks[i] < params_[i].size()) {
          values[i] = params_[i].values[ranks[i]];
          break;
        }
        ranks[i] = 0;
        values[i] = params_[i].values[0];
      }
    }
    if (out.empty()) {
      throw EmptySearchSpaceError("restrictions exclude every configuration");
    }
    return out;
  }

  // -- normalization --------------------------------------------------------

  /// Maps a configuration to [0,1]^d by value rank: coordinate i is
  /// rank / (k - 1) for a parameter with k values (0 for single-valued
  /// parameters). Rank-linear rather than value-linear, so non-linear value
  /// sets like powers of two are equidistant in model space.
  std::vector<double> normalize(const Configuration& config) const {
    std::vector<std::size_t> ranks = ranks_of(config);
    std::vector<double> coords(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const std::size_t k = params_[i].size();
      coords[i] = k <= 1 ? 0.0 : static_cast<double>(ranks[i]) / static_cast<double>(k - 1);
    }
    return coords;
  }

  /// Snaps each coordinate to the nearest rank (exact ties round toward the
  /// lower rank) and returns that grid configuration. Inverse of normalize()
  /// on its image. The result is a grid point; it is not checked against
  /// restrictions.
  Configuration denormalize(std::span<const double> coords) const {
    if (coords.size() != params_.size()) {
      throw Error("point has " + std::to_string(coords.size()) + " coordinates, expected " +
                  std::to_string(params_.size()));
    }
    std::vector<std::size_t> ranks(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const double c = coords[i];
      if (!(c >= 0.0 && c <= 1.0)) {
        throw Error("coordinate " + std::to_string(c) + " outside [0,1]");
      }
      const std::size_t k = params_[i].size();
      if (k == 1) {
        ranks[i] = 0;
        continue;
      }
      const double scaled = c * static_cast<double>(k - 1);
      double snapped = std::ceil(scaled - 0.5);  // half-way cases go down
      if (snapped < 0.0) snapped = 0.0;
      if (snapped > static_cast<double>(k - 1)) snapped = static_cast<double>(k - 1);
      ranks[i] = static_cast<std::size_t>(snapped);
    }
    return config_at(index_of_ranks(ranks));
  }

 private:
  void validate() const {
    if (params_.empty()) throw Error("search space has no parameters");
    std::unordered_set<std::string> names;
    for (const ParameterDef& p : params_) {
      p.validate();
      if (!names.insert(p.name).second) {
        throw Error("duplicate parameter name '" + p.name + "'");
      }
    }
  }

  std::vector<ParameterDef> params_;
  std::vector<Restriction> restrictions_;
};

/// A search space together with its enumerated valid configurations and their
/// normalized coordinates. Immutable after construction; strategies index
/// candidates by position in `configs`.
struct EnumeratedSpace {
  SearchSpace space;
  std::vector<Configuration> configs;       // valid configs, canonical order
  std::vector<std::vector<double>> coords;  // normalized, parallel to configs

  explicit EnumeratedSpace(SearchSpace s) : space(std::move(s)) {
    configs = space.enumerate_valid();
    coords.reserve(configs.size());
    for (const Configuration& c : configs) coords.push_back(space.normalize(c));
  }

  std::size_t size() const { return configs.size(); }
  std::size_t dimension() const { return space.dimension(); }

  /// Position of a canonical index within the valid enumeration, or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t position_of(ConfigIndex index) const {
    // configs are sorted by canonical index; binary search
    std::size_t lo = 0, hi = configs.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (configs[mid].index < index) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo < configs.size() && configs[lo].index == index ? lo : npos;
  }
};

}  // namespace gridtune
