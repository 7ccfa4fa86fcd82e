#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridtune/errors.hpp"
#include "gridtune/measurement.hpp"
#include "gridtune/rng.hpp"
#include "gridtune/search_space.hpp"

namespace gridtune {

/// On-disk record of a fully measured search space: the space definition plus
/// one measurement per valid configuration, keyed by canonical index. Replays
/// objective queries without hardware. JSON, entries in ascending index order
/// so files diff cleanly.
struct MeasurementCache {
  static constexpr int kSchemaVersion = 1;

  std::string kernel_name;
  std::string device_name = "simulated";
  std::string objective_unit = "ms";
  std::vector<ParameterDef> params;
  std::vector<std::string> restriction_sources;
  std::optional<double> true_minimum;
  std::map<ConfigIndex, Measurement> entries;

  SearchSpace space() const { return SearchSpace(params, restriction_sources); }

  std::size_t invalid_count() const {
    std::size_t n = 0;
    for (const auto& [idx, m] : entries) n += m.is_valid() ? 0 : 1;
    return n;
  }

  double min_valid_value() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [idx, m] : entries) {
      if (m.is_valid()) best = std::min(best, *m.value);
    }
    return best;
  }

  /// FNV-1a over the canonical entry serialization; stored in the file and
  /// verified on load when present.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [idx, m] : entries) {
      h = detail::fnv1a64(idx, h);
      if (m.is_valid()) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", *m.value);
        h = detail::fnv1a64(buf, h);
      } else {
        h = detail::fnv1a64(to_string(m.reason), h);
      }
    }
    return h;
  }

  /// Full consistency check: schema, space, completeness (exactly one entry
  /// per valid configuration), positive values, embedded config tuples, and
  /// the stated minimum.
  void validate() const {
    SearchSpace s = space();
    const std::vector<Configuration> valid = [&]() {
      try {
        return s.enumerate_valid();
      } catch (const EmptySearchSpaceError&) {
        throw CacheError("cache '" + kernel_name + "': restrictions exclude every configuration");
      }
    }();
    if (valid.size() != entries.size()) {
      throw CacheError("cache '" + kernel_name + "' has " + std::to_string(entries.size()) +
                       " entries but the space has " + std::to_string(valid.size()) +
                       " valid configurations");
    }
    for (const Configuration& c : valid) {
      auto it = entries.find(c.index);
      if (it == entries.end()) {
        throw CacheError("cache '" + kernel_name + "' is missing an entry for configuration " +
                         std::to_string(c.index));
      }
      if (it->second.is_valid() && !(*it->second.value > 0.0)) {
        throw CacheError("cache '" + kernel_name + "' entry " + std::to_string(c.index) +
                         " has non-positive value");
      }
    }
    if (true_minimum) {
      if (min_valid_value() != *true_minimum) {
        throw CacheError("cache '" + kernel_name + "' states minimum " +
                         std::to_string(*true_minimum) + " but the entries' minimum is " +
                         std::to_string(min_valid_value()));
      }
    }
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kernel_name"] = kernel_name;
    doc["device_name"] = device_name;
    doc["objective_unit"] = objective_unit;

    nlohmann::ordered_json jparams = nlohmann::ordered_json::array();
    for (const ParameterDef& p : params) {
      nlohmann::ordered_json jp;
      jp["name"] = p.name;
      jp["kind"] = to_string(p.kind);
      nlohmann::ordered_json values = nlohmann::ordered_json::array();
      for (const Value& v : p.values) values.push_back(value_to_json(v));
      jp["values"] = std::move(values);
      jparams.push_back(std::move(jp));
    }
    doc["parameters"] = std::move(jparams);
    doc["restrictions"] = restriction_sources;
    if (true_minimum) doc["true_minimum"] = *true_minimum;
    char csum[32];
    std::snprintf(csum, sizeof(csum), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(checksum()));
    doc["checksum"] = csum;

    const SearchSpace s = space();
    nlohmann::ordered_json jentries = nlohmann::ordered_json::array();
    for (const auto& [idx, m] : entries) {
      nlohmann::ordered_json je;
      je["index"] = idx;
      nlohmann::ordered_json cfg = nlohmann::ordered_json::array();
      for (const Value& v : s.config_at(idx).values) cfg.push_back(value_to_json(v));
      je["config"] = std::move(cfg);
      if (m.is_valid()) {
        je["value"] = *m.value;
      } else {
        je["invalid"] = to_string(m.reason);
      }
      jentries.push_back(std::move(je));
    }
    doc["entries"] = std::move(jentries);

    std::ofstream out(path);
    if (!out) throw CacheError("cannot write cache file '" + path.string() + "'");
    out << doc.dump(1) << "\n";
  }

  static MeasurementCache load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CacheError("cannot open cache file '" + path.string() + "'");
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw CacheError("cache file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
      MeasurementCache cache;
      if (doc.at("schema_version").get<int>() != kSchemaVersion) {
        throw CacheError("unsupported cache schema version");
      }
      cache.kernel_name = doc.at("kernel_name").get<std::string>();
      cache.device_name = doc.value("device_name", std::string("unknown"));
      cache.objective_unit = doc.value("objective_unit", std::string("ms"));

      for (const nlohmann::json& jp : doc.at("parameters")) {
        ParameterDef p;
        p.name = jp.at("name").get<std::string>();
        const std::string kind = jp.at("kind").get<std::string>();
        if (kind == "numeric") {
          p.kind = ParamKind::numeric;
        } else if (kind == "categorical") {
          p.kind = ParamKind::categorical;
        } else if (kind == "boolean") {
          p.kind = ParamKind::boolean;
        } else {
          throw CacheError("unknown parameter kind '" + kind + "'");
        }
        for (const nlohmann::json& jv : jp.at("values")) p.values.push_back(value_from_json(jv));
        p.validate();
        cache.params.push_back(std::move(p));
      }
      if (doc.contains("restrictions")) {
        cache.restriction_sources = doc.at("restrictions").get<std::vector<std::string>>();
      }
      if (doc.contains("true_minimum")) {
        cache.true_minimum = doc.at("true_minimum").get<double>();
      }

      const SearchSpace s = cache.space();  // parses restrictions too
      for (const nlohmann::json& je : doc.at("entries")) {
        const ConfigIndex idx = je.at("index").get<ConfigIndex>();
        Measurement m;
        if (je.contains("value")) {
          m = Measurement::valid(je.at("value").get<double>());
        } else {
          const std::string reason = je.at("invalid").get<std::string>();
          const std::optional<InvalidReason> r = invalid_reason_from_string(reason);
          if (!r) throw CacheError("unknown invalid reason '" + reason + "'");
          m = Measurement::invalid(*r);
        }
        if (je.contains("config")) {  // embedded tuple must match the index
          const Configuration expect = s.config_at(idx);
          const nlohmann::json& cfg = je.at("config");
          if (cfg.size() != expect.values.size()) {
            throw CacheError("entry " + std::to_string(idx) + " config tuple has wrong arity");
          }
          for (std::size_t i = 0; i < expect.values.size(); ++i) {
            if (value_from_json(cfg[i]) != expect.values[i]) {
              throw CacheError("entry " + std::to_string(idx) +
                               " config tuple does not match its index");
            }
          }
        }
        if (!cache.entries.emplace(idx, m).second) {
          throw CacheError("duplicate entry for configuration " + std::to_string(idx));
        }
      }

      if (doc.contains("checksum")) {
        char expect[32];
        std::snprintf(expect, sizeof(expect), "fnv1a64:%016llx",
                      static_cast<unsigned long long>(cache.checksum()));
        if (doc.at("checksum").get<std::string>() != expect) {
          throw CacheError("cache file '" + path.string() + "' checksum mismatch");
        }
      }
      cache.validate();
      return cache;
    } catch (const nlohmann::json::exception& e) {
      throw CacheError("cache file '" + path.string() + "' is malformed: " + e.what());
    }
  }

  /// The replay objective: answers queries from the entry table in O(1).
  /// Querying a configuration without an entry (e.g. one pruned by
  /// restrictions) is a caller bug and throws.
  Objective objective() const {
    auto table = std::make_shared<const std::map<ConfigIndex, Measurement>>(entries);
    std::string name = kernel_name;
    return [table, name](const Configuration& c) -> Measurement {
      const auto it = table->find(c.index);
      if (it == table->end()) {
        throw CacheError("cache '" + name + "' has no entry for configuration " +
                         std::to_string(c.index) + "; pruned configurations must not be evaluated");
      }
      return it->second;
    };
  }

 private:
  static nlohmann::ordered_json value_to_json(const Value& v) {
    if (const bool* b = std::get_if<bool>(&v)) return *b;
    if (const double* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
  }

  static Value value_from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return Value{j.get<bool>()};
    if (j.is_number()) return Value{j.get<double>()};
    if (j.is_string()) return Value{j.get<std::string>()};
    throw CacheError("parameter values must be numbers, strings, or booleans");
  }
};

/// Loads a cache and returns the embedded space with its replay objective.
inline std::pair<SearchSpace, Objective> load_cache(const std::filesystem::path& path) {
  const MeasurementCache cache = MeasurementCache::load(path);
  return {cache.space(), cache.objective()};
}

}  // namespace gridtune
