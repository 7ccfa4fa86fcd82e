#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridtune/cache.hpp"
#include "gridtune/errors.hpp"
#include "gridtune/rng.hpp"

namespace gridtune {

/// Desk-scale synthetic test spaces: a named landscape discretized onto a
/// grid, with an invalid region marked runtime_error to exercise the repair
/// and never-resuggest paths. All values are shifted to stay positive, like
/// runtimes.
struct SyntheticSpec {
  std::string function;             // rosenbrock-disc | rastrigin-box | step-plateau | random-rough
  std::vector<std::size_t> grid;    // points per dimension
  double noise_sigma = 0.0;         // multiplicative log-normal noise
  std::uint64_t seed = 0;
  std::optional<double> invalid_fraction;  // random-rough only (default 0.10)

  std::string default_name() const {
    std::string name = function;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      name += (i == 0 ? "-" : "x") + std::to_string(grid[i]);
    }
    name += "-s" + std::to_string(seed);
    return name;
  }
};

namespace detail {

inline double hash_unit(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
  s ^= index * 0xd1342543de82ef95ULL;
  std::uint64_t z = splitmix64(s);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

inline double hash_normal(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
  const double u1 = 1.0 - hash_unit(seed, index, salt);
  const double u2 = hash_unit(seed, index, salt + 1000);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace detail

inline MeasurementCache generate_synthetic(const SyntheticSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("synthetic spec needs at least one grid dimension");
  std::uint64_t total = 1;
  for (std::size_t k : spec.grid) {
    if (k < 2) throw ConfigError("grid sizes must be >= 2");
    total *= k;
    if (total > 1'000'000) throw ConfigError("grid exceeds 1e6 points");
  }
  const std::size_t d = spec.grid.size();

  enum class Kind { rosenbrock, rastrigin, step, rough };
  Kind kind;
  double lo = 0.0, hi = 1.0;
  if (spec.function == "rosenbrock-disc") {
    if (d != 2) throw ConfigError("rosenbrock-disc is two-dimensional");
    kind = Kind::rosenbrock;
    lo = -1.5;
    hi = 1.5;
  } else if (spec.function == "rastrigin-box") {
    kind = Kind::rastrigin;
    lo = -5.12;
    hi = 5.12;
  } else if (spec.function == "step-plateau") {
    kind = Kind::step;
  } else if (spec.function == "random-rough") {
    kind = Kind::rough;
  } else {
    throw ConfigError("unknown synthetic function '" + spec.function + "'");
  }
  const double invalid_fraction = spec.invalid_fraction.value_or(0.10);
  if (spec.invalid_fraction && kind != Kind::rough) {
    throw ConfigError("invalid_fraction only applies to random-rough");
  }

  MeasurementCache cache;
  cache.kernel_name = spec.default_name();
  cache.device_name = "synthetic";
  cache.objective_unit = "1";
  for (std::size_t j = 0; j < d; ++j) {
    ParameterDef p;
    p.name = "x" + std::to_string(j);
    p.kind = ParamKind::numeric;
    const std::size_t k = spec.grid[j];
    for (std::size_t r = 0; r < k; ++r) {
      p.values.emplace_back(lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(k - 1));
    }
    cache.params.push_back(std::move(p));
  }

  // random-rough basin center, fixed per seed
  std::vector<double> center(d, 0.5);
  if (kind == Kind::rough) {
    Rng rng(SeedSequence(spec.seed).with("rough-center").seed());
    for (std::size_t j = 0; j < d; ++j) center[j] = 0.2 + 0.6 * rng.uniform01();
  }

  std::vector<std::size_t> ranks(d, 0);
  std::vector<double> x(d), z(d);
  for (ConfigIndex idx = 0; idx < total; ++idx) {
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = std::get<double>(cache.params[j].values[ranks[j]]);
      z[j] = static_cast<double>(ranks[j]) / static_cast<double>(spec.grid[j] - 1);
    }

    bool invalid = false;
    double value = 0.0;
    switch (kind) {
      case Kind::rosenbrock: {
        // classic valley, invalid outside the inscribed disc of radius 1.5
        invalid = x[0] * x[0] + x[1] * x[1] > 2.25;
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        value = 1.0 + a * a + 100.0 * b * b;
        break;
      }
      case Kind::rastrigin: {
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          sum += x[j] * x[j] - 10.0 * std::cos(6.283185307179586 * x[j]);
          invalid = invalid || std::fabs(x[j]) > 4.608;  // box clipped at 90%
        }
        value = 1.0 + 10.0 * static_cast<double>(d) + sum;
        break;
      }
      case Kind::step: {
        // nested plateaus stepping down toward a small corner basin:
        // 2.0 outside, 1.5 / 1.2 on inner shelves, 1.0 in the basin
        bool shelf1 = true, shelf2 = true, basin = true;
        for (std::size_t j = 0; j < d; ++j) {
          shelf1 = shelf1 && z[j] >= 0.6;
          shelf2 = shelf2 && z[j] >= 0.8;
          basin = basin && z[j] >= 0.9;
        }
        value = basin ? 1.0 : shelf2 ? 1.2 : shelf1 ? 1.5 : 2.0;
        break;
      }
      case Kind::rough: {
        double bowl = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = z[j] - center[j];
          bowl += diff * diff;
        }
        value = 1.0 + 4.0 * bowl / static_cast<double>(d) +
                0.5 * detail::hash_unit(spec.seed, idx, 1);
        invalid = detail::hash_unit(spec.seed, idx, 2) < invalid_fraction;
        break;
      }
    }
    if (spec.noise_sigma > 0.0) {
      value *= std::exp(spec.noise_sigma * detail::hash_normal(spec.seed, idx, 3));
    }

    cache.entries.emplace(idx, invalid ? Measurement::invalid(InvalidReason::runtime_error)
                                       : Measurement::valid(value));

    for (std::size_t j = d; j-- > 0;) {  // odometer
      if (++ranks[j] < spec.grid[j]) break;
      ranks[j] = 0;
    }
  }

  cache.true_minimum = cache.min_valid_value();
  if (!std::isfinite(*cache.true_minimum)) {
    throw ConfigError("synthetic space has no valid configurations");
  }
  return cache;
}

}  // namespace gridtune
