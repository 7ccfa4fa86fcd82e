#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gridtune/errors.hpp"
#include "gridtune/measurement.hpp"
#include "gridtune/rng.hpp"
#include "gridtune/search_space.hpp"

namespace gridtune {

/// Latin hypercube design: n points in [0,1]^d with exactly one point per
/// stratum per dimension, jittered uniformly within strata. `restarts`
/// independent designs are drawn and the one with the largest minimum
/// pairwise distance wins (maximin).
inline std::vector<std::vector<double>> lhs_maximin(std::size_t n, std::size_t d, Rng& rng,
                                                    std::size_t restarts = 50) {
  if (n < 1 || d < 1) throw Error("lhs_maximin: n and d must be >= 1");
  if (restarts < 1) restarts = 1;

  std::vector<std::vector<double>> best;
  double best_min_dist = -1.0;
  std::vector<std::size_t> strata(n);

  for (std::size_t attempt = 0; attempt < restarts; ++attempt) {
    std::vector<std::vector<double>> design(n, std::vector<double>(d));
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) strata[i] = i;
      for (std::size_t i = n; i-- > 1;) {  // Fisher-Yates
        std::size_t k = static_cast<std::size_t>(rng.uniform_below(i + 1));
        std::swap(strata[i], strata[k]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        design[i][j] = (static_cast<double>(strata[i]) + rng.uniform01()) / static_cast<double>(n);
      }
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = design[i][j] - design[k][j];
          d2 += diff * diff;
        }
        min_dist = std::min(min_dist, d2);
      }
    }
    if (min_dist > best_min_dist) {
      best_min_dist = min_dist;
      best = std::move(design);
    }
  }
  return best;
}

/// The initial design after snapping, repair, and evaluation.
struct InitialSample {
  std::vector<std::size_t> positions;    // valid-observed candidates, in evaluation order
  std::vector<double> observations;      // raw values, parallel to positions
  std::vector<std::pair<std::size_t, InvalidReason>> invalid_evaluations;
  std::size_t evaluations = 0;           // total objective invocations

  double mean_observation() const {
    double s = 0.0;
    for (double v : observations) s += v;
    return s / static_cast<double>(observations.size());
  }
};

/// Draws a maximin LHS design, snaps each point to the nearest valid
/// configuration (Euclidean distance in normalized coordinates, lowest
/// canonical index on ties), and evaluates. Snapping collisions and
/// runtime-invalid results are replaced by uniformly random unevaluated valid
/// configurations until n valid observations are collected. Every objective
/// invocation, including invalid ones, counts toward `max_evaluations`.
inline InitialSample draw_initial_sample(const EnumeratedSpace& space, const Objective& objective,
                                         std::size_t n, Rng& rng,
                                         std::size_t max_evaluations = std::numeric_limits<std::size_t>::max(),
                                         std::size_t lhs_restarts = 50) {
  const std::size_t valid_count = space.size();
  if (valid_count < n) {
    throw SamplingError("initial sample of " + std::to_string(n) +
                        " requested but the space has only " + std::to_string(valid_count) +
                        " valid configurations");
  }

  const std::vector<std::vector<double>> design =
      lhs_maximin(n, space.dimension(), rng, lhs_restarts);

  std::vector<bool> taken(valid_count, false);
  std::vector<std::size_t> queue;
  queue.reserve(n);
  for (const std::vector<double>& point : design) {
    std::size_t nearest = 0;
    double nearest_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos < valid_count; ++pos) {
      double d2 = 0.0;
      const std::vector<double>& c = space.coords[pos];
      for (std::size_t j = 0; j < c.size(); ++j) {
        const double diff = point[j] - c[j];
        d2 += diff * diff;
      }
      if (d2 < nearest_d2) {
        nearest_d2 = d2;
        nearest = pos;
      }
    }
    if (!taken[nearest]) {  // collision: repaired below like an invalid draw
      taken[nearest] = true;
      queue.push_back(nearest);
    }
  }

  auto random_unevaluated = [&]() -> std::optional<std::size_t> {
    std::size_t free_count = 0;
    for (std::size_t pos = 0; pos < valid_count; ++pos) free_count += taken[pos] ? 0 : 1;
    if (free_count == 0) return std::nullopt;
    std::size_t k = static_cast<std::size_t>(rng.uniform_below(free_count));
    for (std::size_t pos = 0; pos < valid_count; ++pos) {
      if (!taken[pos] && k-- == 0) {
        taken[pos] = true;
        return pos;
      }
    }
    return std::nullopt;
  };

  InitialSample out;
  std::size_t cursor = 0;
  while (out.observations.size() < n) {
    std::optional<std::size_t> pos;
    if (cursor < queue.size()) {
      pos = queue[cursor++];
    } else {
      pos = random_unevaluated();
    }
    if (!pos) {
      throw SamplingError("space exhausted before collecting " + std::to_string(n) +
                          " valid initial observations");
    }
    if (out.evaluations >= max_evaluations) {
      throw SamplingError("evaluation budget exhausted before collecting " + std::to_string(n) +
                          " valid initial observations");
    }
    Measurement m = objective(space.configs[*pos]);
    ++out.evaluations;
    if (m.is_valid()) {
      out.positions.push_back(*pos);
      out.observations.push_back(*m.value);
    } else {
      out.invalid_evaluations.emplace_back(*pos, m.reason);
    }
  }
  return out;
}

}  // namespace gridtune
