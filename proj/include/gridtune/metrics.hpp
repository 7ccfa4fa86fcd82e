#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridtune/errors.hpp"
#include "gridtune/strategies.hpp"

namespace gridtune {

/// Evaluation counts at which MAE samples the best-so-far trace: 2*step,
/// 3*step, ..., budget. With the defaults (step 20, budget 220) this is
/// 40, 60, ..., 220; the first checkpoint is skipped because early results
/// mostly reflect the initial sample.
inline std::vector<std::size_t> mae_checkpoints(std::size_t budget, std::size_t step = 20) {
  if (step == 0 || budget < 2 * step) {
    throw MetricsError("checkpoints need step >= 1 and budget >= 2*step");
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 2 * step; c <= budget; c += step) out.push_back(c);
  return out;
}

/// Mean absolute gap between the best found value at each checkpoint and the
/// space's true minimum. Early-terminated runs carry their final best
/// forward.
inline double mean_absolute_error(const TuningRun& run, double f_min,
                                  std::span<const std::size_t> checkpoints) {
  if (!std::isfinite(f_min)) throw MetricsError("MAE needs the space's true minimum");
  if (checkpoints.empty()) throw MetricsError("MAE needs at least one checkpoint");
  double sum = 0.0;
  for (std::size_t c : checkpoints) {
    const double best = run.best_at(c);
    if (!std::isfinite(best)) {
      throw MetricsError("run has no valid observation by evaluation " + std::to_string(c));
    }
    sum += std::fabs(best - f_min);
  }
  return sum / static_cast<double>(checkpoints.size());
}

inline double mean_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

inline double stddev_of(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

inline double median_of(std::vector<double> values) {
  if (values.empty()) throw MetricsError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Linear-interpolation quantile of a sorted copy, q in [0,1].
inline double quantile_of(std::vector<double> values, double q) {
  if (values.empty()) throw MetricsError("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(i);
  return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

/// Mean MAE of one strategy on one space, over repetitions.
struct StrategySpaceStat {
  std::string strategy;
  std::string space;
  std::vector<double> maes;  // per completed repetition
  std::size_t failures = 0;

  double mean_mae() const { return mean_of(maes); }
  double std_mae() const { return stddev_of(maes); }
};

struct MdfEntry {
  std::string strategy;
  double mdf = 1.0;
  double std_factor = 0.0;
  std::vector<double> factors;  // per space, in table order
};

/// Mean deviation factor: per space, each strategy's mean MAE divided by the
/// cross-strategy mean of mean MAEs on that space; the MDF is a strategy's
/// mean factor over spaces, with the standard deviation of the factors as the
/// spread. A space where every strategy reaches MAE 0 contributes factor 1
/// for everyone. By construction the factors on each space average to 1.
inline std::vector<MdfEntry> mean_deviation_factor(
    const std::vector<std::string>& strategies, const std::vector<std::string>& spaces,
    const std::map<std::pair<std::string, std::string>, double>& mean_mae) {
  if (strategies.empty() || spaces.empty()) {
    throw MetricsError("MDF needs at least one strategy and one space");
  }
  std::vector<MdfEntry> out;
  for (const std::string& strategy : strategies) out.push_back(MdfEntry{strategy});

  for (const std::string& space : spaces) {
    double denom = 0.0;
    for (const std::string& strategy : strategies) {
      const auto it = mean_mae.find({strategy, space});
      if (it == mean_mae.end()) {
        throw MetricsError("missing mean MAE for strategy '" + strategy + "' on space '" +
                           space + "'");
      }
      denom += it->second;
    }
    denom /= static_cast<double>(strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      const double mae = mean_mae.at({strategies[i], space});
      out[i].factors.push_back(denom > 0.0 ? mae / denom : 1.0);
    }
  }
  for (MdfEntry& e : out) {
    e.mdf = mean_of(e.factors);
    e.std_factor = stddev_of(e.factors);
  }
  return out;
}

/// For each strategy, the first evaluation count at which its median
/// best-found matches or beats the reference strategy's median final best.
/// nullopt means not reached within max_budget evaluations.
struct ExtendedMatch {
  std::string strategy;
  std::optional<std::size_t> match_at;
};

inline std::vector<ExtendedMatch> extended_match(
    const std::vector<TuningRun>& reference_runs,
    const std::vector<std::pair<std::string, const std::vector<TuningRun>*>>& others,
    std::size_t max_budget = 1020) {
  if (reference_runs.empty()) throw MetricsError("extended match needs reference runs");
  std::vector<double> finals;
  finals.reserve(reference_runs.size());
  for (const TuningRun& r : reference_runs) finals.push_back(r.best_value);
  const double target = median_of(std::move(finals));

  std::vector<ExtendedMatch> out;
  for (const auto& [name, runs] : others) {
    ExtendedMatch m{name, std::nullopt};
    if (runs && !runs->empty()) {
      for (std::size_t count = 1; count <= max_budget; ++count) {
        std::vector<double> bests;
        bests.reserve(runs->size());
        for (const TuningRun& r : *runs) bests.push_back(r.best_at(count));
        bool all_finite = true;
        for (double b : bests) all_finite = all_finite && std::isfinite(b);
        if (all_finite && median_of(std::move(bests)) <= target) {
          m.match_at = count;
          break;
        }
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace gridtune
