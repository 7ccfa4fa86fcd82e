#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>

#include "gridtune/errors.hpp"

namespace gridtune {

inline double normal_pdf(double z) {
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);  // 1/sqrt(2 pi)
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.70710678118654752440);  // z / sqrt(2)
}

// Minimization variants of the classic acquisition functions, evaluated on
// the surrogate's standardized scale. PI and EI are maximized by candidate
// selection, LCB is minimized. lambda >= 0 shifts each toward exploration.

/// Probability that a candidate improves on best + lambda.
inline double acquisition_pi(double mean, double std, double best_std, double lambda) {
  const double margin = best_std + lambda - mean;
  if (std <= 0.0) return margin > 0.0 ? 1.0 : 0.0;
  return normal_cdf(margin / std);
}

/// Expected improvement below best - lambda.
inline double acquisition_ei(double mean, double std, double best_std, double lambda) {
  const double margin = best_std - lambda - mean;
  if (std <= 0.0) return margin > 0.0 ? margin : 0.0;
  const double z = margin / std;
  return margin * normal_cdf(z) + std * normal_pdf(z);
}

/// Lower confidence bound, mean - lambda * std.
inline double acquisition_lcb(double mean, double std, double lambda) {
  return mean - lambda * std;
}

enum class AcquisitionId { ei, poi, lcb };

inline const char* to_string(AcquisitionId id) {
  switch (id) {
    case AcquisitionId::ei: return "ei";
    case AcquisitionId::poi: return "poi";
    case AcquisitionId::lcb: return "lcb";
  }
  return "?";
}

struct ExplorationConfig {
  enum class Mode { constant, contextual_variance };
  Mode mode = Mode::contextual_variance;
  double constant = 0.01;
};

/// Quantities frozen right after the initial sample, used to normalize the
/// contextual-variance exploration factor for the rest of the run.
struct ContextualVarianceState {
  double initial_sample_mean = 0.0;   // mean of valid initial observations, raw scale
  double initial_mean_variance = 0.0; // mean posterior variance after the initial fit
};

/// Dynamic exploration factor:
///   lambda = (mean_variance / (initial_sample_mean / f_best)) / initial_mean_variance
/// The raw-scale ratio makes it invariant under rescaling of the observations.
/// Returns nullopt when the inputs leave its domain (non-positive best or
/// sample mean, zero variance normalizer); callers fall back to a constant.
inline std::optional<double> contextual_variance_lambda(const ContextualVarianceState& state,
                                                        double mean_variance,
                                                        double f_best_raw) {
  if (!(f_best_raw > 0.0) || !(state.initial_sample_mean > 0.0) ||
      !(state.initial_mean_variance > 0.0)) {
    return std::nullopt;
  }
  const double lambda =
      (mean_variance * f_best_raw / state.initial_sample_mean) / state.initial_mean_variance;
  return lambda > 0.0 ? lambda : 0.0;
}

/// Discounted observation score over a history of raw observations attributed
/// to one acquisition function: sum_i o_i * gamma^(t-i), i = 1..t. Lower is
/// better under minimization; recent observations weigh more.
inline double discounted_observation_score(std::span<const double> history, double gamma) {
  double score = 0.0;
  for (double o : history) score = score * gamma + o;
  return score;
}

}  // namespace gridtune
