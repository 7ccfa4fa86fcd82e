#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gridtune/acquisition.hpp"
#include "gridtune/errors.hpp"

namespace gridtune {

/// Shared per-iteration predictions over the currently unvisited valid
/// candidates, already combined with the iteration's exploration factor.
/// Candidates must be ordered by ascending canonical index; ties in
/// acquisition score resolve to the lowest index.
struct CandidateScores {
  std::span<const std::uint64_t> ids;  // canonical configuration indices
  std::span<const double> means;       // posterior means, standardized
  std::span<const double> stds;        // posterior standard deviations
  double best_std = 0.0;               // standardized best observation
  double lambda = 0.0;

  std::size_t size() const { return ids.size(); }
};

/// Position of the optimum of one acquisition function over the candidates,
/// skipping positions for which `excluded` (when provided) is true.
inline std::size_t best_candidate(AcquisitionId af, const CandidateScores& c,
                                  const std::vector<bool>* excluded = nullptr) {
  std::size_t best = static_cast<std::size_t>(-1);
  double best_score = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (excluded && (*excluded)[i]) continue;
    double score;
    switch (af) {
      case AcquisitionId::ei:
        score = acquisition_ei(c.means[i], c.stds[i], c.best_std, c.lambda);
        break;
      case AcquisitionId::poi:
        score = acquisition_pi(c.means[i], c.stds[i], c.best_std, c.lambda);
        break;
      case AcquisitionId::lcb:
        score = -acquisition_lcb(c.means[i], c.stds[i], c.lambda);  // maximize -lcb
        break;
      default:
        score = 0.0;
    }
    if (best == static_cast<std::size_t>(-1) || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best == static_cast<std::size_t>(-1)) {
    throw Error("acquisition: no candidates remaining");
  }
  return best;
}

enum class PortfolioMode { multi, advanced_multi };

struct PortfolioConfig {
  PortfolioMode mode = PortfolioMode::advanced_multi;
  std::vector<AcquisitionId> order = {AcquisitionId::ei, AcquisitionId::poi, AcquisitionId::lcb};
  int skip_threshold = 5;
  double discount = 0.75;              // 0.65 for multi, 0.75 for advanced multi
  double required_improvement = 0.1;   // rho
};

/// Round-robin portfolio over (ei, poi, lcb) with two selection mechanisms.
///
/// multi: every active function is optimized on the shared predictions each
/// call; the round-robin one's optimum is evaluated. When the consulted
/// function's optimum coincides with another active function's most recent
/// suggestion, both duplicate counters increment; once a counter exceeds the
/// skip threshold the conflicting functions are compared by discounted
/// observation score and only the lowest-scoring one stays active.
///
/// advanced multi: only the consulted function is optimized, suggestions are
/// removed from the shared pool until their observation is recorded, and
/// after each observation the producing function's score is compared against
/// the band (1 +- rho) * mean score over the active functions. A function
/// above the band on skip_threshold-or-more of its observations is
/// deactivated (and the others' counters reset); one below the band that
/// often is promoted to sole function for the rest of the run.
class Portfolio {
 public:
  struct Suggestion {
    std::size_t position;  // into the candidate arrays
    std::uint64_t id;      // canonical configuration index
    AcquisitionId by;
  };

  struct Event {
    enum class Kind { skipped, promoted };
    Kind kind;
    AcquisitionId af;
  };

  explicit Portfolio(PortfolioConfig config) : config_(std::move(config)) {
    if (config_.order.empty()) throw ConfigError("portfolio needs at least one acquisition function");
    if (config_.skip_threshold < 1) throw ConfigError("skip threshold must be >= 1");
    if (!(config_.discount > 0.0 && config_.discount < 1.0)) {
      throw ConfigError("discount factor must be in (0,1)");
    }
    if (!(config_.required_improvement > 0.0)) {
      throw ConfigError("required improvement factor must be positive");
    }
    for (AcquisitionId id : config_.order) afs_.push_back(AfState{id});
  }

  const PortfolioConfig& config() const { return config_; }

  std::vector<AcquisitionId> active() const {
    std::vector<AcquisitionId> out;
    for (const AfState& a : afs_) {
      if (a.active) out.push_back(a.id);
    }
    return out;
  }

  double dos_of(AcquisitionId id) const { return find(id).dos; }
  std::span<const double> history_of(AcquisitionId id) const { return find(id).history; }
  int duplicate_count_of(AcquisitionId id) const { return find(id).duplicates; }
  std::span<const Event> events() const { return events_; }

  Suggestion suggest(const CandidateScores& candidates) {
    if (candidates.size() == 0) throw Error("portfolio: no candidates remaining");
    return config_.mode == PortfolioMode::multi ? suggest_multi(candidates)
                                                : suggest_advanced(candidates);
  }

  /// Records the outcome of an evaluated suggestion. An invalid result passes
  /// nullopt and is entered into the producing function's history as the
  /// median of `valid_observations` (all valid observations in the run so
  /// far), so invalidity does not skew the score.
  void record(AcquisitionId af, std::uint64_t candidate_id, std::optional<double> value,
              std::span<const double> valid_observations) {
    AfState& state = find(af);
    pending_.erase(candidate_id);
    const double observed = value ? *value : median(valid_observations);
    state.history.push_back(observed);
    state.dos = state.dos * config_.discount + observed;
    if (config_.mode == PortfolioMode::advanced_multi) {
      update_bands(state);
    }
  }

 private:
  struct AfState {
    AcquisitionId id;
    bool active = true;
    int duplicates = 0;
    int above = 0;
    int below = 0;
    double dos = 0.0;
    std::size_t pick = 0;  // most recent optimum position (multi mode)
    std::vector<double> history;
    std::optional<std::uint64_t> last_suggestion;
  };

  AfState& find(AcquisitionId id) {
    for (AfState& a : afs_) {
      if (a.id == id) return a;
    }
    throw Error("unknown acquisition function");
  }
  const AfState& find(AcquisitionId id) const {
    return const_cast<Portfolio*>(this)->find(id);
  }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const AfState& a : afs_) n += a.active ? 1 : 0;
    return n;
  }

  /// Next active function in fixed order, advancing the rotation.
  AfState& next_in_rotation() {
    for (std::size_t step = 0; step < afs_.size(); ++step) {
      AfState& a = afs_[cursor_ % afs_.size()];
      ++cursor_;
      if (a.active) return a;
    }
    throw Error("portfolio: no active acquisition function");
  }

  Suggestion suggest_multi(const CandidateScores& candidates) {
    // All active functions are optimized on the reused predictions (cheap
    // relative to producing them); only the consulted one's pick is returned.
    for (AfState& a : afs_) {
      if (!a.active) continue;
      a.pick = best_candidate(a.id, candidates);
      a.last_suggestion = candidates.ids[a.pick];
    }
    AfState& consulted = next_in_rotation();
    const std::uint64_t chosen = candidates.ids[consulted.pick];

    std::vector<AfState*> conflict;
    for (AfState& other : afs_) {
      if (!other.active || &other == &consulted) continue;
      if (other.last_suggestion && *other.last_suggestion == chosen) {
        conflict.push_back(&other);
      }
    }
    if (!conflict.empty()) {
      ++consulted.duplicates;
      for (AfState* other : conflict) ++other->duplicates;
      conflict.push_back(&consulted);
      bool over = false;
      for (AfState* a : conflict) over |= a->duplicates > config_.skip_threshold;
      if (over) resolve_duplicates(conflict);
    }
    return Suggestion{consulted.pick, chosen, consulted.id};
  }

  /// Keeps the conflicting function with the lowest discounted observation
  /// score (earliest in fixed order on ties) and deactivates the rest.
  void resolve_duplicates(const std::vector<AfState*>& conflict) {
    AfState* keep = nullptr;
    for (AfState& a : afs_) {  // fixed order scan makes ties deterministic
      if (!a.active) continue;
      bool involved = std::find(conflict.begin(), conflict.end(), &a) != conflict.end();
      if (involved && (keep == nullptr || a.dos < keep->dos)) keep = &a;
    }
    for (AfState* a : conflict) {
      a->duplicates = 0;
      if (a != keep) {
        a->active = false;
        events_.push_back(Event{Event::Kind::skipped, a->id});
      }
    }
  }

  Suggestion suggest_advanced(const CandidateScores& candidates) {
    std::vector<bool> excluded;
    if (!pending_.empty()) {
      excluded.assign(candidates.size(), false);
      bool all = true;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        excluded[i] = pending_.count(candidates.ids[i]) > 0;
        all = all && excluded[i];
      }
      if (all) throw Error("portfolio: no candidates remaining");
    }
    AfState& consulted = next_in_rotation();
    const std::size_t pick =
        best_candidate(consulted.id, candidates, excluded.empty() ? nullptr : &excluded);
    const std::uint64_t chosen = candidates.ids[pick];
    consulted.last_suggestion = chosen;
    pending_.insert(chosen);
    return Suggestion{pick, chosen, consulted.id};
  }

  /// Band bookkeeping after the producing function's score changed.
  void update_bands(AfState& producer) {
    if (!producer.active) return;
    double mean = 0.0;
    std::size_t n = 0;
    for (const AfState& a : afs_) {
      if (a.active) {
        mean += a.dos;
        ++n;
      }
    }
    mean /= static_cast<double>(n);

    const double rho = config_.required_improvement;
    if (producer.dos > (1.0 + rho) * mean) {
      ++producer.above;
    } else if (producer.dos < (1.0 - rho) * mean) {
      ++producer.below;
    }

    if (producer.below >= config_.skip_threshold && n > 1) {
      for (AfState& a : afs_) {
        if (&a != &producer) a.active = false;
        a.above = 0;
        a.below = 0;
      }
      events_.push_back(Event{Event::Kind::promoted, producer.id});
      return;
    }
    if (producer.above >= config_.skip_threshold && n > 1) {
      producer.active = false;
      producer.above = 0;
      producer.below = 0;
      for (AfState& a : afs_) {  // counts of the others reset
        if (a.active) {
          a.above = 0;
          a.below = 0;
        }
      }
      events_.push_back(Event{Event::Kind::skipped, producer.id});
    }
  }

  static double median(std::span<const double> values) {
    if (values.empty()) {
      throw Error("portfolio: invalid observation recorded before any valid one");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }

  PortfolioConfig config_;
  std::vector<AfState> afs_;
  std::size_t cursor_ = 0;
  std::unordered_set<std::uint64_t> pending_;
  std::vector<Event> events_;
};

}  // namespace gridtune
