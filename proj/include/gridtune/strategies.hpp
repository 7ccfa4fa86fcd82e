#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gridtune/acquisition.hpp"
#include "gridtune/errors.hpp"
#include "gridtune/gp.hpp"
#include "gridtune/measurement.hpp"
#include "gridtune/portfolio.hpp"
#include "gridtune/rng.hpp"
#include "gridtune/sampling.hpp"
#include "gridtune/search_space.hpp"

namespace gridtune {

enum class StrategyId {
  bo_advanced_multi,
  bo_multi,
  bo_ei,
  bo_poi,
  bo_lcb,
  random_search,
  simulated_annealing,
  genetic_algorithm,
  multistart_local_search,
};

inline const char* to_string(StrategyId id) {
  switch (id) {
    case StrategyId::bo_advanced_multi: return "bo-advanced-multi";
    case StrategyId::bo_multi: return "bo-multi";
    case StrategyId::bo_ei: return "bo-ei";
    case StrategyId::bo_poi: return "bo-poi";
    case StrategyId::bo_lcb: return "bo-lcb";
    case StrategyId::random_search: return "random";
    case StrategyId::simulated_annealing: return "sa";
    case StrategyId::genetic_algorithm: return "ga";
    case StrategyId::multistart_local_search: return "mls";
  }
  return "?";
}

inline std::optional<StrategyId> strategy_from_string(const std::string& s) {
  for (StrategyId id : {StrategyId::bo_advanced_multi, StrategyId::bo_multi, StrategyId::bo_ei,
                        StrategyId::bo_poi, StrategyId::bo_lcb, StrategyId::random_search,
                        StrategyId::simulated_annealing, StrategyId::genetic_algorithm,
                        StrategyId::multistart_local_search}) {
    if (s == to_string(id)) return id;
  }
  return std::nullopt;
}

inline bool is_bayesian(StrategyId id) {
  switch (id) {
    case StrategyId::bo_advanced_multi:
    case StrategyId::bo_multi:
    case StrategyId::bo_ei:
    case StrategyId::bo_poi:
    case StrategyId::bo_lcb:
      return true;
    default:
      return false;
  }
}

/// Full strategy configuration. Defaults follow the tuned values: Matern 3/2,
/// lengthscale 1.5 under contextual variance (2.0 under a constant factor),
/// skip threshold 5, rho 0.1, discount 0.65 (multi) / 0.75 (advanced multi),
/// 20 initial samples within a 220-evaluation budget.
struct StrategyConfig {
  StrategyId id = StrategyId::bo_advanced_multi;
  std::uint64_t seed = 0;
  std::size_t budget = 220;
  std::size_t n_init = 20;
  bool invalid_consumes_budget = true;

  // surrogate
  MaternNu nu = MaternNu::three_halves;
  std::optional<double> lengthscale;  // default depends on exploration mode
  double output_variance = 1.0;
  double noise = 1e-10;
  double jitter = 1e-6;

  // acquisition
  ExplorationConfig exploration;
  std::optional<double> discount;  // default by portfolio mode
  double required_improvement = 0.1;
  int skip_threshold = 5;
  std::size_t lhs_restarts = 50;

  // baselines (defaults are this project's, not tuned values)
  double sa_initial_temperature = 1.0;
  double sa_cooling = 0.995;
  std::size_t ga_population = 20;
  std::size_t ga_tournament = 3;
  double ga_crossover = 0.7;
  double ga_mutation = 0.1;
  int ga_rerolls = 5;

  /// Instrumentation hook, called after each BO loop iteration with
  /// (objective invocations, valid evaluations, GP training size, lambda).
  std::function<void(std::size_t, std::size_t, std::size_t, double)> inspect;

  double effective_lengthscale() const {
    if (lengthscale) return *lengthscale;
    return exploration.mode == ExplorationConfig::Mode::contextual_variance ? 1.5 : 2.0;
  }

  double effective_discount(PortfolioMode mode) const {
    if (discount) return *discount;
    return mode == PortfolioMode::multi ? 0.65 : 0.75;
  }
};

/// One objective evaluation as it happened.
struct EvaluationRecord {
  ConfigIndex config_index = 0;
  std::optional<double> value;
  InvalidReason reason = InvalidReason::runtime_error;
  double best_so_far = std::numeric_limits<double>::infinity();
};

/// Complete account of a tuning run: every evaluation in order, the
/// best-so-far trace, and budget bookkeeping.
struct TuningRun {
  std::vector<EvaluationRecord> records;
  std::size_t evaluations = 0;      // objective invocations
  std::size_t budget_consumed = 0;  // invocations charged against the budget
  std::size_t invalid_count = 0;
  double best_value = std::numeric_limits<double>::infinity();
  std::optional<Configuration> best_config;
  std::size_t surrogate_size = 0;  // BO only: final GP training count
  std::vector<std::string> warnings;

  /// Best value after the first `evaluation_count` objective invocations;
  /// shorter runs carry their final best forward.
  double best_at(std::size_t evaluation_count) const {
    if (records.empty() || evaluation_count == 0) {
      return std::numeric_limits<double>::infinity();
    }
    const std::size_t i = std::min(evaluation_count, records.size()) - 1;
    return records[i].best_so_far;
  }
};

namespace detail {

/// Shared bookkeeping behind every strategy: visited flags, observation
/// cache, budget accounting, and the never-revisit guarantee.
class RunContext {
 public:
  RunContext(const EnumeratedSpace& space, const Objective& objective,
             const StrategyConfig& config)
      : space_(space),
        objective_(objective),
        config_(config),
        visited_(space.size(), false),
        cached_values_(space.size(), std::numeric_limits<double>::quiet_NaN()) {}

  const EnumeratedSpace& space() const { return space_; }
  TuningRun& run() { return run_; }

  std::size_t unvisited_count() const { return space_.size() - visited_count_; }
  bool visited(std::size_t pos) const { return visited_[pos]; }
  bool has_budget() const { return run_.budget_consumed < config_.budget; }
  bool exhausted() const { return !has_budget() || unvisited_count() == 0; }

  /// Cached observation of a visited configuration (NaN if it was invalid).
  double cached_value(std::size_t pos) const { return cached_values_[pos]; }

  std::span<const double> valid_observations() const { return valid_observations_; }

  /// Evaluates a not-yet-visited candidate, charging the budget.
  Measurement evaluate(std::size_t pos) {
    if (visited_[pos]) throw Error("internal: configuration evaluated twice");
    visited_[pos] = true;
    ++visited_count_;
    Measurement m = objective_(space_.configs[pos]);
    ++run_.evaluations;

    EvaluationRecord rec;
    rec.config_index = space_.configs[pos].index;
    if (m.is_valid()) {
      ++run_.budget_consumed;
      const double v = *m.value;
      rec.value = v;
      cached_values_[pos] = v;
      valid_observations_.push_back(v);
      if (v < run_.best_value) {
        run_.best_value = v;
        run_.best_config = space_.configs[pos];
      }
    } else {
      if (config_.invalid_consumes_budget) ++run_.budget_consumed;
      rec.reason = m.reason;
      ++run_.invalid_count;
    }
    rec.best_so_far = run_.best_value;
    run_.records.push_back(rec);
    return m;
  }

  /// Uniformly random unvisited candidate, or nothing when all are visited.
  std::optional<std::size_t> random_unvisited(Rng& rng) {
    const std::size_t free_count = unvisited_count();
    if (free_count == 0) return std::nullopt;
    std::size_t k = static_cast<std::size_t>(rng.uniform_below(free_count));
    for (std::size_t pos = 0; pos < space_.size(); ++pos) {
      if (!visited_[pos] && k-- == 0) return pos;
    }
    return std::nullopt;
  }

 private:
  const EnumeratedSpace& space_;
  const Objective& objective_;
  const StrategyConfig& config_;
  std::vector<bool> visited_;
  std::vector<double> cached_values_;
  std::vector<double> valid_observations_;
  std::size_t visited_count_ = 0;
  TuningRun run_;
};

/// Restriction-valid neighbors one rank step away in one parameter, in
/// deterministic order (parameter order, lower rank first).
inline std::vector<std::size_t> adjacent_neighbors(const EnumeratedSpace& space, std::size_t pos) {
  const SearchSpace& s = space.space;
  const std::vector<std::size_t> ranks = s.ranks_of_index(space.configs[pos].index);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    for (int step : {-1, +1}) {
      if (step < 0 && ranks[j] == 0) continue;
      if (step > 0 && ranks[j] + 1 >= s.params()[j].size()) continue;
      std::vector<std::size_t> r = ranks;
      r[j] = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r[j]) + step);
      const std::size_t neighbor = space.position_of(s.index_of_ranks(r));
      if (neighbor != EnumeratedSpace::npos) out.push_back(neighbor);
    }
  }
  return out;
}

}  // namespace detail

/// Bayesian optimization over the enumerated valid candidates: maximin LHS
/// initial sample, exact GP refit after every valid observation, exhaustive
/// candidate prediction with reuse, one acquisition mechanism (single
/// function, multi, or advanced multi). Runtime-invalid results are marked
/// visited and never re-suggested, but the surrogate is never fed an
/// artificial value for them.
inline TuningRun run_bo(const EnumeratedSpace& space, const Objective& objective,
                        const StrategyConfig& config) {
  if (!is_bayesian(config.id)) throw ConfigError("run_bo requires a BO strategy id");
  if (space.size() <= config.n_init) {
    throw SamplingError("space has " + std::to_string(space.size()) +
                        " valid configurations; need more than n_init = " +
                        std::to_string(config.n_init));
  }
  if (config.budget <= config.n_init) {
    throw ConfigError("budget must exceed the initial sample size");
  }

  Rng rng(config.seed);
  detail::RunContext ctx(space, objective, config);

  // Initial design, evaluated through the context so budget accounting and
  // the visited set stay consistent.
  const Objective counted = [&ctx, &space](const Configuration& c) {
    const std::size_t pos = space.position_of(c.index);
    return ctx.evaluate(pos);
  };
  const std::size_t max_init_evals =
      config.invalid_consumes_budget ? config.budget : std::numeric_limits<std::size_t>::max();
  const InitialSample init =
      draw_initial_sample(space, counted, config.n_init, rng, max_init_evals, config.lhs_restarts);

  const std::size_t d = space.dimension();
  Eigen::MatrixXd all_coords(space.size(), d);
  for (std::size_t pos = 0; pos < space.size(); ++pos) {
    for (std::size_t j = 0; j < d; ++j) all_coords(pos, j) = space.coords[pos][j];
  }

  // Surrogate training set: genuinely observed valid evaluations only.
  std::vector<std::size_t> train_positions = init.positions;
  std::vector<double> train_values = init.observations;

  const MaternKernel kernel(config.nu, config.effective_lengthscale(), config.output_variance);
  auto fit_current = [&]() {
    Eigen::MatrixXd X(train_positions.size(), d);
    Eigen::VectorXd y(static_cast<Eigen::Index>(train_values.size()));
    for (std::size_t i = 0; i < train_positions.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) =
          all_coords.row(static_cast<Eigen::Index>(train_positions[i]));
      y(static_cast<Eigen::Index>(i)) = train_values[i];
    }
    return GpModel::fit(kernel, X, y, config.noise, config.jitter);
  };

  GpModel model = fit_current();
  std::uint64_t model_version = 1;

  std::optional<Portfolio> portfolio;
  std::optional<AcquisitionId> single_af;
  switch (config.id) {
    case StrategyId::bo_ei: single_af = AcquisitionId::ei; break;
    case StrategyId::bo_poi: single_af = AcquisitionId::poi; break;
    case StrategyId::bo_lcb: single_af = AcquisitionId::lcb; break;
    case StrategyId::bo_multi: {
      PortfolioConfig pc;
      pc.mode = PortfolioMode::multi;
      pc.skip_threshold = config.skip_threshold;
      pc.discount = config.effective_discount(PortfolioMode::multi);
      pc.required_improvement = config.required_improvement;
      portfolio.emplace(pc);
      break;
    }
    default: {
      PortfolioConfig pc;
      pc.mode = PortfolioMode::advanced_multi;
      pc.skip_threshold = config.skip_threshold;
      pc.discount = config.effective_discount(PortfolioMode::advanced_multi);
      pc.required_improvement = config.required_improvement;
      portfolio.emplace(pc);
      break;
    }
  }

  // Per-iteration predictions mirror the unvisited candidate set. They are
  // recomputed only when the model changed; after an invalid observation the
  // model is untouched, so the previous predictions are reused with the
  // visited candidate dropped.
  std::vector<std::size_t> cand_positions;
  std::vector<std::uint64_t> cand_ids;
  std::vector<double> cand_means, cand_stds, cand_vars;
  std::uint64_t predicted_version = 0;

  auto refresh_predictions = [&]() {
    if (predicted_version == model_version) {
      std::size_t w = 0;
      for (std::size_t i = 0; i < cand_positions.size(); ++i) {
        if (ctx.visited(cand_positions[i])) continue;
        cand_positions[w] = cand_positions[i];
        cand_ids[w] = cand_ids[i];
        cand_means[w] = cand_means[i];
        cand_stds[w] = cand_stds[i];
        cand_vars[w] = cand_vars[i];
        ++w;
      }
      cand_positions.resize(w);
      cand_ids.resize(w);
      cand_means.resize(w);
      cand_stds.resize(w);
      cand_vars.resize(w);
      return;
    }
    cand_positions.clear();
    for (std::size_t pos = 0; pos < space.size(); ++pos) {
      if (!ctx.visited(pos)) cand_positions.push_back(pos);
    }
    Eigen::MatrixXd Xstar(cand_positions.size(), d);
    for (std::size_t i = 0; i < cand_positions.size(); ++i) {
      Xstar.row(static_cast<Eigen::Index>(i)) =
          all_coords.row(static_cast<Eigen::Index>(cand_positions[i]));
    }
    const GpPrediction pred = model.predict(Xstar);
    const std::size_t m = cand_positions.size();
    cand_ids.resize(m);
    cand_means.resize(m);
    cand_stds.resize(m);
    cand_vars.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      cand_ids[i] = space.configs[cand_positions[i]].index;
      cand_means[i] = pred.mean(static_cast<Eigen::Index>(i));
      cand_vars[i] = pred.variance(static_cast<Eigen::Index>(i));
      cand_stds[i] = std::sqrt(cand_vars[i]);
    }
    predicted_version = model_version;
  };

  // Contextual-variance normalizers, frozen right after the initial sample.
  refresh_predictions();
  ContextualVarianceState cv_state;
  cv_state.initial_sample_mean = init.mean_observation();
  cv_state.initial_mean_variance =
      cand_vars.empty() ? 0.0
                        : std::accumulate(cand_vars.begin(), cand_vars.end(), 0.0) /
                              static_cast<double>(cand_vars.size());
  bool warned_cv_fallback = false;

  while (!ctx.exhausted()) {
    refresh_predictions();
    if (cand_positions.empty()) break;

    double lambda = config.exploration.constant;
    if (config.exploration.mode == ExplorationConfig::Mode::contextual_variance) {
      const double mean_var = std::accumulate(cand_vars.begin(), cand_vars.end(), 0.0) /
                              static_cast<double>(cand_vars.size());
      if (std::optional<double> cv =
              contextual_variance_lambda(cv_state, mean_var, ctx.run().best_value)) {
        lambda = *cv;
      } else if (!warned_cv_fallback) {
        ctx.run().warnings.push_back(
            "contextual variance unavailable (non-positive observations or zero initial "
            "variance); falling back to constant exploration factor " +
            std::to_string(config.exploration.constant));
        warned_cv_fallback = true;
      }
    }

    CandidateScores scores;
    scores.ids = cand_ids;
    scores.means = cand_means;
    scores.stds = cand_stds;
    scores.best_std = model.standardize(ctx.run().best_value);
    scores.lambda = lambda;

    std::size_t pick_pos;
    AcquisitionId by;
    if (single_af) {
      pick_pos = best_candidate(*single_af, scores);
      by = *single_af;
    } else {
      const Portfolio::Suggestion s = portfolio->suggest(scores);
      pick_pos = s.position;
      by = s.by;
    }
    const std::size_t candidate = cand_positions[pick_pos];
    const std::uint64_t candidate_id = cand_ids[pick_pos];

    const Measurement m = ctx.evaluate(candidate);
    if (portfolio) {
      portfolio->record(by, candidate_id, m.value, ctx.valid_observations());
    }
    if (m.is_valid()) {
      train_positions.push_back(candidate);
      train_values.push_back(*m.value);
      model = fit_current();
      ++model_version;
    }
    if (config.inspect) {
      config.inspect(ctx.run().evaluations, ctx.valid_observations().size(),
                     train_positions.size(), lambda);
    }
  }
  ctx.run().surrogate_size = train_positions.size();
  return std::move(ctx.run());
}

/// Uniform sampling without replacement over the valid candidates.
inline TuningRun run_random(const EnumeratedSpace& space, const Objective& objective,
                            const StrategyConfig& config) {
  detail::RunContext ctx(space, objective, config);
  Rng rng(config.seed);
  while (!ctx.exhausted()) {
    const std::optional<std::size_t> pos = ctx.random_unvisited(rng);
    if (!pos) break;
    ctx.evaluate(*pos);
  }
  return std::move(ctx.run());
}

/// Simulated annealing on the valid candidate graph: single-rank-step
/// neighborhoods, Metropolis acceptance on the observation z-score, geometric
/// cooling per evaluated proposal. Runtime-invalid neighbors are rejected
/// without an acceptance test but consume budget; visited neighbors reuse
/// their cached observation free of budget.
inline TuningRun run_sa(const EnumeratedSpace& space, const Objective& objective,
                        const StrategyConfig& config) {
  detail::RunContext ctx(space, objective, config);
  Rng rng(config.seed);
  double temperature = config.sa_initial_temperature;

  auto observation_scale = [&]() {
    const std::span<const double> obs = ctx.valid_observations();
    if (obs.size() < 2) return 1.0;
    double mean = 0.0;
    for (double v : obs) mean += v;
    mean /= static_cast<double>(obs.size());
    double var = 0.0;
    for (double v : obs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(obs.size());
    return var > 0.0 ? std::sqrt(var) : 1.0;
  };

  std::optional<std::size_t> current;
  double current_value = 0.0;
  std::size_t free_steps = 0;  // consecutive steps that consumed no budget
  while (!ctx.exhausted()) {
    if (!current) {  // (re)start from a random configuration
      const std::optional<std::size_t> start = ctx.random_unvisited(rng);
      if (!start) break;
      const Measurement m = ctx.evaluate(*start);
      free_steps = 0;
      if (m.is_valid()) {
        current = start;
        current_value = *m.value;
      }
      continue;
    }

    const std::vector<std::size_t> neighbors = detail::adjacent_neighbors(space, *current);
    if (neighbors.empty()) {
      current.reset();  // isolated configuration: restart
      continue;
    }
    const std::size_t nb = neighbors[rng.uniform_below(neighbors.size())];

    bool neighbor_valid;
    double neighbor_value;
    if (ctx.visited(nb)) {
      neighbor_value = ctx.cached_value(nb);
      neighbor_valid = !std::isnan(neighbor_value);
      if (++free_steps > 8 * neighbors.size() + 32) {
        current.reset();  // neighborhood fully explored: restart elsewhere
        continue;
      }
    } else {
      const Measurement m = ctx.evaluate(nb);
      temperature *= config.sa_cooling;
      free_steps = 0;
      neighbor_valid = m.is_valid();
      neighbor_value = neighbor_valid ? *m.value : 0.0;
      if (!neighbor_valid) continue;  // rejected outright, budget consumed
    }
    if (neighbor_valid) {
      const double delta = (neighbor_value - current_value) / observation_scale();
      if (delta <= 0.0 || rng.uniform01() < std::exp(-delta / std::max(temperature, 1e-12))) {
        current = nb;
        current_value = neighbor_value;
      }
    }
  }
  return std::move(ctx.run());
}

/// Repeated steepest-descent hill climbing over single-parameter-adjacent
/// neighborhoods from random starts, until the budget is exhausted.
inline TuningRun run_mls(const EnumeratedSpace& space, const Objective& objective,
                         const StrategyConfig& config) {
  detail::RunContext ctx(space, objective, config);
  Rng rng(config.seed);

  while (!ctx.exhausted()) {
    const std::optional<std::size_t> start = ctx.random_unvisited(rng);
    if (!start) break;
    const Measurement m = ctx.evaluate(*start);
    if (!m.is_valid()) continue;

    std::size_t current = *start;
    double current_value = *m.value;
    bool improved = true;
    while (improved && !ctx.exhausted()) {
      improved = false;
      std::optional<std::size_t> best_nb;
      double best_value = current_value;
      for (const std::size_t nb : detail::adjacent_neighbors(space, current)) {
        double value;
        if (ctx.visited(nb)) {
          value = ctx.cached_value(nb);  // free reuse
          if (std::isnan(value)) continue;
        } else {
          if (ctx.exhausted()) break;
          const Measurement mn = ctx.evaluate(nb);
          if (!mn.is_valid()) continue;
          value = *mn.value;
        }
        if (value < best_value) {
          best_value = value;
          best_nb = nb;
        }
      }
      if (best_nb) {
        current = *best_nb;
        current_value = best_value;
        improved = true;
      }
    }
  }
  return std::move(ctx.run());
}

/// Generational GA: tournament selection, uniform crossover, per-gene
/// mutation to a uniform random value, elitism of one. Restriction-invalid
/// offspring are re-rolled a bounded number of times and then discarded;
/// runtime-invalid offspring get infinite fitness. Previously visited
/// offspring reuse their cached observation free of budget.
inline TuningRun run_ga(const EnumeratedSpace& space, const Objective& objective,
                        const StrategyConfig& config) {
  detail::RunContext ctx(space, objective, config);
  Rng rng(config.seed);
  const SearchSpace& s = space.space;
  const std::size_t d = space.dimension();
  const std::size_t pop_size = std::min(config.ga_population, space.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  struct Member {
    std::size_t pos;
    double fitness;
  };
  std::vector<Member> population;

  auto fitness_of = [&](std::size_t pos) -> std::optional<double> {
    if (ctx.visited(pos)) {
      const double v = ctx.cached_value(pos);
      return std::isnan(v) ? kInf : v;
    }
    if (ctx.exhausted()) return std::nullopt;
    const Measurement m = ctx.evaluate(pos);
    return m.is_valid() ? *m.value : kInf;
  };

  while (population.size() < pop_size && !ctx.exhausted()) {
    const std::optional<std::size_t> pos = ctx.random_unvisited(rng);
    if (!pos) break;
    if (const std::optional<double> f = fitness_of(*pos)) {
      population.push_back(Member{*pos, *f});
    }
  }

  auto tournament = [&]() -> const Member& {
    const Member* winner = nullptr;
    for (std::size_t i = 0; i < config.ga_tournament; ++i) {
      const Member& contender = population[rng.uniform_below(population.size())];
      if (winner == nullptr || contender.fitness < winner->fitness) winner = &contender;
    }
    return *winner;
  };

  while (!ctx.exhausted() && !population.empty()) {
    const std::size_t evals_before = ctx.run().evaluations;

    std::vector<Member> next;
    std::size_t elite = 0;  // elitism 1
    for (std::size_t i = 1; i < population.size(); ++i) {
      if (population[i].fitness < population[elite].fitness) elite = i;
    }
    next.push_back(population[elite]);

    std::size_t attempts = 0;
    const std::size_t max_attempts = 20 * pop_size;
    while (next.size() < pop_size && !ctx.exhausted() && attempts < max_attempts) {
      ++attempts;
      const std::vector<std::size_t> ranks_a = s.ranks_of_index(space.configs[tournament().pos].index);
      const std::vector<std::size_t> ranks_b = s.ranks_of_index(space.configs[tournament().pos].index);

      std::optional<std::size_t> child_pos;
      for (int reroll = 0; reroll <= config.ga_rerolls && !child_pos; ++reroll) {
        std::vector<std::size_t> child(d);
        const bool crossover = rng.bernoulli(config.ga_crossover);
        for (std::size_t j = 0; j < d; ++j) {
          child[j] = crossover ? (rng.bernoulli(0.5) ? ranks_a[j] : ranks_b[j]) : ranks_a[j];
          if (rng.bernoulli(config.ga_mutation)) {
            child[j] = static_cast<std::size_t>(rng.uniform_below(s.params()[j].size()));
          }
        }
        const std::size_t pos = space.position_of(s.index_of_ranks(child));
        if (pos != EnumeratedSpace::npos) child_pos = pos;
      }
      if (!child_pos) continue;  // discarded after rerolls
      if (const std::optional<double> f = fitness_of(*child_pos)) {
        next.push_back(Member{*child_pos, *f});
      }
    }
    if (next.size() > 1) population = std::move(next);

    if (ctx.run().evaluations == evals_before && !ctx.exhausted()) {
      // Generation converged onto visited configurations; keep the budget
      // guarantee by injecting a random unvisited individual.
      const std::optional<std::size_t> pos = ctx.random_unvisited(rng);
      if (!pos) break;
      if (const std::optional<double> f = fitness_of(*pos)) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < population.size(); ++i) {
          if (population[i].fitness > population[worst].fitness) worst = i;
        }
        population[worst] = Member{*pos, *f};
      }
    }
  }
  return std::move(ctx.run());
}

inline TuningRun run_strategy(const EnumeratedSpace& space, const Objective& objective,
                              const StrategyConfig& config) {
  switch (config.id) {
    case StrategyId::random_search: return run_random(space, objective, config);
    case StrategyId::simulated_annealing: return run_sa(space, objective, config);
    case StrategyId::genetic_algorithm: return run_ga(space, objective, config);
    case StrategyId::multistart_local_search: return run_mls(space, objective, config);
    default: return run_bo(space, objective, config);
  }
}

}  // namespace gridtune
