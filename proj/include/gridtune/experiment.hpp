#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridtune/cache.hpp"
#include "gridtune/errors.hpp"
#include "gridtune/metrics.hpp"
#include "gridtune/rng.hpp"
#include "gridtune/strategies.hpp"
#include "gridtune/synthetic.hpp"

namespace gridtune {

inline std::optional<MaternNu> matern_from_string(const std::string& s) {
  if (s == "1/2" || s == "0.5") return MaternNu::half;
  if (s == "3/2" || s == "1.5") return MaternNu::three_halves;
  if (s == "5/2" || s == "2.5") return MaternNu::five_halves;
  return std::nullopt;
}

/// Applies one named override to a strategy configuration; unknown keys are
/// rejected so typos fail at load time.
inline void apply_strategy_override(StrategyConfig& config, const std::string& key,
                                    const nlohmann::json& value) {
  try {
    if (key == "budget") {
      config.budget = value.get<std::size_t>();
    } else if (key == "n_init") {
      config.n_init = value.get<std::size_t>();
    } else if (key == "invalid_consumes_budget") {
      config.invalid_consumes_budget = value.get<bool>();
    } else if (key == "nu") {
      const std::optional<MaternNu> nu = matern_from_string(value.get<std::string>());
      if (!nu) throw ConfigError("nu must be one of 1/2, 3/2, 5/2");
      config.nu = *nu;
    } else if (key == "lengthscale") {
      config.lengthscale = value.get<double>();
    } else if (key == "output_variance") {
      config.output_variance = value.get<double>();
    } else if (key == "noise") {
      config.noise = value.get<double>();
    } else if (key == "jitter") {
      config.jitter = value.get<double>();
    } else if (key == "exploration") {
      const std::string mode = value.get<std::string>();
      if (mode == "constant") {
        config.exploration.mode = ExplorationConfig::Mode::constant;
      } else if (mode == "contextual-variance" || mode == "cv") {
        config.exploration.mode = ExplorationConfig::Mode::contextual_variance;
      } else {
        throw ConfigError("exploration must be 'constant' or 'contextual-variance'");
      }
    } else if (key == "lambda") {
      config.exploration.constant = value.get<double>();
    } else if (key == "discount") {
      config.discount = value.get<double>();
    } else if (key == "required_improvement") {
      config.required_improvement = value.get<double>();
    } else if (key == "skip_threshold") {
      config.skip_threshold = value.get<int>();
    } else if (key == "lhs_restarts") {
      config.lhs_restarts = value.get<std::size_t>();
    } else if (key == "sa_initial_temperature") {
      config.sa_initial_temperature = value.get<double>();
    } else if (key == "sa_cooling") {
      config.sa_cooling = value.get<double>();
    } else if (key == "ga_population") {
      config.ga_population = value.get<std::size_t>();
    } else if (key == "ga_tournament") {
      config.ga_tournament = value.get<std::size_t>();
    } else if (key == "ga_crossover") {
      config.ga_crossover = value.get<double>();
    } else if (key == "ga_mutation") {
      config.ga_mutation = value.get<double>();
    } else if (key == "ga_rerolls") {
      config.ga_rerolls = value.get<int>();
    } else {
      throw ConfigError("unknown strategy override '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for strategy override '" + key + "': " + e.what());
  }
}

struct PlannedStrategy {
  std::string name;  // unique label; defaults to the id string
  StrategyConfig config;
  std::optional<std::size_t> repetitions;  // overrides the plan default
};

struct PlannedSpace {
  std::string name;
  std::optional<std::string> cache_path;
  std::optional<SyntheticSpec> generator;
};

/// A strategy x space x repetition grid with deterministic seeding.
struct ExperimentPlan {
  std::vector<PlannedSpace> spaces;
  std::vector<PlannedStrategy> strategies;
  std::size_t repetitions = 35;
  std::size_t random_repetitions = 100;
  std::uint64_t base_seed = 0;
  std::size_t checkpoint_step = 20;
  std::size_t budget = 220;
  std::size_t n_init = 20;

  std::size_t repetitions_for(const PlannedStrategy& s) const {
    if (s.repetitions) return *s.repetitions;
    return s.config.id == StrategyId::random_search ? random_repetitions : repetitions;
  }

  std::uint64_t seed_for(const std::string& strategy_name, const std::string& space_name,
                         std::size_t rep) const {
    return SeedSequence(base_seed).with(strategy_name).with(space_name).with(rep).seed();
  }

  static ExperimentPlan from_json(const nlohmann::json& doc);
  static ExperimentPlan load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open plan file '" + path.string() + "'");
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("plan file is not valid JSON: " + std::string(e.what()));
    }
    return from_json(doc);
  }
};

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "function") {
      spec.function = value.get<std::string>();
    } else if (key == "grid") {
      spec.grid = value.get<std::vector<std::size_t>>();
    } else if (key == "noise") {
      spec.noise_sigma = value.get<double>();
    } else if (key == "seed") {
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "invalid_fraction") {
      spec.invalid_fraction = value.get<double>();
    } else {
      throw ConfigError("unknown generator key '" + key + "'");
    }
  }
  if (spec.function.empty()) throw ConfigError("generator needs a 'function'");
  if (spec.grid.empty()) throw ConfigError("generator needs a 'grid'");
  return spec;
}

inline ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& doc) {
  ExperimentPlan plan;

  // scalars first so plan-level budget/n_init seed the strategy configs
  for (const auto& [key, value] : doc.items()) {
    if (key == "spaces" || key == "strategies") continue;
    if (key == "repetitions") {
      plan.repetitions = value.get<std::size_t>();
    } else if (key == "random_repetitions") {
      plan.random_repetitions = value.get<std::size_t>();
    } else if (key == "base_seed") {
      plan.base_seed = value.get<std::uint64_t>();
    } else if (key == "checkpoint_step") {
      plan.checkpoint_step = value.get<std::size_t>();
    } else if (key == "budget") {
      plan.budget = value.get<std::size_t>();
    } else if (key == "n_init") {
      plan.n_init = value.get<std::size_t>();
    } else {
      throw ConfigError("unknown plan key '" + key + "'");
    }
  }

  for (const auto& [key, value] : doc.items()) {
    if (key == "spaces") {
      for (const nlohmann::json& js : value) {
        PlannedSpace space;
        for (const auto& [skey, svalue] : js.items()) {
          if (skey == "cache") {
            space.cache_path = svalue.get<std::string>();
          } else if (skey == "generator") {
            space.generator = synthetic_spec_from_json(svalue);
          } else if (skey == "name") {
            space.name = svalue.get<std::string>();
          } else {
            throw ConfigError("unknown space key '" + skey + "'");
          }
        }
        if (!space.cache_path && !space.generator) {
          throw ConfigError("each space needs a 'cache' path or a 'generator'");
        }
        if (space.cache_path && space.generator) {
          throw ConfigError("a space cannot have both a 'cache' and a 'generator'");
        }
        if (space.name.empty() && space.generator) space.name = space.generator->default_name();
        plan.spaces.push_back(std::move(space));
      }
    } else if (key == "strategies") {
      for (const nlohmann::json& js : value) {
        PlannedStrategy s;
        s.config.budget = plan.budget;
        s.config.n_init = plan.n_init;
        if (js.is_string()) {
          const std::optional<StrategyId> id = strategy_from_string(js.get<std::string>());
          if (!id) throw ConfigError("unknown strategy id '" + js.get<std::string>() + "'");
          s.config.id = *id;
          s.name = to_string(*id);
        } else {
          if (!js.contains("id")) throw ConfigError("each strategy needs an 'id'");
          const std::optional<StrategyId> id =
              strategy_from_string(js.at("id").get<std::string>());
          if (!id) throw ConfigError("unknown strategy id '" + js.at("id").get<std::string>() + "'");
          s.config.id = *id;
          s.name = to_string(*id);
          for (const auto& [skey, svalue] : js.items()) {
            if (skey == "id") continue;
            if (skey == "name") {
              s.name = svalue.get<std::string>();
            } else if (skey == "repetitions") {
              s.repetitions = svalue.get<std::size_t>();
            } else {
              apply_strategy_override(s.config, skey, svalue);
            }
          }
        }
        plan.strategies.push_back(std::move(s));
      }
    }
  }
  if (plan.spaces.empty()) throw ConfigError("plan has no spaces");
  if (plan.strategies.empty()) throw ConfigError("plan has no strategies");

  for (std::size_t i = 0; i < plan.strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < plan.strategies.size(); ++j) {
      if (plan.strategies[i].name == plan.strategies[j].name) {
        throw ConfigError("duplicate strategy name '" + plan.strategies[i].name +
                          "'; give one a distinct 'name'");
      }
    }
  }
  return plan;
}

/// A space materialized for execution.
struct PreparedSpace {
  std::string name;
  std::shared_ptr<const EnumeratedSpace> space;
  Objective objective;
  double true_minimum = std::numeric_limits<double>::quiet_NaN();
  std::size_t invalid_entries = 0;
  std::uint64_t cartesian_size = 0;
};

inline PreparedSpace prepare_space(const PlannedSpace& planned,
                                   const std::filesystem::path& relative_to = ".") {
  MeasurementCache cache;
  if (planned.cache_path) {
    std::filesystem::path p(*planned.cache_path);
    if (p.is_relative() && !std::filesystem::exists(p)) {
      const std::filesystem::path alt = relative_to / p;
      if (std::filesystem::exists(alt)) p = alt;
    }
    cache = MeasurementCache::load(p);
  } else {
    cache = generate_synthetic(*planned.generator);
  }
  PreparedSpace out;
  out.name = planned.name.empty() ? cache.kernel_name : planned.name;
  out.space = std::make_shared<EnumeratedSpace>(cache.space());
  out.objective = cache.objective();
  out.true_minimum = cache.true_minimum.value_or(cache.min_valid_value());
  out.invalid_entries = cache.invalid_count();
  out.cartesian_size = out.space->space.cartesian_size();
  return out;
}

struct RunOutcome {
  std::size_t space_index = 0;
  std::size_t strategy_index = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::optional<TuningRun> run;  // empty on failure
  std::string error;
};

struct ExperimentResult {
  ExperimentPlan plan;
  std::vector<PreparedSpace> spaces;
  std::vector<RunOutcome> outcomes;  // ordered by (space, strategy, rep)
  std::vector<StrategySpaceStat> stats;
  std::vector<MdfEntry> mdf;
};

/// Executes every (space, strategy, repetition) combination. Repetitions run
/// concurrently; each run owns its derived seed and its slot in the outcome
/// vector, and aggregation walks slots in key order, so the thread count
/// never changes any output.
inline ExperimentResult run_experiment(const ExperimentPlan& plan, std::size_t jobs = 0,
                                       const std::filesystem::path& plan_dir = ".") {
  ExperimentResult result;
  result.plan = plan;
  for (const PlannedSpace& s : plan.spaces) {
    result.spaces.push_back(prepare_space(s, plan_dir));
  }

  for (std::size_t si = 0; si < plan.spaces.size(); ++si) {
    for (std::size_t ti = 0; ti < plan.strategies.size(); ++ti) {
      const std::size_t reps = plan.repetitions_for(plan.strategies[ti]);
      for (std::size_t rep = 0; rep < reps; ++rep) {
        RunOutcome o;
        o.space_index = si;
        o.strategy_index = ti;
        o.rep = rep;
        o.seed = plan.seed_for(plan.strategies[ti].name, result.spaces[si].name, rep);
        result.outcomes.push_back(std::move(o));
      }
    }
  }

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= result.outcomes.size()) break;
      RunOutcome& o = result.outcomes[i];
      const PreparedSpace& space = result.spaces[o.space_index];
      StrategyConfig config = result.plan.strategies[o.strategy_index].config;
      config.seed = o.seed;
      try {
        o.run = run_strategy(*space.space, space.objective, config);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Aggregate MAEs in deterministic key order.
  const std::vector<std::size_t> checkpoints =
      mae_checkpoints(plan.budget, plan.checkpoint_step);
  std::map<std::pair<std::size_t, std::size_t>, StrategySpaceStat> table;
  for (std::size_t si = 0; si < result.spaces.size(); ++si) {
    for (std::size_t ti = 0; ti < plan.strategies.size(); ++ti) {
      StrategySpaceStat stat;
      stat.strategy = plan.strategies[ti].name;
      stat.space = result.spaces[si].name;
      table[{si, ti}] = std::move(stat);
    }
  }
  for (RunOutcome& o : result.outcomes) {
    StrategySpaceStat& stat = table[{o.space_index, o.strategy_index}];
    if (!o.run) {
      ++stat.failures;
      continue;
    }
    try {
      stat.maes.push_back(
          mean_absolute_error(*o.run, result.spaces[o.space_index].true_minimum, checkpoints));
    } catch (const MetricsError& e) {
      ++stat.failures;
      if (o.error.empty()) o.error = e.what();
    }
  }
  for (auto& [key, stat] : table) result.stats.push_back(std::move(stat));

  // MDF across the full strategy set of the plan.
  std::vector<std::string> strategy_names, space_names;
  for (const PlannedStrategy& s : plan.strategies) strategy_names.push_back(s.name);
  for (const PreparedSpace& s : result.spaces) space_names.push_back(s.name);
  std::map<std::pair<std::string, std::string>, double> mean_maes;
  bool complete = true;
  for (const StrategySpaceStat& stat : result.stats) {
    if (stat.maes.empty()) {
      complete = false;
      continue;
    }
    mean_maes[{stat.strategy, stat.space}] = stat.mean_mae();
  }
  if (complete) {
    result.mdf = mean_deviation_factor(strategy_names, space_names, mean_maes);
  }
  return result;
}

// ---------------------------------------------------------------------------
// report files

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string sanitize_filename(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

inline std::string config_field(const Configuration& c) {
  std::string out;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    if (i) out += ';';
    out += to_string(c.values[i]);
  }
  return out;
}

}  // namespace detail

/// One record per evaluation, recomputable offline: evaluation number,
/// canonical index, the configuration values, the observation (or
/// invalid:<reason>), and the running best.
inline void write_trace_csv(const std::filesystem::path& path, const TuningRun& run,
                            const EnumeratedSpace& space) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file '" + path.string() + "'");
  out << "evaluation,config_index,config,value,best\n";
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const EvaluationRecord& r = run.records[i];
    out << (i + 1) << ',' << r.config_index << ",\"";
    const std::size_t pos = space.position_of(r.config_index);
    if (pos != EnumeratedSpace::npos) out << detail::config_field(space.configs[pos]);
    out << "\",";
    if (r.value) {
      out << detail::format_double(*r.value);
    } else {
      out << "invalid:" << to_string(r.reason);
    }
    out << ',';
    out << (std::isfinite(r.best_so_far) ? detail::format_double(r.best_so_far) : "inf");
    out << '\n';
  }
}

/// Reads back what write_trace_csv wrote, enough to recompute every metric.
inline TuningRun read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file '" + path.string() + "'");
  TuningRun run;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // evaluation,config_index,"config",value,best
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    if (fields.size() != 5) throw Error("malformed trace line in '" + path.string() + "'");
    EvaluationRecord rec;
    rec.config_index = std::stoull(fields[1]);
    if (fields[3].rfind("invalid:", 0) == 0) {
      const std::optional<InvalidReason> r = invalid_reason_from_string(fields[3].substr(8));
      rec.reason = r.value_or(InvalidReason::runtime_error);
      ++run.invalid_count;
    } else {
      rec.value = std::stod(fields[3]);
      if (*rec.value < run.best_value) run.best_value = *rec.value;
    }
    rec.best_so_far = fields[4] == "inf" ? std::numeric_limits<double>::infinity()
                                         : std::stod(fields[4]);
    run.records.push_back(std::move(rec));
    ++run.evaluations;
  }
  return run;
}

inline std::string trace_filename(const std::string& space, const std::string& strategy,
                                  std::size_t rep) {
  char repbuf[24];
  std::snprintf(repbuf, sizeof(repbuf), "%04zu", rep);
  return detail::sanitize_filename(space) + "__" + detail::sanitize_filename(strategy) +
         "__rep" + repbuf + ".csv";
}

/// Writes manifest.json, per-run traces, metrics.csv, mdf.csv, and the
/// plot-ready series.csv into `dir`. Output depends only on the plan and the
/// spaces, so two runs with the same base seed are byte-identical.
inline void write_reports(const ExperimentResult& result, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "traces");

  {
    nlohmann::ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["base_seed"] = result.plan.base_seed;
    manifest["budget"] = result.plan.budget;
    manifest["n_init"] = result.plan.n_init;
    manifest["checkpoint_step"] = result.plan.checkpoint_step;
    manifest["repetitions"] = result.plan.repetitions;
    manifest["random_repetitions"] = result.plan.random_repetitions;
    nlohmann::ordered_json jspaces = nlohmann::ordered_json::array();
    for (const PreparedSpace& s : result.spaces) {
      nlohmann::ordered_json js;
      js["name"] = s.name;
      js["valid_configurations"] = s.space->size();
      js["cartesian_size"] = s.cartesian_size;
      js["invalid_entries"] = s.invalid_entries;
      js["true_minimum"] = s.true_minimum;
      jspaces.push_back(std::move(js));
    }
    manifest["spaces"] = std::move(jspaces);
    nlohmann::ordered_json jstrategies = nlohmann::ordered_json::array();
    for (const PlannedStrategy& s : result.plan.strategies) {
      nlohmann::ordered_json js;
      js["name"] = s.name;
      js["id"] = to_string(s.config.id);
      js["repetitions"] = result.plan.repetitions_for(s);
      jstrategies.push_back(std::move(js));
    }
    manifest["strategies"] = std::move(jstrategies);
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(1) << "\n";
  }

  for (const RunOutcome& o : result.outcomes) {
    if (!o.run) continue;
    const std::string name = trace_filename(result.spaces[o.space_index].name,
                                            result.plan.strategies[o.strategy_index].name, o.rep);
    write_trace_csv(dir / "traces" / name, *o.run, *result.spaces[o.space_index].space);
  }

  {
    std::ofstream out(dir / "metrics.csv");
    out << "space,strategy,repetitions,failures,mean_mae,std_mae\n";
    for (const StrategySpaceStat& stat : result.stats) {
      out << stat.space << ',' << stat.strategy << ',' << stat.maes.size() << ','
          << stat.failures << ',';
      if (stat.maes.empty()) {
        out << "nan,nan\n";
      } else {
        out << detail::format_double(stat.mean_mae()) << ','
            << detail::format_double(stat.std_mae()) << '\n';
      }
    }
  }

  {
    std::ofstream out(dir / "failures.csv");
    out << "space,strategy,rep,error\n";
    for (const RunOutcome& o : result.outcomes) {
      if (o.run && o.error.empty()) continue;
      std::string err = o.error;
      for (char& c : err) {
        if (c == ',' || c == '\n') c = ';';
      }
      out << result.spaces[o.space_index].name << ','
          << result.plan.strategies[o.strategy_index].name << ',' << o.rep << ',' << err << '\n';
    }
  }

  if (!result.mdf.empty()) {
    std::ofstream out(dir / "mdf.csv");
    out << "strategy,mdf,std_factor\n";
    for (const MdfEntry& e : result.mdf) {
      out << e.strategy << ',' << detail::format_double(e.mdf) << ','
          << detail::format_double(e.std_factor) << '\n';
    }
  }

  {
    // long-format series for plotting: median best and interquartile band
    std::ofstream out(dir / "series.csv");
    out << "space,strategy,evaluations,median_best,q25,q75\n";
    for (std::size_t si = 0; si < result.spaces.size(); ++si) {
      for (std::size_t ti = 0; ti < result.plan.strategies.size(); ++ti) {
        std::vector<const TuningRun*> runs;
        for (const RunOutcome& o : result.outcomes) {
          if (o.space_index == si && o.strategy_index == ti && o.run) runs.push_back(&*o.run);
        }
        if (runs.empty()) continue;
        for (std::size_t count = 1; count <= result.plan.budget; ++count) {
          std::vector<double> bests;
          bests.reserve(runs.size());
          bool finite = true;
          for (const TuningRun* r : runs) {
            const double b = r->best_at(count);
            finite = finite && std::isfinite(b);
            bests.push_back(b);
          }
          if (!finite) continue;
          out << result.spaces[si].name << ',' << result.plan.strategies[ti].name << ','
              << count << ',' << detail::format_double(median_of(bests)) << ','
              << detail::format_double(quantile_of(bests, 0.25)) << ','
              << detail::format_double(quantile_of(bests, 0.75)) << '\n';
        }
      }
    }
  }
}

}  // namespace gridtune
