// gridtune: simulation-mode auto-tuning benchmarks.
//
// Subcommands:
//   gen       generate a synthetic measurement cache
//   validate  check a cache file (schema, completeness, stated minimum)
//   tune      run one strategy on one space, write the evaluation trace
//   bench     run a strategy x space x repetition experiment plan
//   report    recompute metrics from a bench output directory
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridtune/cache.hpp"
#include "gridtune/errors.hpp"
#include "gridtune/experiment.hpp"
#include "gridtune/metrics.hpp"
#include "gridtune/strategies.hpp"
#include "gridtune/synthetic.hpp"

namespace fs = std::filesystem;
using namespace gridtune;

namespace {

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::string token;
  for (char c : text + "x") {
    if (c == 'x' || c == 'X' || c == ',') {
      if (!token.empty()) {
        out.push_back(static_cast<std::size_t>(std::stoull(token)));
        token.clear();
      }
    } else {
      token += c;
    }
  }
  if (out.empty()) throw ConfigError("empty grid spec '" + text + "'");
  return out;
}

struct TuneOptions {
  std::string space_path;
  std::string strategy = "bo-advanced-multi";
  std::size_t budget = 220;
  std::size_t n_init = 20;
  std::uint64_t seed = 0;
  std::string out_path;
  std::vector<std::string> overrides;  // key=value pairs
};

StrategyConfig make_strategy_config(const TuneOptions& opt) {
  const std::optional<StrategyId> id = strategy_from_string(opt.strategy);
  if (!id) throw ConfigError("unknown strategy id '" + opt.strategy + "'");
  StrategyConfig config;
  config.id = *id;
  config.budget = opt.budget;
  config.n_init = opt.n_init;
  config.seed = opt.seed;
  for (const std::string& kv : opt.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("strategy option '" + kv + "' is not key=value");
    }
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;  // unquoted strings like 3/2 or constant
    }
    apply_strategy_override(config, key, value);
  }
  return config;
}

int cmd_gen(const SyntheticSpec& spec, const std::string& out_path) {
  const MeasurementCache cache = generate_synthetic(spec);
  cache.save(out_path);
  std::cout << "wrote " << out_path << ": " << cache.entries.size() << " configurations, "
            << cache.invalid_count() << " invalid, minimum "
            << detail::format_double(*cache.true_minimum) << "\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  const MeasurementCache cache = MeasurementCache::load(path);  // load() validates
  const SearchSpace space = cache.space();
  std::size_t by_reason[3] = {0, 0, 0};
  for (const auto& [idx, m] : cache.entries) {
    if (!m.is_valid()) ++by_reason[static_cast<int>(m.reason)];
  }
  std::cout << "cache ok: " << cache.kernel_name << " on " << cache.device_name << "\n"
            << "  parameters:            " << space.dimension() << "\n"
            << "  cartesian size:        " << space.cartesian_size() << "\n"
            << "  valid configurations:  " << cache.entries.size() << "\n"
            << "  invalid entries:       " << cache.invalid_count() << " (compile "
            << by_reason[0] << ", runtime " << by_reason[1] << ", restricted " << by_reason[2]
            << ")\n"
            << "  minimum:               " << detail::format_double(cache.min_valid_value())
            << " " << cache.objective_unit << "\n";
  return 0;
}

int cmd_tune(const TuneOptions& opt) {
  const MeasurementCache cache = MeasurementCache::load(opt.space_path);
  const EnumeratedSpace space(cache.space());
  const StrategyConfig config = make_strategy_config(opt);

  const TuningRun run = run_strategy(space, cache.objective(), config);
  for (const std::string& w : run.warnings) std::cerr << "warning: " << w << "\n";
  if (!opt.out_path.empty()) write_trace_csv(opt.out_path, run, space);

  std::cout << "strategy " << opt.strategy << " on " << cache.kernel_name << " (seed "
            << opt.seed << ")\n"
            << "  evaluations:  " << run.evaluations << " (" << run.invalid_count
            << " invalid)\n";
  if (run.best_config) {
    std::cout << "  best value:   " << detail::format_double(run.best_value) << " "
              << cache.objective_unit << "\n"
              << "  best config:  #" << run.best_config->index << " ["
              << detail::config_field(*run.best_config) << "]\n";
    if (cache.true_minimum) {
      std::cout << "  true minimum: " << detail::format_double(*cache.true_minimum) << "\n";
    }
  } else {
    std::cout << "  no valid observation found\n";
  }
  return 0;
}

int cmd_bench(const std::string& plan_path, const std::string& out_dir, std::size_t jobs) {
  const ExperimentPlan plan = ExperimentPlan::load(plan_path);
  const ExperimentResult result =
      run_experiment(plan, jobs, fs::path(plan_path).parent_path());
  write_reports(result, out_dir);

  std::size_t failures = 0;
  for (const RunOutcome& o : result.outcomes) failures += o.run && o.error.empty() ? 0 : 1;
  std::cout << "ran " << result.outcomes.size() << " runs (" << failures << " failures) over "
            << result.spaces.size() << " spaces x " << plan.strategies.size()
            << " strategies; reports in " << out_dir << "\n";
  for (const StrategySpaceStat& stat : result.stats) {
    std::cout << "  " << stat.space << " / " << stat.strategy << ": mean MAE "
              << (stat.maes.empty() ? "n/a" : detail::format_double(stat.mean_mae())) << "\n";
  }
  return failures == 0 ? 0 : 3;
}

struct LoadedBench {
  nlohmann::json manifest;
  std::vector<std::string> spaces;
  std::vector<std::string> strategies;
  // (space, strategy) -> runs by rep
  std::map<std::pair<std::string, std::string>, std::vector<TuningRun>> runs;
};

LoadedBench load_bench_dir(const fs::path& dir) {
  LoadedBench out;
  std::ifstream in(dir / "manifest.json");
  if (!in) throw CacheError("no manifest.json in '" + dir.string() + "'");
  in >> out.manifest;
  for (const nlohmann::json& js : out.manifest.at("spaces")) {
    out.spaces.push_back(js.at("name").get<std::string>());
  }
  for (const nlohmann::json& js : out.manifest.at("strategies")) {
    out.strategies.push_back(js.at("name").get<std::string>());
  }
  for (const std::string& space : out.spaces) {
    for (const nlohmann::json& js : out.manifest.at("strategies")) {
      const std::string strategy = js.at("name").get<std::string>();
      const std::size_t reps = js.at("repetitions").get<std::size_t>();
      std::vector<TuningRun>& runs = out.runs[{space, strategy}];
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const fs::path p = dir / "traces" / trace_filename(space, strategy, rep);
        if (fs::exists(p)) runs.push_back(read_trace_csv(p));
      }
    }
  }
  return out;
}

int cmd_report(const std::string& in_dir, bool with_mdf, bool extended,
               const std::string& reference, std::size_t max_budget) {
  const LoadedBench bench = load_bench_dir(in_dir);
  const std::size_t budget = bench.manifest.at("budget").get<std::size_t>();
  const std::size_t step = bench.manifest.at("checkpoint_step").get<std::size_t>();
  const std::vector<std::size_t> checkpoints = mae_checkpoints(budget, step);

  std::map<std::string, double> minima;
  for (const nlohmann::json& js : bench.manifest.at("spaces")) {
    minima[js.at("name").get<std::string>()] = js.at("true_minimum").get<double>();
  }

  std::map<std::pair<std::string, std::string>, double> mean_maes;
  std::cout << "space,strategy,repetitions,failures,mean_mae,std_mae\n";
  for (const std::string& space : bench.spaces) {
    for (const std::string& strategy : bench.strategies) {
      const std::vector<TuningRun>& runs = bench.runs.at({space, strategy});
      std::vector<double> maes;
      std::size_t failures = 0;
      for (const TuningRun& r : runs) {
        try {
          maes.push_back(mean_absolute_error(r, minima.at(space), checkpoints));
        } catch (const MetricsError&) {
          ++failures;
        }
      }
      std::cout << space << ',' << strategy << ',' << maes.size() << ',' << failures << ',';
      if (maes.empty()) {
        std::cout << "nan,nan\n";
      } else {
        mean_maes[{strategy, space}] = mean_of(maes);
        std::cout << detail::format_double(mean_of(maes)) << ','
                  << detail::format_double(stddev_of(maes)) << '\n';
      }
    }
  }

  if (with_mdf) {
    const std::vector<MdfEntry> mdf =
        mean_deviation_factor(bench.strategies, bench.spaces, mean_maes);
    std::cout << "\nstrategy,mdf,std_factor\n";
    for (const MdfEntry& e : mdf) {
      std::cout << e.strategy << ',' << detail::format_double(e.mdf) << ','
                << detail::format_double(e.std_factor) << '\n';
    }
  }

  if (extended) {
    if (reference.empty()) throw ConfigError("--extended needs --reference <strategy>");
    std::cout << "\nspace,strategy,matched_at\n";
    for (const std::string& space : bench.spaces) {
      const auto ref_it = bench.runs.find({space, reference});
      if (ref_it == bench.runs.end() || ref_it->second.empty()) {
        throw CacheError("no runs for reference strategy '" + reference + "' on '" + space + "'");
      }
      std::vector<std::pair<std::string, const std::vector<TuningRun>*>> others;
      for (const std::string& strategy : bench.strategies) {
        if (strategy == reference) continue;
        others.emplace_back(strategy, &bench.runs.at({space, strategy}));
      }
      for (const ExtendedMatch& m : extended_match(ref_it->second, others, max_budget)) {
        std::cout << space << ',' << m.strategy << ','
                  << (m.match_at ? std::to_string(*m.match_at) : "not reached") << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete constrained auto-tuning: Bayesian optimization and simulation benchmarks"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic measurement cache");
  std::string gen_function, gen_grid, gen_out;
  SyntheticSpec gen_spec;
  double gen_invalid_fraction = -1.0;
  gen->add_option("--function", gen_function, "rosenbrock-disc | rastrigin-box | step-plateau | random-rough")
      ->required();
  gen->add_option("--grid", gen_grid, "grid sizes, e.g. 50x50 or 20,20,20")->required();
  gen->add_option("--noise", gen_spec.noise_sigma, "multiplicative log-normal noise sigma");
  gen->add_option("--seed", gen_spec.seed, "generator seed");
  gen->add_option("--invalid-fraction", gen_invalid_fraction,
                  "fraction of runtime-invalid entries (random-rough only)");
  gen->add_option("--out", gen_out, "output cache file")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "validate a measurement cache file");
  std::string validate_path;
  validate->add_option("--space", validate_path, "cache file")->required();

  // tune
  auto* tune = app.add_subcommand("tune", "run one strategy on one cached space");
  TuneOptions tune_opt;
  tune->add_option("--space", tune_opt.space_path, "cache file")->required();
  tune->add_option("--strategy", tune_opt.strategy,
                   "bo-advanced-multi | bo-multi | bo-ei | bo-poi | bo-lcb | random | sa | ga | mls");
  tune->add_option("--budget", tune_opt.budget, "total objective evaluations");
  tune->add_option("--init", tune_opt.n_init, "initial sample size");
  tune->add_option("--seed", tune_opt.seed, "run seed");
  tune->add_option("--out", tune_opt.out_path, "trace CSV output");
  tune->add_option("--set", tune_opt.overrides,
                   "strategy override key=value (e.g. --set lengthscale=2.0 --set nu=5/2)");

  // bench
  auto* bench = app.add_subcommand("bench", "execute an experiment plan");
  std::string bench_plan, bench_out;
  std::size_t bench_jobs = 0;
  bench->add_option("--plan", bench_plan, "plan JSON document")->required();
  bench->add_option("--out-dir", bench_out, "report output directory")->required();
  bench->add_option("--jobs", bench_jobs, "worker threads (default: hardware)");

  // report
  auto* report = app.add_subcommand("report", "recompute metrics from a bench directory");
  std::string report_dir, report_reference;
  bool report_mdf = false, report_extended = false;
  std::size_t report_max_budget = 1020;
  report->add_option("--in-dir", report_dir, "bench output directory")->required();
  report->add_flag("--mdf", report_mdf, "also print mean deviation factors");
  report->add_flag("--extended", report_extended,
                   "evaluations needed to match the reference strategy's final best");
  report->add_option("--reference", report_reference, "reference strategy for --extended");
  report->add_option("--max-budget", report_max_budget, "extended-match horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      gen_spec.function = gen_function;
      gen_spec.grid = parse_grid(gen_grid);
      if (gen_invalid_fraction >= 0.0) gen_spec.invalid_fraction = gen_invalid_fraction;
      return cmd_gen(gen_spec, gen_out);
    }
    if (validate->parsed()) return cmd_validate(validate_path);
    if (tune->parsed()) return cmd_tune(tune_opt);
    if (bench->parsed()) return cmd_bench(bench_plan, bench_out, bench_jobs);
    if (report->parsed()) {
      return cmd_report(report_dir, report_mdf, report_extended, report_reference,
                        report_max_budget);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CacheError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
