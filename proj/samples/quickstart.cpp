// Minimal library walkthrough: generate a small constrained space, tune it
// with the default strategy, print the result.

#include <iostream>

#include "gridtune/strategies.hpp"
#include "gridtune/synthetic.hpp"

int main() {
  using namespace gridtune;

  SyntheticSpec spec;
  spec.function = "rosenbrock-disc";
  spec.grid = {40, 40};
  spec.seed = 7;
  const MeasurementCache cache = generate_synthetic(spec);

  const EnumeratedSpace space(cache.space());
  std::cout << cache.kernel_name << ": " << space.size() << " configurations, "
            << cache.invalid_count() << " runtime-invalid, true minimum "
            << *cache.true_minimum << "\n";

  StrategyConfig config;
  config.id = StrategyId::bo_advanced_multi;
  config.budget = 120;
  config.n_init = 20;
  config.seed = 1;

  const TuningRun run = run_strategy(space, cache.objective(), config);
  std::cout << "best found " << run.best_value << " after " << run.evaluations
            << " evaluations (" << run.invalid_count << " invalid)\n";
  return 0;
}
