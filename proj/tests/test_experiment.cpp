#include "gridtune/experiment.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace gridtune;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("gridtune_exp_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

nlohmann::json small_plan_json() {
  return nlohmann::json{
      {"base_seed", 7},
      {"budget", 50},
      {"n_init", 10},
      {"checkpoint_step", 10},
      {"repetitions", 3},
      {"random_repetitions", 4},
      {"spaces",
       {{{"generator",
          {{"function", "random-rough"}, {"grid", {9, 9}}, {"seed", 2}, {"invalid_fraction", 0.1}}}}}},
      {"strategies", {"bo-ei", "random"}},
  };
}

TEST(ExperimentPlan, ParsesDefaultsAndOverrides) {
  nlohmann::json doc = small_plan_json();
  doc["strategies"] = nlohmann::json::array();
  doc["strategies"].push_back("bo-advanced-multi");
  doc["strategies"].push_back({{"id", "bo-ei"},
                               {"name", "ei-tuned"},
                               {"lengthscale", 2.5},
                               {"nu", "5/2"},
                               {"exploration", "constant"},
                               {"lambda", 0.05},
                               {"repetitions", 2}});
  const ExperimentPlan plan = ExperimentPlan::from_json(doc);
  ASSERT_EQ(plan.strategies.size(), 2u);
  EXPECT_EQ(plan.strategies[0].name, "bo-advanced-multi");
  EXPECT_EQ(plan.strategies[0].config.budget, 50u);  // plan-level default applied
  EXPECT_EQ(plan.strategies[1].name, "ei-tuned");
  EXPECT_EQ(plan.strategies[1].config.nu, MaternNu::five_halves);
  EXPECT_EQ(plan.strategies[1].config.lengthscale, 2.5);
  EXPECT_EQ(plan.strategies[1].config.exploration.mode, ExplorationConfig::Mode::constant);
  EXPECT_EQ(plan.repetitions_for(plan.strategies[1]), 2u);
  EXPECT_EQ(plan.repetitions_for(plan.strategies[0]), 3u);
}

TEST(ExperimentPlan, RandomGetsItsOwnRepetitionDefault) {
  const ExperimentPlan plan = ExperimentPlan::from_json(small_plan_json());
  EXPECT_EQ(plan.repetitions_for(plan.strategies[0]), 3u);
  EXPECT_EQ(plan.repetitions_for(plan.strategies[1]), 4u);  // random default
}

TEST(ExperimentPlan, UnknownKeysRejectedEverywhere) {
  nlohmann::json doc = small_plan_json();
  doc["frobnicate"] = 1;
  EXPECT_THROW(ExperimentPlan::from_json(doc), ConfigError);

  doc = small_plan_json();
  doc["strategies"] = nlohmann::json::array({nlohmann::json{{"id", "bo-ei"}, {"lenthscale", 2.0}}});
  EXPECT_THROW(ExperimentPlan::from_json(doc), ConfigError);

  doc = small_plan_json();
  doc["spaces"][0]["surprise"] = true;
  EXPECT_THROW(ExperimentPlan::from_json(doc), ConfigError);

  doc = small_plan_json();
  doc["spaces"][0]["generator"]["gird"] = {3, 3};
  EXPECT_THROW(ExperimentPlan::from_json(doc), ConfigError);

  doc = small_plan_json();
  doc["strategies"] = nlohmann::json::array({"warp-drive"});
  EXPECT_THROW(ExperimentPlan::from_json(doc), ConfigError);

  doc = small_plan_json();
  doc["strategies"] = nlohmann::json::array({"bo-ei", "bo-ei"});
  EXPECT_THROW(ExperimentPlan::from_json(doc), ConfigError);  // duplicate names
}

TEST(ExperimentPlan, SeedsAreDeterministicAndDistinct) {
  const ExperimentPlan plan = ExperimentPlan::from_json(small_plan_json());
  const std::uint64_t s1 = plan.seed_for("bo-ei", "space", 0);
  EXPECT_EQ(s1, plan.seed_for("bo-ei", "space", 0));
  std::set<std::uint64_t> seeds;
  for (std::size_t rep = 0; rep < 50; ++rep) seeds.insert(plan.seed_for("bo-ei", "space", rep));
  for (std::size_t rep = 0; rep < 50; ++rep) seeds.insert(plan.seed_for("random", "space", rep));
  EXPECT_EQ(seeds.size(), 100u);
}

TEST(RunExperiment, ProducesTracesAndAggregates) {
  const ExperimentPlan plan = ExperimentPlan::from_json(small_plan_json());
  const ExperimentResult result = run_experiment(plan, 2);
  EXPECT_EQ(result.outcomes.size(), 3u + 4u);
  for (const RunOutcome& o : result.outcomes) {
    ASSERT_TRUE(o.run.has_value()) << o.error;
    EXPECT_EQ(o.run->evaluations, 50u);
  }
  ASSERT_EQ(result.stats.size(), 2u);
  EXPECT_EQ(result.stats[0].maes.size(), 3u);
  EXPECT_EQ(result.stats[1].maes.size(), 4u);
  ASSERT_EQ(result.mdf.size(), 2u);
  // factors on a single space average to 1
  EXPECT_NEAR(result.mdf[0].mdf + result.mdf[1].mdf, 2.0, 1e-12);

  TempDir dir;
  write_reports(result, dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "mdf.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "series.csv"));
  std::size_t traces = 0;
  for (const auto& entry : fs::directory_iterator(dir.path() / "traces")) {
    ++traces;
    (void)entry;
  }
  EXPECT_EQ(traces, 7u);
}

TEST(RunExperiment, ByteIdenticalReportsAcrossRunsAndThreadCounts) {
  const ExperimentPlan plan = ExperimentPlan::from_json(small_plan_json());
  TempDir d1, d2, d3;
  write_reports(run_experiment(plan, 2), d1.path());
  write_reports(run_experiment(plan, 2), d2.path());
  write_reports(run_experiment(plan, 1), d3.path());
  for (const char* name : {"manifest.json", "metrics.csv", "mdf.csv", "series.csv"}) {
    EXPECT_EQ(slurp(d1.path() / name), slurp(d2.path() / name)) << name;
    EXPECT_EQ(slurp(d1.path() / name), slurp(d3.path() / name)) << name;
  }
  for (const auto& entry : fs::directory_iterator(d1.path() / "traces")) {
    const fs::path rel = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(d2.path() / "traces" / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(d3.path() / "traces" / rel)) << rel;
  }
}

TEST(RunExperiment, FailuresAreRecordedNotDropped) {
  nlohmann::json doc = small_plan_json();
  doc["n_init"] = 100;  // exceeds the 81-config space: every BO run fails
  const ExperimentPlan plan = ExperimentPlan::from_json(doc);
  const ExperimentResult result = run_experiment(plan, 2);
  std::size_t failed = 0;
  for (const RunOutcome& o : result.outcomes) {
    if (!o.run) {
      ++failed;
      EXPECT_FALSE(o.error.empty());
    }
  }
  EXPECT_EQ(failed, 3u);  // the bo-ei repetitions
  EXPECT_EQ(result.stats[0].failures, 3u);
  EXPECT_TRUE(result.stats[0].maes.empty());
  EXPECT_TRUE(result.mdf.empty());  // incomplete table: no MDF

  TempDir dir;
  write_reports(result, dir.path());
  const std::string failures = slurp(dir.path() / "failures.csv");
  EXPECT_NE(failures.find("bo-ei"), std::string::npos);
}

TEST(TraceCsv, RoundTrip) {
  const ExperimentPlan plan = ExperimentPlan::from_json(small_plan_json());
  const ExperimentResult result = run_experiment(plan, 1);
  const TuningRun& original = *result.outcomes[0].run;

  TempDir dir;
  const fs::path p = dir.path() / "trace.csv";
  write_trace_csv(p, original, *result.spaces[0].space);
  const TuningRun loaded = read_trace_csv(p);
  ASSERT_EQ(loaded.records.size(), original.records.size());
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    EXPECT_EQ(loaded.records[i].config_index, original.records[i].config_index);
    EXPECT_EQ(loaded.records[i].value, original.records[i].value);
    EXPECT_EQ(loaded.records[i].best_so_far, original.records[i].best_so_far);
  }
  EXPECT_EQ(loaded.best_value, original.best_value);
  EXPECT_EQ(loaded.invalid_count, original.invalid_count);
}

TEST(StrategyOverrides, RejectUnknownAndBadValues) {
  StrategyConfig config;
  EXPECT_THROW(apply_strategy_override(config, "warp", 1.0), ConfigError);
  EXPECT_THROW(apply_strategy_override(config, "nu", "7/2"), ConfigError);
  EXPECT_THROW(apply_strategy_override(config, "budget", "soon"), ConfigError);
  apply_strategy_override(config, "nu", "5/2");
  EXPECT_EQ(config.nu, MaternNu::five_halves);
  apply_strategy_override(config, "discount", 0.8);
  EXPECT_EQ(config.discount, 0.8);
}

}  // namespace
