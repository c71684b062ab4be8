#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "curriculum/error.hpp"
#include "curriculum/runner.hpp"
#include "helpers.hpp"

using namespace curriculum;
using namespace curriculum::testing;

namespace {

const char* const kReportFiles[] = {"results.csv",      "curves.csv",   "overhead.csv",
                                    "hours_seen.csv",   "significance.csv", "plans.csv",
                                    "manifest.json",    "report.json"};

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.corpus = small_spec(150);
  cfg.train.n_epochs = 3;
  cfg.train.learning_rate = 0.1;
  cfg.n_seeds = 2;
  cfg.teacher_epochs = 3;
  cfg.master_seed = 21;
  cfg.strategies = {parse_strategy_spec("Baseline"), parse_strategy_spec("WS-M")};
  return cfg;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

SeedRun run_with_errors(int seed, std::vector<long long> errors) {
  SeedRun r;
  r.seed_index = seed;
  r.complete = true;
  r.test_errors = std::move(errors);
  return r;
}

}  // namespace

TEST_CASE("strategy spec parsing") {
  CHECK(parse_strategy_spec("WS-M").label() == "WS-M");
  CHECK_FALSE(parse_strategy_spec("WS-M").paced);
  for (auto text : {"(Paced) WS-M", "paced WS-M", "paced:ws-m", "Paced-WS-M"}) {
    const auto s = parse_strategy_spec(text);
    CHECK(s.paced);
    CHECK(s.strategy.kind == StrategyKind::kWerScoreMixed);
    CHECK(s.label() == "(Paced) WS-M");
  }
  CHECK_THROWS_AS(parse_strategy_spec("paced:"), Error);
}

TEST_CASE("mean and sample stddev") {
  CHECK(mean_std({}).mean == 0.0);
  CHECK(mean_std({4.0}).stddev == 0.0);
  const auto m = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == 2.5);
  CHECK(m.stddev == doctest::Approx(1.2909944487));
}

TEST_CASE("config validation and json") {
  auto cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(config_hash(back) == config_hash(cfg));

  auto changed = cfg;
  changed.master_seed = 22;
  CHECK(config_hash(changed) != config_hash(cfg));

  auto bad = cfg;
  bad.n_seeds = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.valid_fraction = 0.6;
  bad.test_fraction = 0.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.strategies.clear();
  CHECK_THROWS_AS(bad.validate(), Error);

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"no_such_key", 1}}), Error);
  const auto defaults = config_from_json(nlohmann::json::object());
  CHECK(defaults.n_seeds == 3);
  CHECK(defaults.alpha == 0.001);
}

TEST_CASE("null training leaves the untrained WER") {
  auto cfg = tiny_config();
  cfg.n_seeds = 1;
  cfg.train.n_epochs = 1;
  cfg.train.learning_rate = 0.0;
  cfg.strategies = {parse_strategy_spec("Baseline")};
  const auto report = run_experiment(cfg);
  REQUIRE(report.strategies.size() == 1);
  const auto& run = report.strategies[0].seeds.at(0);
  CHECK(run.complete);
  CHECK(run.epochs.size() == 1);
  CHECK(run.valid_wer == run.untrained_valid_wer);
  CHECK(report.strategies[0].summary(&SeedRun::valid_wer).stddev == 0.0);
  CHECK(report.n_train + report.n_valid + report.n_test == 150);
}

TEST_CASE("experiment runs are well formed and replayable") {
  const auto cfg = tiny_config();
  const auto report = run_experiment(cfg);
  REQUIRE(report.strategies.size() == 2);
  for (const auto& s : report.strategies) {
    REQUIRE(s.seeds.size() == 2);
    for (const auto& run : s.seeds) {
      CHECK(run.complete);
      CHECK(run.epochs.size() == 3);
      CHECK(run.plans.size() == 3);
      CHECK(run.test_errors.size() == report.n_test);
      for (std::size_t e = 0; e < run.plans.size(); ++e) {
        std::multiset<std::string> plan(run.plans[e].ordered_ids.begin(),
                                        run.plans[e].ordered_ids.end());
        std::multiset<std::string> subset(run.subset_ids[e].begin(), run.subset_ids[e].end());
        CHECK(plan == subset);
      }
    }
  }
  const auto& ws = report.strategies[1].seeds[0];
  CHECK(ws.plans[0].ordered_ids != ws.plans[1].ordered_ids);

  const auto dir = scratch_dir("runner-replay");
  emit_report(report, dir / "a");
  emit_report(run_experiment(cfg), dir / "b");
  for (auto name : kReportFiles) {
    CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
  }
}

TEST_CASE("transfer strategies keep one order") {
  auto cfg = tiny_config();
  cfg.n_seeds = 1;
  cfg.strategies = {parse_strategy_spec("T-WS-M"), parse_strategy_spec("T-S2S-M")};
  const auto report = run_experiment(cfg);
  for (const auto& s : report.strategies) {
    const auto& run = s.seeds.at(0);
    REQUIRE(run.complete);
    for (const auto& p : run.plans) CHECK(p.ordered_ids == run.plans.front().ordered_ids);
  }
}

TEST_CASE("paced runs grow their subsets") {
  auto cfg = tiny_config();
  cfg.n_seeds = 1;
  cfg.train.n_epochs = 6;
  cfg.strategies = {parse_strategy_spec("(Paced) WS-M")};
  const auto report = run_experiment(cfg);
  const auto& run = report.strategies[0].seeds.at(0);
  REQUIRE(run.epochs.size() == 6);
  for (std::size_t e = 1; e < run.epochs.size(); ++e) {
    CHECK(run.epochs[e].subset_size >= run.epochs[e - 1].subset_size);
  }
  CHECK(run.epochs.back().subset_size == report.n_train);
  CHECK(run.epochs.front().subset_size < report.n_train);
  CHECK(run.cost.overhead_vs_baseline < 0.0);
}

TEST_CASE("module errors mark the seed incomplete") {
  auto cfg = tiny_config();
  cfg.n_seeds = 1;
  cfg.train.learning_rate = 1.7e308;
  cfg.strategies = {parse_strategy_spec("Baseline")};
  const auto report = run_experiment(cfg);
  const auto& run = report.strategies[0].seeds.at(0);
  CHECK_FALSE(run.complete);
  CHECK_FALSE(run.diagnostic.empty());
  const auto dir = scratch_dir("runner-incomplete");
  emit_report(report, dir);
  CHECK(slurp(dir / "manifest.json").find("incomplete_seeds") != std::string::npos);
  CHECK(slurp(dir / "manifest.json").find(run.diagnostic.substr(0, 10)) != std::string::npos);
}

TEST_CASE("strategy comparisons") {
  StrategyResult a;
  a.spec = parse_strategy_spec("WS-M");
  StrategyResult b;
  b.spec = parse_strategy_spec("Baseline");
  std::vector<long long> base;
  for (int i = 0; i < 40; ++i) {
    a.test_ids.push_back("t" + std::to_string(i));
    base.push_back(i % 4);
  }
  b.test_ids = a.test_ids;

  std::vector<long long> plus_one = base;
  for (auto& v : plus_one) v += 1;
  // A noisy extra error: +1 on most utterances, +2 on some.
  std::vector<long long> noisy = base;
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += 1 + (i % 5 == 0 ? 1 : 0);

  a.seeds = {run_with_errors(0, base), run_with_errors(1, plus_one), run_with_errors(2, noisy)};
  b.seeds = {run_with_errors(0, base), run_with_errors(1, base), run_with_errors(2, base)};

  const auto self = compare_strategies(b, b, 0.001);
  REQUIRE(self.size() == 3);
  for (const auto& v : self) {
    CHECK(v.p == 1.0);
    CHECK_FALSE(v.significant);
  }

  const auto ab = compare_strategies(a, b, 0.001);
  const auto ba = compare_strategies(b, a, 0.001);
  REQUIRE(ab.size() == 3);
  CHECK(ab[0].z == 0.0);
  CHECK(ab[1].significant);
  CHECK(ab[1].p < 0.001);
  CHECK(ab[2].significant);
  CHECK(ab[2].p < 0.001);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ab[i].z == -ba[i].z);
    CHECK(ab[i].p == ba[i].p);
  }

  auto c = b;
  c.test_ids.back() = "other";
  CHECK_THROWS_AS(compare_strategies(a, c, 0.001), Error);

  const auto within = compare_seeds(a, 0.001);
  CHECK(within.size() == 3);
}

TEST_CASE("report emission") {
  const auto dir = scratch_dir("emit");

  SUBCASE("empty report gives header-only csvs") {
    RunReport empty;
    empty.config = tiny_config();
    emit_report(empty, dir);
    for (auto name : {"results.csv", "curves.csv", "overhead.csv", "hours_seen.csv",
                      "significance.csv", "plans.csv"}) {
      CHECK_MESSAGE(line_count(slurp(dir / name)) == 1, name);
    }
    CHECK(std::filesystem::exists(dir / "manifest.json"));
  }

  SUBCASE("curves have one row per seed and epoch") {
    auto cfg = tiny_config();
    cfg.n_seeds = 3;
    cfg.train.n_epochs = 5;
    cfg.strategies = {parse_strategy_spec("RS")};
    const auto report = run_experiment(cfg);
    emit_report(report, dir / "a");
    CHECK(line_count(slurp(dir / "a" / "curves.csv")) == 1 + 15);
    CHECK(line_count(slurp(dir / "a" / "results.csv")) == 2);

    emit_report(report, dir / "b");
    const auto reloaded = report_from_json(
        nlohmann::json::parse(slurp(dir / "a" / "report.json")));
    emit_report(reloaded, dir / "c");
    for (auto name : kReportFiles) {
      CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
      CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "c" / name), name);
    }
  }

  SUBCASE("unwritable directory") {
    write_file(dir / "file", "x");
    CHECK_THROWS_AS(emit_report(RunReport{}, dir / "file" / "sub"), Error);
  }
}
