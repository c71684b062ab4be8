#pragma once

// Experiment orchestration: data generation and splitting, the per-seed
// epoch loop wiring pacing, ordering and training together, aggregation
// across seeds, significance tests and report files.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "curriculum/corpus.hpp"
#include "curriculum/learner.hpp"
#include "curriculum/pacing.hpp"
#include "curriculum/scoring.hpp"
#include "curriculum/timecost.hpp"

namespace curriculum {

// A strategy as run in an experiment: the ordering rule plus whether the
// pacing schedule is applied. Labels read "WS-M" or "(Paced) WS-M".
struct StrategySpec {
  Strategy strategy;
  bool paced = false;

  std::string label() const;
};

// Accepts "WS-M", "(Paced) WS-M", "Paced WS-M", "paced:WS-M" and "Paced-WS-M".
StrategySpec parse_strategy_spec(std::string_view text);

struct ExperimentConfig {
  CorpusSpec corpus;
  // When set, the corpus is loaded from this file (a saved corpus .json; a
  // .csv manifest is accepted but carries no frames and cannot be trained).
  std::string corpus_path;
  std::optional<double> segment_max_seconds;
  std::vector<StrategySpec> strategies;
  PacingParams pacing;
  TrainConfig train;
  int teacher_epochs = 10;
  int n_seeds = 3;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  double alpha = 0.001;
  CostParams cost;

  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& config);

struct EpochRecord {
  int epoch = 0;
  double fraction = 1.0;
  std::size_t subset_size = 0;
  double subset_seconds = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_wer = 0.0;
  double valid_cer = 0.0;
  std::string plan_digest;
};

struct SeedRun {
  int seed_index = 0;
  bool complete = false;
  std::string diagnostic;
  double untrained_valid_wer = 0.0;
  std::vector<EpochRecord> epochs;
  double valid_wer = 0.0;
  double valid_cer = 0.0;
  double test_wer = 0.0;
  double test_cer = 0.0;
  // Word errors per test utterance, in test-set order.
  std::vector<long long> test_errors;
  double hours_seen = 0.0;
  WallCost cost;
  // Not serialized; available to in-process callers and tests.
  std::vector<EpochPlan> plans;
  // Ids of each epoch's active subset, in corpus order.
  std::vector<std::vector<std::string>> subset_ids;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

// Sample standard deviation (n - 1); zero for fewer than two values.
MeanStd mean_std(const std::vector<double>& values);

struct StrategyResult {
  StrategySpec spec;
  std::vector<SeedRun> seeds;
  std::vector<std::string> test_ids;
  double hours_seen_expected = 0.0;

  std::string label() const { return spec.label(); }
  std::vector<const SeedRun*> complete_seeds() const;
  MeanStd summary(double SeedRun::*field) const;
};

struct SignificanceVerdict {
  std::string system_a;
  std::string system_b;
  int seed_a = 0;
  int seed_b = 0;
  double z = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct RunReport {
  ExperimentConfig config;
  std::string config_hash;
  double train_hours = 0.0;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
  std::size_t n_test = 0;
  std::vector<StrategyResult> strategies;
  std::vector<SignificanceVerdict> significance;
};

// Per-seed MAPSSWE between two strategies run on the same test set: seed i
// of `a` against seed i of `b`.
std::vector<SignificanceVerdict> compare_strategies(const StrategyResult& a,
                                                    const StrategyResult& b,
                                                    double alpha);
// Every pair of seeds within one strategy.
std::vector<SignificanceVerdict> compare_seeds(const StrategyResult& result,
                                               double alpha);

// Loads or generates the corpus the config describes (before splitting).
Corpus prepare_corpus(const ExperimentConfig& config);

struct RunOptions {
  // When set, each run's per-epoch score tables are appended to
  // `<dir>/<label>_seed<k>.csv`.
  std::optional<std::filesystem::path> score_cache_dir;
  // Called after every finished epoch with (label, seed index, epoch).
  std::function<void(const std::string&, int, int)> progress;
};

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

// Writes results.csv, curves.csv, overhead.csv, hours_seen.csv,
// significance.csv, plans.csv, manifest.json and report.json into `dir`.
void emit_report(const RunReport& report, const std::filesystem::path& dir);

std::string plan_digest(const EpochPlan& plan);

}  // namespace curriculum
