#include "curriculum/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "curriculum/error.hpp"
#include "curriculum/metrics.hpp"
#include "curriculum/rng.hpp"

namespace curriculum {

std::string StrategySpec::label() const {
  const auto name = std::string(to_string(strategy.kind));
  return paced ? "(Paced) " + name : name;
}

StrategySpec parse_strategy_spec(std::string_view text) {
  auto lowered = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  StrategySpec spec;
  std::string_view rest = text;
  for (std::string_view prefix : {"(paced) ", "paced ", "paced:", "paced-"}) {
    if (rest.size() > prefix.size() && lowered(rest.substr(0, prefix.size())) == prefix) {
      spec.paced = true;
      rest.remove_prefix(prefix.size());
      break;
    }
  }
  spec.strategy.kind = parse_strategy_kind(rest);
  return spec;
}

void ExperimentConfig::validate() const {
  if (corpus_path.empty()) corpus.validate();
  if (strategies.empty()) {
    throw Error(ErrorKind::kValidation, "experiment needs at least one strategy");
  }
  for (const auto& s : strategies) s.strategy.validate();
  if (std::any_of(strategies.begin(), strategies.end(),
                  [](const StrategySpec& s) { return s.paced; })) {
    pacing.validate();
  }
  train.validate();
  if (n_seeds < 1) throw Error(ErrorKind::kValidation, "n_seeds must be >= 1");
  if (teacher_epochs < 1) throw Error(ErrorKind::kValidation, "teacher_epochs must be >= 1");
  if (!(valid_fraction > 0.0) || !(test_fraction > 0.0) ||
      !(valid_fraction + test_fraction < 1.0)) {
    throw Error(ErrorKind::kValidation,
                "valid and test fractions must be positive and sum to less than 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kValidation, "alpha must lie in (0, 1)");
  }
  if (segment_max_seconds && !(*segment_max_seconds > 0.0)) {
    throw Error(ErrorKind::kValidation, "segment_max_seconds must be positive");
  }
  cost.validate();
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

std::vector<const SeedRun*> StrategyResult::complete_seeds() const {
  std::vector<const SeedRun*> out;
  for (const auto& s : seeds) {
    if (s.complete) out.push_back(&s);
  }
  return out;
}

MeanStd StrategyResult::summary(double SeedRun::*field) const {
  std::vector<double> values;
  for (const auto* s : complete_seeds()) values.push_back(s->*field);
  return mean_std(values);
}

namespace {

SignificanceVerdict verdict(const StrategyResult& a, const SeedRun& run_a,
                            const StrategyResult& b, const SeedRun& run_b,
                            double alpha) {
  if (a.test_ids != b.test_ids || run_a.test_errors.size() != a.test_ids.size() ||
      run_b.test_errors.size() != b.test_ids.size()) {
    throw Error(ErrorKind::kValidation,
                fmt::format("{} and {} were not scored on the same test set", a.label(),
                            b.label()));
  }
  const auto r = mapsswe(PairedErrorSample{run_a.test_errors, run_b.test_errors});
  return SignificanceVerdict{a.label(), b.label(), run_a.seed_index, run_b.seed_index,
                             r.z, r.p_two_sided, r.p_two_sided < alpha};
}

}  // namespace

std::vector<SignificanceVerdict> compare_strategies(const StrategyResult& a,
                                                    const StrategyResult& b,
                                                    double alpha) {
  if (a.test_ids != b.test_ids) {
    throw Error(ErrorKind::kValidation,
                fmt::format("{} and {} were not scored on the same test set", a.label(),
                            b.label()));
  }
  std::vector<SignificanceVerdict> out;
  for (const auto& run_a : a.seeds) {
    if (!run_a.complete) continue;
    for (const auto& run_b : b.seeds) {
      if (run_b.complete && run_b.seed_index == run_a.seed_index) {
        out.push_back(verdict(a, run_a, b, run_b, alpha));
      }
    }
  }
  return out;
}

std::vector<SignificanceVerdict> compare_seeds(const StrategyResult& result,
                                               double alpha) {
  std::vector<SignificanceVerdict> out;
  const auto runs = result.complete_seeds();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      out.push_back(verdict(result, *runs[i], result, *runs[j], alpha));
    }
  }
  return out;
}

Corpus prepare_corpus(const ExperimentConfig& config) {
  Corpus corpus;
  if (config.corpus_path.empty()) {
    corpus = generate_corpus(config.corpus, derive_seed(config.master_seed, "corpus"));
  } else {
    const std::filesystem::path path(config.corpus_path);
    corpus = path.extension() == ".csv" ? load_manifest(path) : load_corpus(path);
  }
  if (config.segment_max_seconds) {
    corpus = segment_corpus(corpus, *config.segment_max_seconds);
  }
  return corpus;
}

namespace {

std::string file_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      out += c;
    } else if (c == ' ' && !out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  return out;
}

struct SharedData {
  Corpus train;
  Corpus valid;
  Corpus test;
  std::optional<ScoreTable> teacher_wer;
  std::optional<ScoreTable> teacher_loss;
};

void run_seed(const ExperimentConfig& config, const SharedData& data,
              const StrategySpec& spec, SeedRun& run, const RunOptions& options) {
  const auto s = static_cast<std::uint64_t>(run.seed_index);
  const std::uint64_t order_seed = derive_seed(config.master_seed, s, "order");
  const std::uint64_t subset_seed = derive_seed(config.master_seed, s, "subset");
  const StrategyKind kind = spec.strategy.kind;

  PacingParams pacing = config.pacing;
  pacing.enabled = spec.paced;
  const auto schedule = build_schedule(config.train.n_epochs, pacing);

  ToyModel model = ToyModel::random(data.train.vocab_size, data.train.feature_dim,
                                    config.train.init_scale,
                                    derive_seed(config.master_seed, s, "init"));
  run.untrained_valid_wer = evaluate(model, data.valid).wer;

  const ScoreTable* static_scores = nullptr;
  if (kind == StrategyKind::kTransferWerMixed) static_scores = &*data.teacher_wer;
  if (kind == StrategyKind::kTransferLossMixed) static_scores = &*data.teacher_loss;

  // Latest student score per utterance; each epoch's feedback overwrites the
  // entries it measured.
  ScoreTable feedback;
  feedback.strategy_kind = kind;
  const Collect collect = is_adaptive(kind) && is_metric_based(kind)
                              ? Collect::kLossAndMetric
                              : Collect::kLossOnly;

  std::optional<std::filesystem::path> cache_file;
  if (options.score_cache_dir) {
    std::filesystem::create_directories(*options.score_cache_dir);
    cache_file = *options.score_cache_dir /
                 fmt::format("{}_seed{}.csv", file_label(spec.label()), run.seed_index);
    std::filesystem::remove(*cache_file);
  }

  RecordView subset;
  double seconds_seen = 0.0;
  for (const auto& entry : schedule.entries) {
    if (entry.refresh || subset.empty()) {
      subset = sample_subset_records(
          data.train, entry.fraction,
          derive_seed(subset_seed, static_cast<std::uint64_t>(entry.epoch), "subset"));
    }
    const ScoreTable* scores = nullptr;
    if (is_transfer(kind)) {
      scores = static_scores;
    } else if (is_adaptive(kind) && entry.epoch > 1) {
      scores = &feedback;
    }
    EpochPlan plan = epoch_order(spec.strategy, subset, scores, entry.epoch, order_seed);
    if (!is_permutation_of(plan, subset)) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("epoch {} plan is not a permutation of its subset",
                              entry.epoch));
    }

    auto outcome = train_epoch(model, plan, data.train, config.train, collect);
    model = std::move(outcome.model);
    outcome.scores.strategy_kind = kind;
    for (auto& [id, e] : outcome.scores.entries) feedback.entries.insert_or_assign(id, e);
    feedback.epoch = entry.epoch;
    if (cache_file) append_score_cache(outcome.scores, *cache_file);

    const auto valid = evaluate(model, data.valid);
    EpochRecord rec;
    rec.epoch = entry.epoch;
    rec.fraction = entry.fraction;
    rec.subset_size = subset.size();
    for (const auto* r : subset) rec.subset_seconds += r->duration_s;
    rec.train_loss = outcome.mean_loss;
    rec.valid_loss = valid.mean_loss;
    rec.valid_wer = valid.wer;
    rec.valid_cer = valid.cer;
    rec.plan_digest = plan_digest(plan);
    seconds_seen += rec.subset_seconds;
    run.epochs.push_back(std::move(rec));

    std::vector<std::string> ids;
    ids.reserve(subset.size());
    for (const auto* r : subset) ids.push_back(r->id);
    run.subset_ids.push_back(std::move(ids));
    run.plans.push_back(std::move(plan));

    if (options.progress) options.progress(spec.label(), run.seed_index, entry.epoch);
  }

  const auto valid = evaluate(model, data.valid);
  const auto test = evaluate(model, data.test);
  run.valid_wer = valid.wer;
  run.valid_cer = valid.cer;
  run.test_wer = test.wer;
  run.test_cer = test.cer;
  run.test_errors.clear();
  for (const auto& fb : test.examples) {
    run.test_errors.push_back(static_cast<long long>(fb.word_counts.distance()));
  }
  run.hours_seen = seconds_seen / 3600.0;
  run.cost = wall_cost_from_plans(kind, run.plans, data.train, config.cost);
  run.complete = true;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  RunReport report;
  report.config = config;
  report.config_hash = config_hash(config);

  const Corpus corpus = prepare_corpus(config);
  if (!corpus.has_frames()) {
    throw Error(ErrorKind::kUnsupported,
                "training needs feature frames; manifest corpora are metadata-only");
  }
  auto split = split_corpus(corpus, config.valid_fraction, config.test_fraction,
                            derive_seed(config.master_seed, "split"));
  if (split.train.empty() || split.valid.empty() || split.test.size() < 2) {
    throw Error(ErrorKind::kValidation, "corpus too small for the requested split");
  }
  SharedData data{std::move(split.train), std::move(split.valid), std::move(split.test),
                  std::nullopt, std::nullopt};
  report.n_train = data.train.size();
  report.n_valid = data.valid.size();
  report.n_test = data.test.size();
  report.train_hours = data.train.total_seconds() / 3600.0;

  const bool needs_teacher =
      std::any_of(config.strategies.begin(), config.strategies.end(),
                  [](const StrategySpec& s) { return is_transfer(s.strategy.kind); });
  if (needs_teacher) {
    TrainConfig teacher_config = config.train;
    teacher_config.n_epochs = config.teacher_epochs;
    teacher_config.seed = derive_seed(config.master_seed, "teacher");
    const ToyModel teacher = train_teacher(data.train, teacher_config);
    data.teacher_wer = transfer_scores(teacher, data.train, TransferKind::kWer);
    data.teacher_loss = transfer_scores(teacher, data.train, TransferKind::kLoss);
  }

  std::vector<std::string> test_ids;
  for (const auto& r : data.test.records) test_ids.push_back(r.id);

  for (const auto& spec : config.strategies) {
    StrategyResult result;
    result.spec = spec;
    result.test_ids = test_ids;
    PacingParams pacing = config.pacing;
    pacing.enabled = spec.paced;
    result.hours_seen_expected =
        hours_seen(build_schedule(config.train.n_epochs, pacing), report.train_hours);
    for (int s = 0; s < config.n_seeds; ++s) {
      SeedRun run;
      run.seed_index = s;
      try {
        run_seed(config, data, spec, run, options);
      } catch (const Error& e) {
        run.complete = false;
        run.diagnostic = fmt::format("{} error: {}", to_string(e.kind()), e.what());
      }
      result.seeds.push_back(std::move(run));
    }
    report.strategies.push_back(std::move(result));
  }

  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    for (const auto& v : compare_seeds(report.strategies[i], config.alpha)) {
      report.significance.push_back(v);
    }
  }
  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < report.strategies.size(); ++j) {
      for (const auto& v : compare_strategies(report.strategies[i],
                                              report.strategies[j], config.alpha)) {
        report.significance.push_back(v);
      }
    }
  }
  return report;
}

std::string plan_digest(const EpochPlan& plan) {
  std::string joined;
  for (const auto& id : plan.ordered_ids) {
    joined += id;
    joined += '\n';
  }
  return fmt::format("{:016x}", fingerprint64(joined));
}

}  // namespace curriculum
