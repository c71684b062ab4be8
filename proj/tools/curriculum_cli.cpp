// Command-line front end: data generation, training runs, pacing previews,
// cost tables, significance comparison and report re-emission.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "curriculum/corpus.hpp"
#include "curriculum/error.hpp"
#include "curriculum/metrics.hpp"
#include "curriculum/pacing.hpp"
#include "curriculum/runner.hpp"
#include "curriculum/timecost.hpp"

using namespace curriculum;
using nlohmann::json;

namespace {

void print_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

// `id<TAB>tokens` lines; tokens are whitespace separated.
std::map<std::string, std::vector<std::string>> read_transcripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string id = line.substr(0, tab);
    std::vector<std::string> tokens;
    if (tab != std::string::npos) {
      std::istringstream words(line.substr(tab + 1));
      std::string w;
      while (words >> w) tokens.push_back(w);
    }
    if (!out.emplace(id, std::move(tokens)).second) {
      throw Error(ErrorKind::kParse, fmt::format("{} line {}: duplicate id '{}'", path, row, id));
    }
  }
  return out;
}

int cmd_compare(const std::string& ref_path, const std::string& hyp_a_path,
                const std::string& hyp_b_path, double alpha) {
  const auto refs = read_transcripts(ref_path);
  const auto hyp_a = read_transcripts(hyp_a_path);
  const auto hyp_b = read_transcripts(hyp_b_path);
  // Interning token strings lets the integer edit distance do the work.
  std::map<std::string, TokenId> vocab;
  auto intern = [&vocab](const std::vector<std::string>& words) {
    std::vector<TokenId> ids;
    for (const auto& w : words) {
      ids.push_back(vocab.try_emplace(w, static_cast<TokenId>(vocab.size())).first->second);
    }
    return ids;
  };

  PairedErrorSample sample;
  AlignmentCounts total_a, total_b;
  json rows = json::array();
  for (const auto& [id, ref_words] : refs) {
    const auto a = hyp_a.find(id);
    const auto b = hyp_b.find(id);
    if (a == hyp_a.end() || b == hyp_b.end()) {
      throw Error(ErrorKind::kValidation, "utterance '" + id + "' missing from a hypothesis file");
    }
    const auto ref = intern(ref_words);
    const auto ca = edit_distance(std::span<const TokenId>(ref),
                                  std::span<const TokenId>(intern(a->second)));
    const auto cb = edit_distance(std::span<const TokenId>(ref),
                                  std::span<const TokenId>(intern(b->second)));
    total_a += ca;
    total_b += cb;
    sample.errors_a.push_back(static_cast<long long>(ca.distance()));
    sample.errors_b.push_back(static_cast<long long>(cb.distance()));
    rows.push_back({{"id", id},
                    {"ref_len", ca.ref_len},
                    {"errors_a", ca.distance()},
                    {"errors_b", cb.distance()}});
  }
  const auto r = mapsswe(sample);
  auto z = std::isinf(r.z) ? json(r.z > 0 ? "inf" : "-inf") : json(r.z);
  json out{{"utterances", rows},
           {"wer_a", error_rate(total_a)},
           {"wer_b", error_rate(total_b)},
           {"mean_difference", r.mean_difference},
           {"z", z},
           {"p", r.p_two_sided},
           {"alpha", alpha},
           {"significant", r.p_two_sided < alpha}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

std::vector<StrategySpec> parse_strategy_list(const std::vector<std::string>& names,
                                              double mixing) {
  std::vector<StrategySpec> out;
  for (const auto& n : names) {
    auto spec = parse_strategy_spec(n);
    spec.strategy.mixing_fraction = mixing;
    out.push_back(spec);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum scheduling engine and experiment harness"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  CorpusSpec spec;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "corpus.json";
  std::string gen_manifest;
  double gen_segment = 0.0;
  gen->add_option("--utterances", spec.n_utterances, "Number of utterances")->capture_default_str();
  gen->add_option("--vocab", spec.vocab_size, "Vocabulary size")->capture_default_str();
  gen->add_option("--dim", spec.feature_dim, "Feature dimension")->capture_default_str();
  gen->add_option("--min-tokens", spec.min_tokens)->capture_default_str();
  gen->add_option("--max-tokens", spec.max_tokens)->capture_default_str();
  gen->add_option("--min-noise", spec.min_noise_sigma)->capture_default_str();
  gen->add_option("--max-noise", spec.max_noise_sigma)->capture_default_str();
  gen->add_option("--frame-seconds", spec.frame_seconds)->capture_default_str();
  gen->add_option("--prototype-scale", spec.prototype_scale)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--segment", gen_segment, "Cut utterances into chunks of at most this many seconds");
  gen->add_option("--out", gen_out, "Corpus JSON output")->capture_default_str();
  gen->add_option("--manifest", gen_manifest, "Also write an id,duration_s,transcript manifest");

  // train
  auto* train = app.add_subcommand("train", "Run a curriculum experiment and write its report");
  std::string train_config;
  std::vector<std::string> train_strategies;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_epochs;
  std::optional<int> train_seeds;
  std::string train_out;
  bool no_score_cache = false;
  bool quiet = false;
  train->add_option("--config", train_config, "Experiment config (JSON)");
  train->add_option("--strategy", train_strategies, "Strategy to run (repeatable), e.g. WS-M or \"(Paced) WS-M\"");
  train->add_option("--seed", train_seed, "Master seed");
  train->add_option("--epochs", train_epochs, "Training epochs");
  train->add_option("--seeds", train_seeds, "Number of seeds per strategy");
  train->add_option("--out", train_out, "Output directory");
  train->add_flag("--no-score-cache", no_score_cache, "Skip writing per-epoch score caches");
  train->add_flag("--quiet", quiet, "No progress output");

  // pacing-preview
  auto* pace = app.add_subcommand("pacing-preview", "Print the pacing schedule as CSV");
  PacingParams pacing;
  int pace_epochs = 15;
  double pace_hours = 1382.0;
  pace->add_option("--epochs", pace_epochs)->capture_default_str();
  pace->add_option("--p0", pacing.p0)->capture_default_str();
  pace->add_option("--delta", pacing.delta)->capture_default_str();
  pace->add_option("--step", pacing.step)->capture_default_str();
  pace->add_option("--refresh", pacing.refresh_interval, "Refresh interval M")->capture_default_str();
  pace->add_option("--hours", pace_hours, "Hours in the full training set")->capture_default_str();

  // timecost
  auto* cost = app.add_subcommand("timecost", "Training-time overhead per strategy as CSV");
  std::string cost_config;
  std::string cost_corpus;
  std::vector<std::string> cost_strategies{"RS", "WS-M", "T-WS-M", "T-S2S-M",
                                           "(Paced) WS-M", "(Paced) T-WS-M"};
  std::optional<int> cost_epochs;
  std::optional<std::size_t> cost_batch;
  std::uint64_t cost_seed = 1;
  cost->add_option("--config", cost_config, "Experiment config supplying corpus, pacing and cost parameters");
  cost->add_option("--corpus", cost_corpus, "Corpus JSON or manifest CSV");
  cost->add_option("--strategy", cost_strategies, "Strategies (repeatable)")->capture_default_str();
  cost->add_option("--epochs", cost_epochs);
  cost->add_option("--batch", cost_batch, "Batch size");
  cost->add_option("--seed", cost_seed)->capture_default_str();

  // compare
  auto* cmp = app.add_subcommand("compare", "Matched-pairs significance test between two hypothesis files");
  std::string ref_path, hyp_a_path, hyp_b_path;
  double alpha = 0.001;
  cmp->add_option("--ref", ref_path, "Reference transcripts (id<TAB>tokens)")->required();
  cmp->add_option("--hyp-a", hyp_a_path, "System A hypotheses")->required();
  cmp->add_option("--hyp-b", hyp_b_path, "System B hypotheses")->required();
  cmp->add_option("--alpha", alpha)->capture_default_str();

  // report
  auto* rep = app.add_subcommand("report", "Re-emit report files from a saved report.json");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "report.json written by train")->required();
  rep->add_option("--out", rep_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      Corpus corpus = generate_corpus(spec, gen_seed);
      if (gen_segment > 0.0) corpus = segment_corpus(corpus, gen_segment);
      save_corpus(corpus, gen_out);
      if (!gen_manifest.empty()) save_manifest(corpus, gen_manifest);
      std::cerr << fmt::format("wrote {} utterances ({:.2f} h) to {}\n", corpus.size(),
                               corpus.total_seconds() / 3600.0, gen_out);
      return 0;
    }

    if (*train) {
      ExperimentConfig config;
      if (!train_config.empty()) {
        config = load_config(train_config);
      } else {
        config = config_from_json(json::object());
      }
      if (!train_strategies.empty()) {
        const double mixing = config.strategies.empty()
                                  ? 0.2
                                  : config.strategies.front().strategy.mixing_fraction;
        config.strategies = parse_strategy_list(train_strategies, mixing);
      }
      if (train_seed) config.master_seed = *train_seed;
      if (train_epochs) config.train.n_epochs = *train_epochs;
      if (train_seeds) config.n_seeds = *train_seeds;
      if (!train_out.empty()) config.output_dir = train_out;

      RunOptions options;
      if (!no_score_cache) {
        options.score_cache_dir = std::filesystem::path(config.output_dir) / "scores";
      }
      if (!quiet) {
        options.progress = [&config](const std::string& label, int seed, int epoch) {
          if (epoch == config.train.n_epochs) {
            std::cerr << fmt::format("{} seed {} done\n", label, seed);
          }
        };
      }
      const auto report = run_experiment(config, options);
      emit_report(report, config.output_dir);
      std::cout << fmt::format("{:<16} {:>6} {:>10} {:>10} {:>10} {:>10}\n", "strategy",
                               "seeds", "valid_wer", "test_wer", "hours", "overhead");
      for (const auto& s : report.strategies) {
        std::vector<double> overhead;
        for (const auto* r : s.complete_seeds()) overhead.push_back(r->cost.overhead_vs_baseline);
        std::cout << fmt::format("{:<16} {:>6} {:>10.4f} {:>10.4f} {:>10.3f} {:>9.1f}%\n",
                                 s.label(), s.complete_seeds().size(),
                                 s.summary(&SeedRun::valid_wer).mean,
                                 s.summary(&SeedRun::test_wer).mean,
                                 s.summary(&SeedRun::hours_seen).mean,
                                 100.0 * mean_std(overhead).mean);
        for (const auto& r : s.seeds) {
          if (!r.complete) std::cerr << s.label() << " seed " << r.seed_index << ": " << r.diagnostic << '\n';
        }
      }
      return 0;
    }

    if (*pace) {
      const auto schedule = build_schedule(pace_epochs, pacing);
      std::cout << "epoch,fraction,refresh,expected_hours\n";
      for (const auto& e : schedule.entries) {
        std::cout << fmt::format("{},{:.6f},{},{:.3f}\n", e.epoch, e.fraction,
                                 e.refresh ? 1 : 0, e.fraction * pace_hours);
      }
      return 0;
    }

    if (*cost) {
      ExperimentConfig config = cost_config.empty() ? config_from_json(json::object())
                                                    : load_config(cost_config);
      if (!cost_corpus.empty()) config.corpus_path = cost_corpus;
      if (cost_epochs) config.train.n_epochs = *cost_epochs;
      if (cost_batch) config.cost.batch_size = *cost_batch;
      const Corpus corpus = prepare_corpus(config);
      std::cout << "strategy,overhead_pct\n";
      for (const auto& s : parse_strategy_list(cost_strategies, 0.2)) {
        PacingParams p = config.pacing;
        p.enabled = s.paced;
        const auto schedule = build_schedule(config.train.n_epochs, p);
        const auto wc = wall_cost(s.strategy, schedule, corpus, config.cost, cost_seed);
        std::cout << fmt::format("{},{:.2f}\n", s.label(), 100.0 * wc.overhead_vs_baseline);
      }
      return 0;
    }

    if (*cmp) return cmd_compare(ref_path, hyp_a_path, hyp_b_path, alpha);

    if (*rep) {
      std::ifstream in(rep_in);
      if (!in) throw Error(ErrorKind::kIo, "cannot open " + rep_in);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kParse, rep_in + ": " + e.what());
      }
      emit_report(report_from_json(doc), rep_out);
      return 0;
    }
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 3;
  }
  return 0;
}
