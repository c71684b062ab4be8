#pragma once

// Difficulty scores, the easy-to-hard ordering rule, uniform mixing, and the
// per-strategy epoch ordering.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curriculum/corpus.hpp"

namespace curriculum {

struct ToyModel;

enum class StrategyKind {
  kDurationBaseline,   // Baseline
  kRandomShuffle,      // RS
  kSeq2SeqLoss,        // S2S
  kWerScore,           // WS
  kWerScoreMixed,      // WS-M
  kSeq2SeqLossMixed,   // S2S-M
  kTransferWerMixed,   // T-WS-M
  kTransferLossMixed,  // T-S2S-M
};

std::string_view to_string(StrategyKind kind);
// Accepts the abbreviations above (case-insensitive).
StrategyKind parse_strategy_kind(std::string_view name);
std::vector<StrategyKind> all_strategy_kinds();

bool is_adaptive(StrategyKind kind);
bool is_transfer(StrategyKind kind);
bool is_mixed(StrategyKind kind);
// Scored by WER (and so needs a decode pass), as opposed to loss or metadata.
bool is_metric_based(StrategyKind kind);
bool is_loss_based(StrategyKind kind);

struct Strategy {
  StrategyKind kind = StrategyKind::kDurationBaseline;
  double mixing_fraction = 0.2;
  bool reshuffle_each_epoch = false;

  void validate() const;
};

struct ScoreEntry {
  std::string utterance_id;
  double primary_score = 0.0;
  std::optional<double> confidence;
  double duration_s = 0.0;
};

struct ScoreTable {
  int epoch = 0;
  StrategyKind strategy_kind = StrategyKind::kDurationBaseline;
  // Keyed by utterance id, so iteration is in id order.
  std::map<std::string, ScoreEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  void insert(ScoreEntry entry);
};

struct EpochPlan {
  int epoch = 0;
  std::vector<std::string> ordered_ids;

  std::size_t size() const { return ordered_ids.size(); }
  bool operator==(const EpochPlan&) const = default;
};

// How equal primary scores are ordered. Ties that survive the chain fall
// back to id order.
enum class TieBreak {
  kIdOnly,                  // duration-based scores
  kDuration,                // loss-based: shorter first
  kConfidenceThenDuration,  // metric-based: more confident first, then shorter
};

TieBreak tiebreak_for(StrategyKind kind);

ScoreTable score_duration(const Corpus& corpus);
ScoreTable score_duration(const RecordView& records);

// Ascending by primary score, ties resolved by `tiebreak` and finally by id.
// Throws Error(kNumeric) naming the first utterance with a NaN score.
EpochPlan order_by_scores(const ScoreTable& table, TieBreak tiebreak);

// Strict-weak-order comparison used by order_by_scores; exposed for tests
// that verify plans pairwise.
bool ordered_before(const ScoreEntry& a, const ScoreEntry& b, TieBreak tiebreak);

struct MixResult {
  EpochPlan plan;
  // Set when the plan had fewer than three elements and was left unchanged.
  bool too_small = false;
  // Position pairs (easy, partner) that were swapped.
  std::vector<std::pair<std::size_t, std::size_t>> swaps;
};

struct MixPartition {
  std::size_t easy = 0;
  std::size_t medium = 0;
  std::size_t hard = 0;
  std::size_t swaps = 0;  // k
};

// Section sizes and swap count for n items at the given fraction.
MixPartition mix_partition(std::size_t n, double fraction);

// Splits the ordered plan into easy / medium / hard thirds and swaps k
// randomly chosen easy items, ceil(k/2) with medium items and floor(k/2)
// with hard items, where k = floor(fraction * |easy|).
MixResult uniform_mix(const EpochPlan& plan, double fraction, std::uint64_t seed);

enum class TransferKind { kLoss, kWer };

// Scores every utterance once with a trained teacher model. The result is
// the static curriculum reused for every epoch.
ScoreTable transfer_scores(const ToyModel& teacher, const Corpus& corpus,
                           TransferKind kind);

// Orders `subset` for one epoch.
//
// `scores` is the student feedback carried over from earlier epochs for the
// adaptive kinds, or the cached teacher table for the transfer kinds; it is
// ignored otherwise. Utterances in `subset` with no entry in `scores` are
// placed after the scored ones, by duration.
EpochPlan epoch_order(const Strategy& strategy, const RecordView& subset,
                      const ScoreTable* scores, int epoch, std::uint64_t seed);

// True when `plan` holds exactly the ids of `subset`, each once.
bool is_permutation_of(const EpochPlan& plan, const RecordView& subset);

// Score cache rows: `epoch,utterance_id,primary_score,confidence,duration_s,strategy`.
void append_score_cache(const ScoreTable& table, const std::filesystem::path& path);
std::vector<ScoreTable> read_score_cache(const std::filesystem::path& path);

}  // namespace curriculum
