#include "curriculum/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <fmt/core.h>

#include "curriculum/error.hpp"
#include "curriculum/learner.hpp"
#include "curriculum/rng.hpp"

namespace curriculum {

namespace {

struct KindName {
  StrategyKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {StrategyKind::kDurationBaseline, "Baseline"},
    {StrategyKind::kRandomShuffle, "RS"},
    {StrategyKind::kSeq2SeqLoss, "S2S"},
    {StrategyKind::kWerScore, "WS"},
    {StrategyKind::kWerScoreMixed, "WS-M"},
    {StrategyKind::kSeq2SeqLossMixed, "S2S-M"},
    {StrategyKind::kTransferWerMixed, "T-WS-M"},
    {StrategyKind::kTransferLossMixed, "T-S2S-M"},
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (iequals(kn.name, name)) return kn.kind;
  }
  throw Error(ErrorKind::kValidation, fmt::format("unknown strategy '{}'", name));
}

std::vector<StrategyKind> all_strategy_kinds() {
  std::vector<StrategyKind> kinds;
  for (const auto& kn : kKindNames) kinds.push_back(kn.kind);
  return kinds;
}

bool is_adaptive(StrategyKind kind) {
  return kind == StrategyKind::kSeq2SeqLoss || kind == StrategyKind::kWerScore ||
         kind == StrategyKind::kWerScoreMixed ||
         kind == StrategyKind::kSeq2SeqLossMixed;
}

bool is_transfer(StrategyKind kind) {
  return kind == StrategyKind::kTransferWerMixed ||
         kind == StrategyKind::kTransferLossMixed;
}

bool is_mixed(StrategyKind kind) {
  return kind == StrategyKind::kWerScoreMixed ||
         kind == StrategyKind::kSeq2SeqLossMixed || is_transfer(kind);
}

bool is_metric_based(StrategyKind kind) {
  return kind == StrategyKind::kWerScore || kind == StrategyKind::kWerScoreMixed ||
         kind == StrategyKind::kTransferWerMixed;
}

bool is_loss_based(StrategyKind kind) {
  return kind == StrategyKind::kSeq2SeqLoss ||
         kind == StrategyKind::kSeq2SeqLossMixed ||
         kind == StrategyKind::kTransferLossMixed;
}

void Strategy::validate() const {
  if (!(mixing_fraction >= 0.0 && mixing_fraction <= 1.0)) {
    throw Error(ErrorKind::kValidation, "mixing_fraction must lie in [0, 1]");
  }
  if (is_mixed(kind) && !(mixing_fraction > 0.0)) {
    throw Error(ErrorKind::kValidation,
                fmt::format("{} needs a positive mixing_fraction", to_string(kind)));
  }
}

void ScoreTable::insert(ScoreEntry entry) {
  const auto id = entry.utterance_id;
  if (!entries.try_emplace(id, std::move(entry)).second) {
    throw Error(ErrorKind::kValidation,
                "score table already has an entry for '" + id + "'");
  }
}

TieBreak tiebreak_for(StrategyKind kind) {
  if (is_metric_based(kind)) return TieBreak::kConfidenceThenDuration;
  if (is_loss_based(kind)) return TieBreak::kDuration;
  return TieBreak::kIdOnly;
}

ScoreTable score_duration(const RecordView& records) {
  if (records.empty()) {
    throw Error(ErrorKind::kValidation, "cannot score an empty corpus");
  }
  ScoreTable table;
  table.epoch = 0;
  table.strategy_kind = StrategyKind::kDurationBaseline;
  for (const auto* r : records) {
    table.insert(ScoreEntry{r->id, r->duration_s, std::nullopt, r->duration_s});
  }
  return table;
}

ScoreTable score_duration(const Corpus& corpus) {
  return score_duration(view_of(corpus));
}

bool ordered_before(const ScoreEntry& a, const ScoreEntry& b, TieBreak tiebreak) {
  if (a.primary_score != b.primary_score) return a.primary_score < b.primary_score;
  if (tiebreak == TieBreak::kConfidenceThenDuration) {
    const double ca = a.confidence.value_or(-std::numeric_limits<double>::infinity());
    const double cb = b.confidence.value_or(-std::numeric_limits<double>::infinity());
    if (ca != cb) return ca > cb;
  }
  if (tiebreak != TieBreak::kIdOnly && a.duration_s != b.duration_s) {
    return a.duration_s < b.duration_s;
  }
  return a.utterance_id < b.utterance_id;
}

EpochPlan order_by_scores(const ScoreTable& table, TieBreak tiebreak) {
  if (table.empty()) {
    throw Error(ErrorKind::kValidation, "cannot order an empty score table");
  }
  std::vector<const ScoreEntry*> entries;
  entries.reserve(table.size());
  for (const auto& [id, entry] : table.entries) {
    if (std::isnan(entry.primary_score)) {
      throw Error(ErrorKind::kNumeric, "utterance '" + id + "' has a NaN score");
    }
    entries.push_back(&entry);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [tiebreak](const ScoreEntry* a, const ScoreEntry* b) {
                     return ordered_before(*a, *b, tiebreak);
                   });
  EpochPlan plan;
  plan.epoch = table.epoch;
  plan.ordered_ids.reserve(entries.size());
  for (const auto* e : entries) plan.ordered_ids.push_back(e->utterance_id);
  return plan;
}

MixPartition mix_partition(std::size_t n, double fraction) {
  MixPartition p;
  const std::size_t third = (n + 2) / 3;
  p.easy = std::min(third, n);
  p.medium = std::min(third, n - p.easy);
  p.hard = n - p.easy - p.medium;
  p.swaps = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(p.easy)));
  return p;
}

MixResult uniform_mix(const EpochPlan& plan, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::kValidation, "mixing fraction must lie in [0, 1]");
  }
  MixResult result;
  result.plan = plan;
  const std::size_t n = plan.size();
  if (n < 3) {
    result.too_small = true;
    return result;
  }
  const MixPartition part = mix_partition(n, fraction);
  if (part.swaps == 0) return result;

  // Half (rounded up) of the swaps go to the medium section. If a section is
  // too small for its share the other section takes the rest; this only
  // happens for tiny plans at large fractions.
  std::size_t to_hard = std::min(part.swaps / 2, part.hard);
  std::size_t to_medium = std::min(part.swaps - to_hard, part.medium);
  to_hard = std::min(part.swaps - to_medium, part.hard);

  Rng rng(seed);
  const auto easy = rng.sample_without_replacement(part.easy, to_medium + to_hard);
  const auto medium = rng.sample_without_replacement(part.medium, to_medium);
  const auto hard = rng.sample_without_replacement(part.hard, to_hard);

  auto& ids = result.plan.ordered_ids;
  for (std::size_t i = 0; i < to_medium; ++i) {
    const std::size_t a = easy[i];
    const std::size_t b = part.easy + medium[i];
    std::swap(ids[a], ids[b]);
    result.swaps.emplace_back(a, b);
  }
  for (std::size_t i = 0; i < to_hard; ++i) {
    const std::size_t a = easy[to_medium + i];
    const std::size_t b = part.easy + part.medium + hard[i];
    std::swap(ids[a], ids[b]);
    result.swaps.emplace_back(a, b);
  }
  return result;
}

ScoreTable transfer_scores(const ToyModel& teacher, const Corpus& corpus,
                           TransferKind kind) {
  if (!corpus.has_frames()) {
    throw Error(ErrorKind::kUnsupported,
                "transfer scoring needs feature frames; metadata-only corpora "
                "support duration-based ordering only");
  }
  const auto ev = evaluate(teacher, corpus);
  ScoreTable table;
  table.epoch = 0;
  table.strategy_kind = kind == TransferKind::kWer ? StrategyKind::kTransferWerMixed
                                                   : StrategyKind::kTransferLossMixed;
  for (const auto& fb : ev.examples) {
    table.insert(ScoreEntry{fb.utterance_id,
                            kind == TransferKind::kWer ? fb.wer : fb.loss,
                            fb.confidence, fb.duration_s});
  }
  return table;
}

namespace {

EpochPlan duration_order(const RecordView& subset, int epoch) {
  EpochPlan plan = order_by_scores(score_duration(subset), TieBreak::kIdOnly);
  plan.epoch = epoch;
  return plan;
}

// Scored utterances by the strategy's rule, then the unscored tail by duration.
EpochPlan score_order(StrategyKind kind, const RecordView& subset,
                      const ScoreTable& scores, int epoch) {
  ScoreTable scored;
  scored.epoch = epoch;
  scored.strategy_kind = kind;
  RecordView unscored;
  for (const auto* r : subset) {
    const auto it = scores.entries.find(r->id);
    if (it == scores.entries.end()) {
      unscored.push_back(r);
    } else {
      scored.insert(it->second);
    }
  }
  EpochPlan plan;
  plan.epoch = epoch;
  if (!scored.empty()) plan = order_by_scores(scored, tiebreak_for(kind));
  plan.epoch = epoch;
  if (!unscored.empty()) {
    const auto tail = duration_order(unscored, epoch);
    plan.ordered_ids.insert(plan.ordered_ids.end(), tail.ordered_ids.begin(),
                            tail.ordered_ids.end());
  }
  return plan;
}

}  // namespace

EpochPlan epoch_order(const Strategy& strategy, const RecordView& subset,
                      const ScoreTable* scores, int epoch, std::uint64_t seed) {
  strategy.validate();
  if (epoch < 1) throw Error(ErrorKind::kValidation, "epochs are numbered from 1");
  if (subset.empty()) {
    throw Error(ErrorKind::kValidation, "cannot order an empty subset");
  }
  const StrategyKind kind = strategy.kind;

  if (kind == StrategyKind::kDurationBaseline) return duration_order(subset, epoch);

  if (kind == StrategyKind::kRandomShuffle) {
    // Shuffle from id order so the result depends only on the subset's
    // membership and the seed.
    EpochPlan plan;
    plan.epoch = epoch;
    for (const auto* r : subset) plan.ordered_ids.push_back(r->id);
    std::sort(plan.ordered_ids.begin(), plan.ordered_ids.end());
    Rng rng(strategy.reshuffle_each_epoch
                ? derive_seed(seed, static_cast<std::uint64_t>(epoch), "shuffle")
                : derive_seed(seed, "shuffle"));
    rng.shuffle(plan.ordered_ids);
    return plan;
  }

  if (is_transfer(kind)) {
    if (scores == nullptr) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("{} needs the teacher's score table", to_string(kind)));
    }
    auto plan = score_order(kind, subset, *scores, epoch);
    plan = uniform_mix(plan, strategy.mixing_fraction, derive_seed(seed, "mix-static"))
               .plan;
    plan.epoch = epoch;
    return plan;
  }

  // Adaptive kinds: no student feedback exists before the first epoch.
  if (epoch == 1) return duration_order(subset, epoch);
  if (scores == nullptr) {
    throw Error(ErrorKind::kValidation,
                fmt::format("{} at epoch {} needs the previous epoch's scores",
                            to_string(kind), epoch));
  }
  auto plan = score_order(kind, subset, *scores, epoch);
  if (is_mixed(kind)) {
    plan = uniform_mix(plan, strategy.mixing_fraction,
                       derive_seed(seed, static_cast<std::uint64_t>(epoch), "mix"))
               .plan;
    plan.epoch = epoch;
  }
  return plan;
}

bool is_permutation_of(const EpochPlan& plan, const RecordView& subset) {
  if (plan.size() != subset.size()) return false;
  std::unordered_set<std::string> expected;
  expected.reserve(subset.size());
  for (const auto* r : subset) expected.insert(r->id);
  if (expected.size() != subset.size()) return false;
  for (const auto& id : plan.ordered_ids) {
    if (expected.erase(id) != 1) return false;
  }
  return expected.empty();
}

void append_score_cache(const ScoreTable& table, const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot write score cache " + path.string());
  if (fresh) out << "epoch,utterance_id,primary_score,confidence,duration_s,strategy\n";
  for (const auto& [id, e] : table.entries) {
    out << fmt::format("{},{},{},{},{},{}\n", table.epoch, id, e.primary_score,
                       e.confidence ? fmt::format("{}", *e.confidence) : std::string(),
                       e.duration_s, to_string(table.strategy_kind));
  }
}

std::vector<ScoreTable> read_score_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open score cache " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "epoch,utterance_id,primary_score,confidence,duration_s,strategy") {
    throw Error(ErrorKind::kParse, path.string() + ": unexpected score cache header");
  }
  std::vector<ScoreTable> tables;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 6) {
      throw Error(ErrorKind::kParse,
                  fmt::format("{} row {}: expected 6 fields", path.string(), row));
    }
    try {
      const int epoch = std::stoi(fields[0]);
      const StrategyKind kind = parse_strategy_kind(fields[5]);
      if (tables.empty() || tables.back().epoch != epoch ||
          tables.back().strategy_kind != kind) {
        tables.push_back(ScoreTable{epoch, kind, {}});
      }
      ScoreEntry e;
      e.utterance_id = fields[1];
      e.primary_score = std::stod(fields[2]);
      if (!fields[3].empty()) e.confidence = std::stod(fields[3]);
      e.duration_s = std::stod(fields[4]);
      tables.back().insert(std::move(e));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kParse,
                  fmt::format("{} row {}: malformed number", path.string(), row));
    }
  }
  return tables;
}

}  // namespace curriculum
