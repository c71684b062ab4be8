#pragma once

// Growing-subset pacing: the fraction of the training set used at epoch i is
// p0 * delta^(i / step), clamped at 1, refreshed every M epochs and always at
// the last epoch, where the whole set is used.

#include <cstdint>
#include <string>
#include <vector>

#include "curriculum/corpus.hpp"
#include "curriculum/scoring.hpp"

namespace curriculum {

struct PacingParams {
  double p0 = 0.2;
  double delta = 1.71;
  double step = 5.0;
  int refresh_interval = 1;  // M
  bool enabled = true;

  void validate() const;
};

struct PacingEntry {
  int epoch = 0;
  double fraction = 1.0;
  bool refresh = false;
};

struct PacingSchedule {
  int n_epochs = 0;
  std::vector<PacingEntry> entries;  // entries[i] is epoch i + 1

  const PacingEntry& at(int epoch) const { return entries.at(static_cast<std::size_t>(epoch - 1)); }
  std::vector<int> refresh_epochs() const;
};

double pacing_fraction(int epoch, const PacingParams& params);

// With pacing disabled every epoch uses the full set and only epoch 1 and
// the last epoch are marked as refreshes.
PacingSchedule build_schedule(int n_epochs, const PacingParams& params);

// Expected hours presented over the whole schedule.
double hours_seen(const PacingSchedule& schedule, double corpus_total_hours);

// ceil(fraction * n) distinct utterances drawn uniformly without
// replacement, returned in corpus order.
RecordView sample_subset_records(const Corpus& corpus, double fraction,
                                 std::uint64_t seed);

struct ScoringContext {
  Strategy strategy;
  const ScoreTable* scores = nullptr;
  int epoch = 1;
  std::uint64_t order_seed = 0;
};

struct SubsetPlan {
  RecordView subset;
  EpochPlan plan;
};

// Samples the subset and orders it with the active strategy.
SubsetPlan sample_subset(const Corpus& corpus, double fraction, std::uint64_t seed,
                         const ScoringContext& context);

}  // namespace curriculum
