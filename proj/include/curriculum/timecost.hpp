#pragma once

// Abstract training-time model: padded seconds processed per batch, plus the
// extra decode pass of metric-scored strategies and the one-time teacher
// pass of transfer strategies. Units are arbitrary; only ratios matter.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "curriculum/corpus.hpp"
#include "curriculum/pacing.hpp"
#include "curriculum/scoring.hpp"

namespace curriculum {

struct CostParams {
  std::size_t batch_size = 32;
  double per_second_train_cost = 1.0;
  // Extra cost per second of audio for the per-epoch decode pass of the
  // adaptive WER-scored strategies.
  double decode_cost_ratio = 0.15;
  // One-time teacher inference cost per second of audio.
  double teacher_inference_cost_ratio = 0.5;

  void validate() const;
};

struct PaddingReport {
  double padded_seconds = 0.0;
  double actual_seconds = 0.0;

  double padding_overhead() const { return padded_seconds / actual_seconds - 1.0; }
  PaddingReport& operator+=(const PaddingReport& other) {
    padded_seconds += other.padded_seconds;
    actual_seconds += other.actual_seconds;
    return *this;
  }
};

// Consecutive batches of `batch_size`; each costs its size times its longest
// member. Throws on an empty order.
PaddingReport padding_cost(std::span<const double> ordered_durations,
                           std::size_t batch_size);
PaddingReport padding_cost(const EpochPlan& plan, const Corpus& corpus,
                           std::size_t batch_size);

struct WallCost {
  PaddingReport padding;  // summed over epochs
  double train_cost = 0.0;
  double decode_cost = 0.0;
  double teacher_cost = 0.0;
  double overhead_vs_baseline = 0.0;

  double total() const { return train_cost + decode_cost + teacher_cost; }
};

// Cost of training `kind` on the given epoch plans. The overhead is relative
// to the duration-sorted baseline over the same number of full epochs.
WallCost wall_cost_from_plans(StrategyKind kind, const std::vector<EpochPlan>& plans,
                              const Corpus& corpus, const CostParams& params);

// Full-set, duration-sorted cost for `n_epochs` epochs.
double baseline_cost(const Corpus& corpus, int n_epochs, const CostParams& params);

// Epoch plans a strategy would produce without running the learner. Adaptive
// and transfer orders use a stand-in difficulty: the utterance's noise level
// when known, otherwise a seeded random score.
std::vector<EpochPlan> simulate_plans(const Strategy& strategy,
                                      const PacingSchedule& schedule,
                                      const Corpus& corpus, std::uint64_t seed);

WallCost wall_cost(const Strategy& strategy, const PacingSchedule& schedule,
                   const Corpus& corpus, const CostParams& params, std::uint64_t seed);

}  // namespace curriculum
