#include "curriculum/timecost.hpp"

#include <algorithm>
#include <unordered_map>

#include "curriculum/error.hpp"
#include "curriculum/rng.hpp"

namespace curriculum {

void CostParams::validate() const {
  if (batch_size == 0) throw Error(ErrorKind::kValidation, "batch size must be positive");
  if (!(per_second_train_cost > 0.0)) {
    throw Error(ErrorKind::kValidation, "per_second_train_cost must be positive");
  }
  if (!(decode_cost_ratio >= 0.0) || !(teacher_inference_cost_ratio >= 0.0)) {
    throw Error(ErrorKind::kValidation, "cost ratios must be nonnegative");
  }
}

PaddingReport padding_cost(std::span<const double> ordered_durations,
                           std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::kValidation, "batch size must be positive");
  if (ordered_durations.empty()) {
    throw Error(ErrorKind::kValidation, "cannot cost an empty order");
  }
  PaddingReport report;
  for (std::size_t start = 0; start < ordered_durations.size(); start += batch_size) {
    const auto batch = ordered_durations.subspan(
        start, std::min(batch_size, ordered_durations.size() - start));
    const double longest = *std::max_element(batch.begin(), batch.end());
    report.padded_seconds += static_cast<double>(batch.size()) * longest;
    for (double d : batch) report.actual_seconds += d;
  }
  return report;
}

namespace {

std::vector<double> plan_durations(
    const EpochPlan& plan, const std::unordered_map<std::string, double>& durations) {
  std::vector<double> out;
  out.reserve(plan.size());
  for (const auto& id : plan.ordered_ids) {
    const auto it = durations.find(id);
    if (it == durations.end()) {
      throw Error(ErrorKind::kValidation, "plan names unknown utterance '" + id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::unordered_map<std::string, double> duration_index(const Corpus& corpus) {
  std::unordered_map<std::string, double> index;
  index.reserve(corpus.size());
  for (const auto& r : corpus.records) index.emplace(r.id, r.duration_s);
  return index;
}

}  // namespace

PaddingReport padding_cost(const EpochPlan& plan, const Corpus& corpus,
                           std::size_t batch_size) {
  return padding_cost(plan_durations(plan, duration_index(corpus)), batch_size);
}

double baseline_cost(const Corpus& corpus, int n_epochs, const CostParams& params) {
  params.validate();
  std::vector<double> sorted;
  sorted.reserve(corpus.size());
  for (const auto& r : corpus.records) sorted.push_back(r.duration_s);
  std::sort(sorted.begin(), sorted.end());
  const auto per_epoch = padding_cost(sorted, params.batch_size);
  // Accumulated epoch by epoch, as wall_cost_from_plans does, so the baseline
  // compared with itself is exactly zero overhead.
  PaddingReport total;
  for (int e = 0; e < n_epochs; ++e) total += per_epoch;
  return total.padded_seconds * params.per_second_train_cost;
}

WallCost wall_cost_from_plans(StrategyKind kind, const std::vector<EpochPlan>& plans,
                              const Corpus& corpus, const CostParams& params) {
  params.validate();
  if (plans.empty()) throw Error(ErrorKind::kValidation, "no epoch plans to cost");
  const auto index = duration_index(corpus);
  WallCost cost;
  for (const auto& plan : plans) {
    const auto epoch = padding_cost(plan_durations(plan, index), params.batch_size);
    cost.padding += epoch;
    if (is_adaptive(kind) && is_metric_based(kind)) {
      cost.decode_cost += params.decode_cost_ratio * epoch.actual_seconds;
    }
  }
  cost.train_cost = cost.padding.padded_seconds * params.per_second_train_cost;
  if (is_transfer(kind)) {
    cost.teacher_cost = params.teacher_inference_cost_ratio * corpus.total_seconds();
  }
  cost.overhead_vs_baseline =
      cost.total() / baseline_cost(corpus, static_cast<int>(plans.size()), params) - 1.0;
  return cost;
}

std::vector<EpochPlan> simulate_plans(const Strategy& strategy,
                                      const PacingSchedule& schedule,
                                      const Corpus& corpus, std::uint64_t seed) {
  ScoreTable proxy;
  proxy.strategy_kind = strategy.kind;
  Rng rng(derive_seed(seed, "proxy-difficulty"));
  for (const auto& r : corpus.records) {
    const double score = r.noise_sigma ? *r.noise_sigma : rng.uniform01();
    proxy.insert(ScoreEntry{r.id, score, 1.0, r.duration_s});
  }

  std::vector<EpochPlan> plans;
  RecordView subset;
  for (const auto& entry : schedule.entries) {
    if (entry.refresh || subset.empty()) {
      subset = sample_subset_records(
          corpus, entry.fraction,
          derive_seed(seed, static_cast<std::uint64_t>(entry.epoch), "subset"));
    }
    plans.push_back(epoch_order(strategy, subset, &proxy, entry.epoch, seed));
  }
  return plans;
}

WallCost wall_cost(const Strategy& strategy, const PacingSchedule& schedule,
                   const Corpus& corpus, const CostParams& params, std::uint64_t seed) {
  return wall_cost_from_plans(strategy.kind,
                              simulate_plans(strategy, schedule, corpus, seed), corpus,
                              params);
}

}  // namespace curriculum
