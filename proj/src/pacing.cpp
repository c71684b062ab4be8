#include "curriculum/pacing.hpp"

#include <algorithm>
#include <cmath>

#include "curriculum/error.hpp"
#include "curriculum/rng.hpp"

namespace curriculum {

void PacingParams::validate() const {
  if (!(p0 > 0.0 && p0 <= 1.0)) {
    throw Error(ErrorKind::kValidation, "pacing p0 must lie in (0, 1]");
  }
  if (!(delta >= 1.0)) throw Error(ErrorKind::kValidation, "pacing delta must be >= 1");
  if (!(step > 0.0)) throw Error(ErrorKind::kValidation, "pacing step must be positive");
  if (refresh_interval < 1) {
    throw Error(ErrorKind::kValidation, "pacing refresh interval M must be >= 1");
  }
}

std::vector<int> PacingSchedule::refresh_epochs() const {
  std::vector<int> out;
  for (const auto& e : entries) {
    if (e.refresh) out.push_back(e.epoch);
  }
  return out;
}

double pacing_fraction(int epoch, const PacingParams& params) {
  if (epoch < 1) throw Error(ErrorKind::kValidation, "epochs are numbered from 1");
  const double p = params.p0 * std::pow(params.delta, static_cast<double>(epoch) / params.step);
  return std::min(1.0, p);
}

PacingSchedule build_schedule(int n_epochs, const PacingParams& params) {
  if (n_epochs < 1) throw Error(ErrorKind::kValidation, "a schedule needs at least one epoch");
  PacingSchedule schedule;
  schedule.n_epochs = n_epochs;
  schedule.entries.resize(static_cast<std::size_t>(n_epochs));

  if (!params.enabled) {
    for (int i = 1; i <= n_epochs; ++i) {
      schedule.entries[static_cast<std::size_t>(i - 1)] =
          PacingEntry{i, 1.0, i == 1 || i == n_epochs};
    }
    return schedule;
  }

  params.validate();
  const int m = params.refresh_interval;
  double current = 0.0;
  for (int i = 1; i <= n_epochs; ++i) {
    const bool refresh = i == 1 || i % m == 0 || i == n_epochs;
    if (refresh) current = i == n_epochs ? 1.0 : pacing_fraction(i, params);
    schedule.entries[static_cast<std::size_t>(i - 1)] = PacingEntry{i, current, refresh};
  }
  return schedule;
}

double hours_seen(const PacingSchedule& schedule, double corpus_total_hours) {
  double total = 0.0;
  for (const auto& e : schedule.entries) total += e.fraction * corpus_total_hours;
  return total;
}

RecordView sample_subset_records(const Corpus& corpus, double fraction,
                                 std::uint64_t seed) {
  if (corpus.empty()) throw Error(ErrorKind::kValidation, "cannot sample an empty corpus");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::kValidation, "subset fraction must lie in (0, 1]");
  }
  const std::size_t n = corpus.size();
  if (fraction == 1.0) return view_of(corpus);
  // The small slack stops products like 0.3 * 10 = 3.0000000000000004 from
  // rounding up an extra utterance.
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);

  Rng rng(seed);
  auto picked = rng.sample_without_replacement(n, k);
  std::sort(picked.begin(), picked.end());
  RecordView subset;
  subset.reserve(k);
  for (auto i : picked) subset.push_back(&corpus.records[i]);
  return subset;
}

SubsetPlan sample_subset(const Corpus& corpus, double fraction, std::uint64_t seed,
                         const ScoringContext& context) {
  SubsetPlan out;
  out.subset = sample_subset_records(corpus, fraction, seed);
  out.plan = epoch_order(context.strategy, out.subset, context.scores, context.epoch,
                         context.order_seed);
  return out;
}

}  // namespace curriculum
