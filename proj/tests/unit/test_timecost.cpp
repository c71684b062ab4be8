#include <doctest.h>

#include <algorithm>

#include "../oracles.hpp"
#include "curriculum/error.hpp"
#include "curriculum/rng.hpp"
#include "curriculum/timecost.hpp"
#include "helpers.hpp"

using namespace curriculum;
using namespace curriculum::testing;

TEST_CASE("padding cost examples") {
  const std::vector<double> sorted = {1, 2, 3, 4};
  const auto a = padding_cost(sorted, 2);
  CHECK(a.padded_seconds == 12.0);
  CHECK(a.actual_seconds == 10.0);
  CHECK(a.padding_overhead() == doctest::Approx(0.2));

  const std::vector<double> mixed = {1, 3, 2, 4};
  const auto b = padding_cost(mixed, 2);
  CHECK(b.padded_seconds == 14.0);
  CHECK(b.padding_overhead() == doctest::Approx(0.4));

  const std::vector<double> ragged = {1, 2, 3, 4, 5};
  CHECK(padding_cost(ragged, 2).padded_seconds == 4 + 8 + 5);

  CHECK_THROWS_AS(padding_cost(std::vector<double>{}, 2), Error);
  CHECK_THROWS_AS(padding_cost(sorted, 0), Error);
}

TEST_CASE("padding cost agrees with the definition") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(1 + rng.below(100));
    for (auto& v : d) v = rng.uniform(0.5, 20.0);
    const auto b = static_cast<std::size_t>(1 + rng.below(40));
    const auto r = padding_cost(d, b);
    CHECK(r.padded_seconds == doctest::Approx(oracle::padded_seconds(d, b)).epsilon(1e-12));
    CHECK(r.padded_seconds >= r.actual_seconds);
    CHECK(padding_cost(d, 1).padding_overhead() == 0.0);
  }
}

TEST_CASE("padding overhead is zero exactly when batches are uniform") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + rng.below(8);
    const std::size_t batches = 1 + rng.below(6);
    std::vector<double> d;
    for (std::size_t k = 0; k < batches; ++k) {
      const double v = static_cast<double>(1 + rng.below(20)) * 0.25;
      for (std::size_t i = 0; i < b; ++i) d.push_back(v);
    }
    CHECK(padding_cost(d, b).padding_overhead() == 0.0);
    // Shortening any one element makes its batch uneven.
    auto uneven = d;
    uneven[rng.below(uneven.size())] *= 0.5;
    CHECK(padding_cost(uneven, b).padding_overhead() > 0.0);
  }
}

TEST_CASE("sorted order is never worse than shuffles") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> d(100);
    for (auto& v : d) v = rng.uniform(1.0, 15.0);
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const double best = padding_cost(sorted, 8).padded_seconds;
    for (int s = 0; s < 50; ++s) {
      rng.shuffle(d);
      CHECK(best <= padding_cost(d, 8).padded_seconds);
    }
  }
}

TEST_CASE("wall cost accounting") {
  const auto c = generate_corpus(small_spec(300), 4);
  CostParams params;
  params.batch_size = 16;
  PacingParams off;
  off.enabled = false;
  const auto full = build_schedule(5, off);

  const auto base = wall_cost({StrategyKind::kDurationBaseline}, full, c, params, 1);
  CHECK(base.overhead_vs_baseline == 0.0);
  CHECK(base.decode_cost == 0.0);
  CHECK(base.teacher_cost == 0.0);

  const auto rs = wall_cost({StrategyKind::kRandomShuffle}, full, c, params, 1);
  CHECK(rs.overhead_vs_baseline > 0.0);
  CHECK(rs.decode_cost == 0.0);

  const auto ws = wall_cost({StrategyKind::kWerScoreMixed}, full, c, params, 1);
  CHECK(ws.decode_cost == doctest::Approx(params.decode_cost_ratio * 5 * c.total_seconds()));
  const auto s2s = wall_cost({StrategyKind::kSeq2SeqLossMixed}, full, c, params, 1);
  CHECK(s2s.decode_cost == 0.0);

  const auto tws = wall_cost({StrategyKind::kTransferWerMixed}, full, c, params, 1);
  CHECK(tws.teacher_cost ==
        doctest::Approx(params.teacher_inference_cost_ratio * c.total_seconds()));
  CHECK(tws.decode_cost == 0.0);

  const auto paced = wall_cost({StrategyKind::kWerScoreMixed}, build_schedule(10, PacingParams{}),
                               c, params, 1);
  CHECK(paced.overhead_vs_baseline < 0.0);
}

TEST_CASE("wall cost is monotone in the decode ratio only for metric strategies") {
  const auto c = generate_corpus(small_spec(200), 5);
  const auto schedule = build_schedule(4, PacingParams{});
  double last_ws = -1.0;
  double base_cost = -1.0;
  for (double ratio : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    CostParams params;
    params.decode_cost_ratio = ratio;
    const double ws = wall_cost({StrategyKind::kWerScoreMixed}, schedule, c, params, 2).total();
    CHECK(ws > last_ws);
    last_ws = ws;
    const double b = wall_cost({StrategyKind::kDurationBaseline}, schedule, c, params, 2).total();
    if (base_cost >= 0.0) CHECK(b == base_cost);
    base_cost = b;
  }
}

TEST_CASE("simulated plans follow the schedule") {
  const auto c = generate_corpus(small_spec(100), 6);
  const auto schedule = build_schedule(8, PacingParams{});
  const auto plans = simulate_plans({StrategyKind::kWerScoreMixed}, schedule, c, 3);
  REQUIRE(plans.size() == 8);
  for (std::size_t e = 0; e < plans.size(); ++e) {
    const double f = schedule.entries[e].fraction;
    CHECK(plans[e].size() == std::min<std::size_t>(100, static_cast<std::size_t>(
                                                            std::ceil(f * 100 - 1e-9))));
  }
  CHECK(plans.back().size() == 100);
  CHECK(simulate_plans({StrategyKind::kWerScoreMixed}, schedule, c, 3) == plans);
}

TEST_CASE("cost parameter validation") {
  CostParams p;
  p.batch_size = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = CostParams{};
  p.decode_cost_ratio = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
}
