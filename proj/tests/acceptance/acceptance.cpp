// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Each check has a wall-clock budget that counts toward its
// verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "../oracles.hpp"
#include "curriculum/corpus.hpp"
#include "curriculum/learner.hpp"
#include "curriculum/metrics.hpp"
#include "curriculum/pacing.hpp"
#include "curriculum/rng.hpp"
#include "curriculum/runner.hpp"
#include "curriculum/scoring.hpp"
#include "curriculum/timecost.hpp"

namespace fs = std::filesystem;
using namespace curriculum;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int number;
  std::string title;
  double budget_s;
  std::function<Verdict()> check;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Verdict pacing_arithmetic() {
  const PacingParams params;  // p0 0.2, delta 1.71, step 5, M 1
  const int n = 15;
  const double full_hours = 1382.0;
  const auto schedule = build_schedule(n, params);
  const double ratio = hours_seen(schedule, full_hours) / (n * full_hours);
  const double expected = oracle::pacing_series(0.2, 1.71, 5.0, n) / n;
  Verdict v;
  v.ok = ratio >= 0.46 && ratio <= 0.62 && std::fabs(ratio - expected) < 1e-12;
  v.detail = fmt::format("hours ratio {:.4f} (series oracle {:.4f}), window [0.46, 0.62]",
                         ratio, expected);
  return v;
}

Verdict padding_optimality() {
  Rng rng(derive_seed(1, "acceptance-padding"));
  const std::size_t n = 512;
  const std::size_t batch = 32;
  std::size_t violations = 0;
  double overhead_sum = 0.0;
  double min_overhead = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
  for (int corpus = 0; corpus < 20; ++corpus) {
    std::vector<double> durations(n);
    for (auto& d : durations) d = rng.uniform(0.5, 20.0);
    auto sorted = durations;
    std::sort(sorted.begin(), sorted.end());
    const double best = padding_cost(sorted, batch).padded_seconds;
    if (std::fabs(best - oracle::padded_seconds(sorted, batch)) > 1e-9 * best) ++violations;
    auto shuffled = durations;
    for (int perm = 0; perm < 200; ++perm) {
      rng.shuffle(shuffled);
      const double cost = padding_cost(shuffled, batch).padded_seconds;
      if (cost < best) ++violations;
      const double overhead = cost / best - 1.0;
      overhead_sum += overhead;
      min_overhead = std::min(min_overhead, overhead);
      ++samples;
    }
  }
  const double mean = overhead_sum / static_cast<double>(samples);
  Verdict v;
  v.ok = violations == 0 && mean > 0.0 && min_overhead >= 0.0;
  v.detail = fmt::format("{} permutations, {} beat sorted order; shuffle overhead mean {:+.1f}%",
                         samples, violations, 100.0 * mean);
  return v;
}

Verdict paced_wall_cost() {
  CorpusSpec spec;  // 2000 utterances
  const auto corpus = generate_corpus(spec, derive_seed(1, "corpus"));
  const CostParams params;
  Verdict v;
  std::string parts;
  for (int n_epochs : {10, 15}) {
    const auto paced = build_schedule(n_epochs, PacingParams{});
    for (auto kind : {StrategyKind::kWerScoreMixed, StrategyKind::kTransferWerMixed}) {
      const auto cost = wall_cost({kind}, paced, corpus, params, 7);
      v.ok = v.ok && cost.overhead_vs_baseline < 0.0;
      parts += fmt::format("{}(Paced) {} {:+.1f}%", parts.empty() ? "" : ", ", to_string(kind),
                           100.0 * cost.overhead_vs_baseline);
    }
  }
  PacingParams off;
  off.enabled = false;
  const auto self =
      wall_cost({StrategyKind::kDurationBaseline}, build_schedule(10, off), corpus, params, 7);
  v.ok = v.ok && self.overhead_vs_baseline == 0.0;
  v.detail = parts + " (N = 10, 10, 15, 15)";
  return v;
}

Verdict edit_distance_oracle() {
  Rng rng(derive_seed(1, "acceptance-edit"));
  const std::string alphabet = "abc";
  auto draw = [&] {
    std::string s;
    const auto len = rng.below(7);
    for (std::uint64_t i = 0; i < len; ++i) s += alphabet[rng.below(3)];
    return s;
  };
  std::size_t mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const auto a = draw();
    const auto b = draw();
    if (edit_distance(a, b).distance() != oracle::edit_distance_bfs(a, b, alphabet)) ++mismatches;
  }
  return {mismatches == 0, fmt::format("500 pairs, {} mismatches against exhaustive search",
                                       mismatches)};
}

Verdict gradient_check() {
  Rng rng(derive_seed(1, "acceptance-gradient"));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    CorpusSpec spec;
    spec.n_utterances = 1;
    spec.vocab_size = 2 + rng.below(10);
    spec.feature_dim = 1 + rng.below(8);
    spec.min_tokens = 1;
    spec.max_tokens = 6;
    const auto corpus = generate_corpus(spec, rng.next_u64());
    auto model = ToyModel::random(spec.vocab_size, spec.feature_dim, 0.5, rng.next_u64());
    for (auto& b : model.bias) b = 0.3 * rng.gaussian();
    const auto& rec = corpus.records.front();

    const auto grad = example_loss(model, rec).gradient;
    std::vector<double> analytic = grad.weights;
    analytic.insert(analytic.end(), grad.bias.begin(), grad.bias.end());
    std::vector<double> params = model.weights;
    params.insert(params.end(), model.bias.begin(), model.bias.end());
    const auto numeric = oracle::central_difference(
        [&](const std::vector<double>& p) {
          ToyModel m = model;
          std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(m.weights.size()),
                    m.weights.begin());
          std::copy(p.begin() + static_cast<std::ptrdiff_t>(m.weights.size()), p.end(),
                    m.bias.begin());
          return example_loss_value(m, rec);
        },
        params, 1e-5);
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  return {worst < 1e-5, fmt::format("100 cases, max relative error {:.2e} (limit 1e-05)", worst)};
}

Verdict mixing_invariants() {
  Rng rng(derive_seed(1, "acceptance-mixing"));
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(3 + rng.below(400));
    EpochPlan plan;
    for (std::size_t i = 0; i < n; ++i) plan.ordered_ids.push_back(fmt::format("{:05d}", i));
    const auto seed = rng.next_u64();
    const auto mixed = uniform_mix(plan, 0.2, seed);

    auto ids = mixed.plan.ordered_ids;
    std::sort(ids.begin(), ids.end());
    const bool permutation = ids == plan.ordered_ids;

    const std::size_t easy = (n + 2) / 3;
    const auto k = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(easy)));
    std::size_t easy_displaced = 0;
    bool medium_hard = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (mixed.plan.ordered_ids[i] == plan.ordered_ids[i]) continue;
      // Ids encode their original position.
      const auto from = static_cast<std::size_t>(std::stoul(mixed.plan.ordered_ids[i]));
      if (i < easy) {
        ++easy_displaced;
      } else if (from >= easy) {
        medium_hard = true;  // a medium or hard slot holds a non-easy item
      }
    }
    const bool identity = uniform_mix(plan, 0.0, seed).plan == plan;
    if (!permutation || easy_displaced != k || medium_hard || !identity) ++failures;
  }
  return {failures == 0, fmt::format("1000 cases, {} violations", failures)};
}

Verdict mapsswe_checks() {
  const auto zero = mapsswe({{3, 1, 4, 1, 5}, {3, 1, 4, 1, 5}});
  const PairedErrorSample s{{4, 2, 7, 5, 1, 0}, {1, 2, 3, 3, 2, 1}};
  const auto ab = mapsswe(s);
  const auto ba = mapsswe({s.errors_b, s.errors_a});
  const auto d = mapsswe({{1, 2, 3, 4}, {0, 0, 0, 0}});
  const double z_oracle = oracle::paired_z({1, 2, 3, 4});
  const double p_oracle = oracle::normal_two_sided_tail(z_oracle);
  Verdict v;
  v.ok = zero.z == 0.0 && zero.p_two_sided == 1.0 && ab.z == -ba.z &&
         ab.p_two_sided == ba.p_two_sided && std::fabs(d.z - 3.873) < 1e-3 &&
         std::fabs(d.z - z_oracle) < 1e-12 &&
         std::fabs(d.p_two_sided - p_oracle) < 1e-6 * p_oracle;
  v.detail = fmt::format("zero case z={} p={}; swap z {:+.4f}/{:+.4f}; d=[1,2,3,4] z={:.4f} p={:.3e}",
                         zero.z, zero.p_two_sided, ab.z, ba.z, d.z, d.p_two_sided);
  return v;
}

// ---------------------------------------------------------------------------

ExperimentConfig smoke_config() {
  ExperimentConfig cfg;  // 2000 utterances, 10 epochs, 3 seeds
  cfg.strategies = {parse_strategy_spec("Baseline"), parse_strategy_spec("RS"),
                    parse_strategy_spec("WS-M"), parse_strategy_spec("(Paced) WS-M")};
  cfg.master_seed = 1;
  return cfg;
}

const char* const kReportFiles[] = {"results.csv",    "curves.csv",       "overhead.csv",
                                    "hours_seen.csv", "significance.csv", "plans.csv",
                                    "manifest.json",  "report.json"};

struct SmokeState {
  bool ran = false;
  fs::path dir;
  double slowest_seed_s = 0.0;
};

SmokeState smoke;

Verdict end_to_end() {
  const auto cfg = smoke_config();
  smoke.dir = fs::current_path() / "acceptance_out";
  fs::remove_all(smoke.dir);

  auto last = std::chrono::steady_clock::now();
  double seed_time = 0.0;
  RunOptions options;
  options.progress = [&](const std::string&, int, int epoch) {
    const auto now = std::chrono::steady_clock::now();
    seed_time += std::chrono::duration<double>(now - last).count();
    last = now;
    if (epoch == cfg.train.n_epochs) {
      smoke.slowest_seed_s = std::max(smoke.slowest_seed_s, seed_time);
      seed_time = 0.0;
    }
  };
  const auto report = run_experiment(cfg, options);
  emit_report(report, smoke.dir / "first");
  smoke.ran = true;

  std::vector<std::string> problems;
  for (auto name : kReportFiles) {
    if (!fs::exists(smoke.dir / "first" / name)) problems.push_back(fmt::format("missing {}", name));
  }
  std::size_t plans_checked = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  for (const auto& s : report.strategies) {
    if (s.seeds.size() != 3) problems.push_back(s.label() + " lacks seeds");
    for (const auto& run : s.seeds) {
      const auto tag = fmt::format("{} seed {}", s.label(), run.seed_index);
      if (!run.complete) {
        problems.push_back(tag + " incomplete: " + run.diagnostic);
        continue;
      }
      if (run.plans.size() != 10) problems.push_back(tag + " wrong epoch count");
      for (std::size_t e = 0; e < run.plans.size(); ++e) {
        std::multiset<std::string> plan(run.plans[e].ordered_ids.begin(),
                                        run.plans[e].ordered_ids.end());
        std::multiset<std::string> subset(run.subset_ids[e].begin(), run.subset_ids[e].end());
        std::set<std::string> unique(plan.begin(), plan.end());
        if (plan != subset || unique.size() != plan.size()) {
          problems.push_back(fmt::format("{} epoch {} plan is not a permutation", tag, e + 1));
        }
        if (plan_digest(run.plans[e]) != run.epochs[e].plan_digest) {
          problems.push_back(fmt::format("{} epoch {} digest mismatch", tag, e + 1));
        }
        ++plans_checked;
      }
      if (is_adaptive(s.spec.strategy.kind) && run.plans.size() > 1 &&
          run.plans[1].ordered_ids == run.plans[0].ordered_ids) {
        problems.push_back(tag + " did not adapt after epoch 1");
      }
      worst_margin = std::max(worst_margin, run.valid_wer - run.untrained_valid_wer);
      if (!(run.valid_wer < run.untrained_valid_wer)) {
        problems.push_back(fmt::format("{} valid WER {:.4f} not below untrained {:.4f}", tag,
                                       run.valid_wer, run.untrained_valid_wer));
      }
    }
  }

  // Transfer strategies on the same data: every epoch's plan over the full
  // set must be the same.
  auto transfer_cfg = cfg;
  transfer_cfg.n_seeds = 1;
  transfer_cfg.strategies = {parse_strategy_spec("T-WS-M"), parse_strategy_spec("T-S2S-M")};
  const auto transfer = run_experiment(transfer_cfg);
  for (const auto& s : transfer.strategies) {
    for (const auto& run : s.seeds) {
      if (!run.complete) {
        problems.push_back(s.label() + " incomplete: " + run.diagnostic);
        continue;
      }
      for (const auto& p : run.plans) {
        if (p.ordered_ids != run.plans.front().ordered_ids) {
          problems.push_back(s.label() + " plan changed across epochs");
          break;
        }
      }
    }
  }

  const bool fast = smoke.slowest_seed_s < 300.0;
  if (!fast) problems.push_back(fmt::format("slowest seed took {:.1f} s", smoke.slowest_seed_s));

  Verdict v;
  v.ok = problems.empty();
  v.detail = fmt::format(
      "{} plans checked, slowest seed {:.2f} s, worst (final - untrained) valid WER {:+.4f}",
      plans_checked, smoke.slowest_seed_s, worst_margin);
  for (const auto& p : problems) v.detail += "\n      " + p;
  return v;
}

Verdict determinism() {
  if (!smoke.ran) return {false, "end-to-end run did not complete"};
  const auto report = run_experiment(smoke_config());
  emit_report(report, smoke.dir / "second");
  std::vector<std::string> differing;
  for (auto name : kReportFiles) {
    const auto a = slurp(smoke.dir / "first" / name);
    const auto b = slurp(smoke.dir / "second" / name);
    if (a.empty() || a != b) differing.emplace_back(name);
  }
  Verdict v;
  v.ok = differing.empty();
  v.detail = differing.empty() ? fmt::format("{} report files byte-identical",
                                             std::size(kReportFiles))
                               : "differing: ";
  for (const auto& d : differing) v.detail += d + " ";
  return v;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "pacing arithmetic", 1.0, pacing_arithmetic},
      {2, "sorted-order padding optimality", 10.0, padding_optimality},
      {3, "paced wall cost below baseline", 5.0, paced_wall_cost},
      {4, "edit distance matches exhaustive search", 30.0, edit_distance_oracle},
      {5, "analytic gradient matches finite differences", 5.0, gradient_check},
      {6, "mixing invariants", 5.0, mixing_invariants},
      {7, "matched-pairs significance test", 1.0, mapsswe_checks},
      // Per-seed time is checked inside; the budget here covers all runs.
      {8, "end-to-end smoke experiment", 3600.0, end_to_end},
      {9, "replay determinism", 3600.0, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > c.budget_s) {
      v.ok = false;
      v.detail += fmt::format(" [over budget: {:.2f} s > {:.0f} s]", elapsed, c.budget_s);
    }
    fmt::print("{} criterion {}: {} ({:.2f} s) - {}\n", v.ok ? "PASS" : "FAIL", c.number,
               c.title, elapsed, v.detail);
    std::fflush(stdout);
    if (!v.ok) ++failed;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
             criteria.size());
  return failed == 0 ? 0 : 1;
}
