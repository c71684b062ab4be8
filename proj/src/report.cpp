// Config and report (de)serialization, and the CSV report files.

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/core.h>

#include "curriculum/error.hpp"
#include "curriculum/rng.hpp"
#include "curriculum/runner.hpp"

namespace curriculum {

using nlohmann::json;

namespace {

// Reads `key` into `out` when present; the key is then marked as consumed.
template <typename T>
void take(const json& obj, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& seen,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!seen.count(key)) {
      throw Error(ErrorKind::kParse, fmt::format("unknown config key '{}{}'", where, key));
    }
  }
}

// JSON has no infinities; they travel as strings.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::kParse, "bad number '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  json strategies = json::array();
  for (const auto& s : c.strategies) strategies.push_back(s.label());
  const Strategy first = c.strategies.empty() ? Strategy{} : c.strategies.front().strategy;
  return json{
      {"corpus",
       {{"n_utterances", c.corpus.n_utterances},
        {"vocab_size", c.corpus.vocab_size},
        {"feature_dim", c.corpus.feature_dim},
        {"min_tokens", c.corpus.min_tokens},
        {"max_tokens", c.corpus.max_tokens},
        {"min_noise_sigma", c.corpus.min_noise_sigma},
        {"max_noise_sigma", c.corpus.max_noise_sigma},
        {"frame_seconds", c.corpus.frame_seconds},
        {"prototype_scale", c.corpus.prototype_scale}}},
      {"corpus_path", c.corpus_path},
      {"segment_max_seconds",
       c.segment_max_seconds ? json(*c.segment_max_seconds) : json(nullptr)},
      {"strategies", strategies},
      {"mixing_fraction", first.mixing_fraction},
      {"reshuffle_each_epoch", first.reshuffle_each_epoch},
      {"pacing",
       {{"p0", c.pacing.p0},
        {"delta", c.pacing.delta},
        {"step", c.pacing.step},
        {"refresh_interval", c.pacing.refresh_interval}}},
      {"train",
       {{"micro_batch", c.train.micro_batch},
        {"accumulation_steps", c.train.accumulation_steps},
        {"learning_rate", c.train.learning_rate},
        {"epochs", c.train.n_epochs},
        {"init_scale", c.train.init_scale}}},
      {"teacher_epochs", c.teacher_epochs},
      {"n_seeds", c.n_seeds},
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"valid_fraction", c.valid_fraction},
      {"test_fraction", c.test_fraction},
      {"alpha", c.alpha},
      {"cost",
       {{"batch_size", c.cost.batch_size},
        {"per_second_train_cost", c.cost.per_second_train_cost},
        {"decode_cost_ratio", c.cost.decode_cost_ratio},
        {"teacher_inference_cost_ratio", c.cost.teacher_inference_cost_ratio}}},
  };
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  try {
    if (!doc.is_object()) throw Error(ErrorKind::kParse, "config must be a JSON object");
    std::set<std::string> seen;
    if (doc.contains("corpus")) {
      const auto& j = doc.at("corpus");
      std::set<std::string> s;
      take(j, "n_utterances", c.corpus.n_utterances, s);
      take(j, "vocab_size", c.corpus.vocab_size, s);
      take(j, "feature_dim", c.corpus.feature_dim, s);
      take(j, "min_tokens", c.corpus.min_tokens, s);
      take(j, "max_tokens", c.corpus.max_tokens, s);
      take(j, "min_noise_sigma", c.corpus.min_noise_sigma, s);
      take(j, "max_noise_sigma", c.corpus.max_noise_sigma, s);
      take(j, "frame_seconds", c.corpus.frame_seconds, s);
      take(j, "prototype_scale", c.corpus.prototype_scale, s);
      reject_unknown(j, s, "corpus.");
    }
    seen.insert("corpus");
    take(doc, "corpus_path", c.corpus_path, seen);
    seen.insert("segment_max_seconds");
    if (doc.contains("segment_max_seconds") && !doc["segment_max_seconds"].is_null()) {
      c.segment_max_seconds = doc["segment_max_seconds"].get<double>();
    }
    double mixing = 0.2;
    bool reshuffle = false;
    take(doc, "mixing_fraction", mixing, seen);
    take(doc, "reshuffle_each_epoch", reshuffle, seen);
    std::vector<std::string> names{"Baseline", "RS", "WS-M", "(Paced) WS-M"};
    take(doc, "strategies", names, seen);
    for (const auto& name : names) {
      auto spec = parse_strategy_spec(name);
      spec.strategy.mixing_fraction = mixing;
      spec.strategy.reshuffle_each_epoch = reshuffle;
      c.strategies.push_back(spec);
    }
    if (doc.contains("pacing")) {
      const auto& j = doc.at("pacing");
      std::set<std::string> s;
      take(j, "p0", c.pacing.p0, s);
      take(j, "delta", c.pacing.delta, s);
      take(j, "step", c.pacing.step, s);
      take(j, "refresh_interval", c.pacing.refresh_interval, s);
      reject_unknown(j, s, "pacing.");
    }
    seen.insert("pacing");
    if (doc.contains("train")) {
      const auto& j = doc.at("train");
      std::set<std::string> s;
      take(j, "micro_batch", c.train.micro_batch, s);
      take(j, "accumulation_steps", c.train.accumulation_steps, s);
      take(j, "learning_rate", c.train.learning_rate, s);
      take(j, "epochs", c.train.n_epochs, s);
      take(j, "init_scale", c.train.init_scale, s);
      reject_unknown(j, s, "train.");
    }
    seen.insert("train");
    take(doc, "teacher_epochs", c.teacher_epochs, seen);
    take(doc, "n_seeds", c.n_seeds, seen);
    take(doc, "master_seed", c.master_seed, seen);
    take(doc, "output_dir", c.output_dir, seen);
    take(doc, "valid_fraction", c.valid_fraction, seen);
    take(doc, "test_fraction", c.test_fraction, seen);
    take(doc, "alpha", c.alpha, seen);
    if (doc.contains("cost")) {
      const auto& j = doc.at("cost");
      std::set<std::string> s;
      take(j, "batch_size", c.cost.batch_size, s);
      take(j, "per_second_train_cost", c.cost.per_second_train_cost, s);
      take(j, "decode_cost_ratio", c.cost.decode_cost_ratio, s);
      take(j, "teacher_inference_cost_ratio", c.cost.teacher_inference_cost_ratio, s);
      reject_unknown(j, s, "cost.");
    }
    seen.insert("cost");
    reject_unknown(doc, seen, "");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

std::string config_hash(const ExperimentConfig& config) {
  return fmt::format("{:016x}", fingerprint64(config_to_json(config).dump()));
}

namespace {

json seed_to_json(const SeedRun& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"fraction", e.fraction},
                      {"subset_size", e.subset_size},
                      {"subset_seconds", e.subset_seconds},
                      {"train_loss", e.train_loss},
                      {"valid_loss", e.valid_loss},
                      {"valid_wer", e.valid_wer},
                      {"valid_cer", e.valid_cer},
                      {"plan_digest", e.plan_digest}});
  }
  return json{{"seed_index", r.seed_index},
              {"complete", r.complete},
              {"diagnostic", r.diagnostic},
              {"untrained_valid_wer", r.untrained_valid_wer},
              {"epochs", epochs},
              {"valid_wer", r.valid_wer},
              {"valid_cer", r.valid_cer},
              {"test_wer", r.test_wer},
              {"test_cer", r.test_cer},
              {"test_errors", r.test_errors},
              {"hours_seen", r.hours_seen},
              {"cost",
               {{"padded_seconds", r.cost.padding.padded_seconds},
                {"actual_seconds", r.cost.padding.actual_seconds},
                {"train_cost", r.cost.train_cost},
                {"decode_cost", r.cost.decode_cost},
                {"teacher_cost", r.cost.teacher_cost},
                {"overhead_vs_baseline", r.cost.overhead_vs_baseline}}}};
}

SeedRun seed_from_json(const json& j) {
  SeedRun r;
  r.seed_index = j.at("seed_index").get<int>();
  r.complete = j.at("complete").get<bool>();
  r.diagnostic = j.at("diagnostic").get<std::string>();
  r.untrained_valid_wer = j.at("untrained_valid_wer").get<double>();
  for (const auto& je : j.at("epochs")) {
    EpochRecord e;
    e.epoch = je.at("epoch").get<int>();
    e.fraction = je.at("fraction").get<double>();
    e.subset_size = je.at("subset_size").get<std::size_t>();
    e.subset_seconds = je.at("subset_seconds").get<double>();
    e.train_loss = je.at("train_loss").get<double>();
    e.valid_loss = je.at("valid_loss").get<double>();
    e.valid_wer = je.at("valid_wer").get<double>();
    e.valid_cer = je.at("valid_cer").get<double>();
    e.plan_digest = je.at("plan_digest").get<std::string>();
    r.epochs.push_back(std::move(e));
  }
  r.valid_wer = j.at("valid_wer").get<double>();
  r.valid_cer = j.at("valid_cer").get<double>();
  r.test_wer = j.at("test_wer").get<double>();
  r.test_cer = j.at("test_cer").get<double>();
  r.test_errors = j.at("test_errors").get<std::vector<long long>>();
  r.hours_seen = j.at("hours_seen").get<double>();
  const auto& c = j.at("cost");
  r.cost.padding.padded_seconds = c.at("padded_seconds").get<double>();
  r.cost.padding.actual_seconds = c.at("actual_seconds").get<double>();
  r.cost.train_cost = c.at("train_cost").get<double>();
  r.cost.decode_cost = c.at("decode_cost").get<double>();
  r.cost.teacher_cost = c.at("teacher_cost").get<double>();
  r.cost.overhead_vs_baseline = c.at("overhead_vs_baseline").get<double>();
  return r;
}

}  // namespace

json report_to_json(const RunReport& report) {
  json strategies = json::array();
  for (const auto& s : report.strategies) {
    json seeds = json::array();
    for (const auto& r : s.seeds) seeds.push_back(seed_to_json(r));
    strategies.push_back({{"label", s.label()},
                          {"mixing_fraction", s.spec.strategy.mixing_fraction},
                          {"reshuffle_each_epoch", s.spec.strategy.reshuffle_each_epoch},
                          {"test_ids", s.test_ids},
                          {"hours_seen_expected", s.hours_seen_expected},
                          {"seeds", seeds}});
  }
  json significance = json::array();
  for (const auto& v : report.significance) {
    significance.push_back({{"system_a", v.system_a},
                            {"system_b", v.system_b},
                            {"seed_a", v.seed_a},
                            {"seed_b", v.seed_b},
                            {"z", number(v.z)},
                            {"p", v.p},
                            {"significant", v.significant}});
  }
  return json{{"format", "curriculum-report"},
              {"version", 1},
              {"config", config_to_json(report.config)},
              {"config_hash", report.config_hash},
              {"train_hours", report.train_hours},
              {"n_train", report.n_train},
              {"n_valid", report.n_valid},
              {"n_test", report.n_test},
              {"strategies", strategies},
              {"significance", significance}};
}

RunReport report_from_json(const json& doc) {
  RunReport report;
  try {
    if (doc.at("format") != "curriculum-report" || doc.at("version") != 1) {
      throw Error(ErrorKind::kParse, "not a version-1 curriculum report");
    }
    report.config = config_from_json(doc.at("config"));
    report.config_hash = doc.at("config_hash").get<std::string>();
    report.train_hours = doc.at("train_hours").get<double>();
    report.n_train = doc.at("n_train").get<std::size_t>();
    report.n_valid = doc.at("n_valid").get<std::size_t>();
    report.n_test = doc.at("n_test").get<std::size_t>();
    for (const auto& js : doc.at("strategies")) {
      StrategyResult s;
      s.spec = parse_strategy_spec(js.at("label").get<std::string>());
      s.spec.strategy.mixing_fraction = js.at("mixing_fraction").get<double>();
      s.spec.strategy.reshuffle_each_epoch = js.at("reshuffle_each_epoch").get<bool>();
      s.test_ids = js.at("test_ids").get<std::vector<std::string>>();
      s.hours_seen_expected = js.at("hours_seen_expected").get<double>();
      for (const auto& jr : js.at("seeds")) s.seeds.push_back(seed_from_json(jr));
      report.strategies.push_back(std::move(s));
    }
    for (const auto& jv : doc.at("significance")) {
      SignificanceVerdict v;
      v.system_a = jv.at("system_a").get<std::string>();
      v.system_b = jv.at("system_b").get<std::string>();
      v.seed_a = jv.at("seed_a").get<int>();
      v.seed_b = jv.at("seed_b").get<int>();
      v.z = number_from(jv.at("z"));
      v.p = jv.at("p").get<double>();
      v.significant = jv.at("significant").get<bool>();
      report.significance.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
  return report;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

std::string z_text(double z) {
  if (std::isinf(z)) return z > 0 ? "inf" : "-inf";
  return fixed(z);
}

}  // namespace

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = open_out(dir / "results.csv");
    out << "strategy,n_seeds,valid_cer_mean,valid_cer_std,valid_wer_mean,valid_wer_std,"
           "test_cer_mean,test_cer_std,test_wer_mean,test_wer_std\n";
    for (const auto& s : report.strategies) {
      const auto vc = s.summary(&SeedRun::valid_cer);
      const auto vw = s.summary(&SeedRun::valid_wer);
      const auto tc = s.summary(&SeedRun::test_cer);
      const auto tw = s.summary(&SeedRun::test_wer);
      out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", s.label(),
                         s.complete_seeds().size(), fixed(vc.mean), fixed(vc.stddev),
                         fixed(vw.mean), fixed(vw.stddev), fixed(tc.mean),
                         fixed(tc.stddev), fixed(tw.mean), fixed(tw.stddev));
    }
  }
  {
    auto out = open_out(dir / "curves.csv");
    out << "strategy,seed,epoch,fraction,train_loss,valid_loss,valid_wer,valid_cer\n";
    for (const auto& s : report.strategies) {
      for (const auto& r : s.seeds) {
        for (const auto& e : r.epochs) {
          out << fmt::format("{},{},{},{},{},{},{},{}\n", s.label(), r.seed_index,
                             e.epoch, fixed(e.fraction), fixed(e.train_loss),
                             fixed(e.valid_loss), fixed(e.valid_wer), fixed(e.valid_cer));
        }
      }
    }
  }
  {
    auto out = open_out(dir / "overhead.csv");
    out << "strategy,padded_seconds,actual_seconds,padding_overhead,wall_cost,"
           "overhead_pct\n";
    for (const auto& s : report.strategies) {
      std::vector<double> padded, actual, wall, overhead;
      for (const auto* r : s.complete_seeds()) {
        padded.push_back(r->cost.padding.padded_seconds);
        actual.push_back(r->cost.padding.actual_seconds);
        wall.push_back(r->cost.total());
        overhead.push_back(r->cost.overhead_vs_baseline);
      }
      const double p = mean_std(padded).mean;
      const double a = mean_std(actual).mean;
      out << fmt::format("{},{},{},{},{},{}\n", s.label(), fixed(p), fixed(a),
                         fixed(a > 0.0 ? p / a - 1.0 : 0.0), fixed(mean_std(wall).mean),
                         fmt::format("{:.2f}", 100.0 * mean_std(overhead).mean));
    }
  }
  {
    auto out = open_out(dir / "hours_seen.csv");
    out << "strategy,hours_seen_expected,hours_seen_actual,full_hours_per_epoch\n";
    for (const auto& s : report.strategies) {
      out << fmt::format("{},{},{},{}\n", s.label(), fixed(s.hours_seen_expected),
                         fixed(s.summary(&SeedRun::hours_seen).mean),
                         fixed(report.train_hours));
    }
  }
  {
    auto out = open_out(dir / "significance.csv");
    out << "system_a,seed_a,system_b,seed_b,z,p,significant\n";
    for (const auto& v : report.significance) {
      out << fmt::format("{},{},{},{},{},{:.6g},{}\n", v.system_a, v.seed_a, v.system_b,
                         v.seed_b, z_text(v.z), v.p, v.significant ? "yes" : "no");
    }
  }
  {
    auto out = open_out(dir / "plans.csv");
    out << "strategy,seed,epoch,subset_size,plan_digest\n";
    for (const auto& s : report.strategies) {
      for (const auto& r : s.seeds) {
        for (const auto& e : r.epochs) {
          out << fmt::format("{},{},{},{},{}\n", s.label(), r.seed_index, e.epoch,
                             e.subset_size, e.plan_digest);
        }
      }
    }
  }
  {
    const auto& c = report.config;
    json seeds = json::array();
    for (int s = 0; s < c.n_seeds; ++s) {
      const auto idx = static_cast<std::uint64_t>(s);
      seeds.push_back({{"index", s},
                       {"init_seed", derive_seed(c.master_seed, idx, "init")},
                       {"order_seed", derive_seed(c.master_seed, idx, "order")},
                       {"subset_seed", derive_seed(c.master_seed, idx, "subset")}});
    }
    json incomplete = json::array();
    for (const auto& s : report.strategies) {
      for (const auto& r : s.seeds) {
        if (!r.complete) {
          incomplete.push_back(
              {{"strategy", s.label()}, {"seed", r.seed_index}, {"diagnostic", r.diagnostic}});
        }
      }
    }
    const json manifest{{"config_hash", report.config_hash},
                        {"master_seed", c.master_seed},
                        {"corpus_seed", derive_seed(c.master_seed, "corpus")},
                        {"split_seed", derive_seed(c.master_seed, "split")},
                        {"seeds", seeds},
                        {"n_train", report.n_train},
                        {"n_valid", report.n_valid},
                        {"n_test", report.n_test},
                        {"incomplete_seeds", incomplete},
                        {"config", config_to_json(c)}};
    auto out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "report.json");
    out << report_to_json(report).dump() << '\n';
  }
}

}  // namespace curriculum
