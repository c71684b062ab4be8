#include "curriculum/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/core.h>

#include "curriculum/error.hpp"
#include "curriculum/rng.hpp"

namespace curriculum {

ToyModel ToyModel::zeros(std::size_t vocab_size, std::size_t feature_dim) {
  ToyModel m;
  m.vocab_size = vocab_size;
  m.feature_dim = feature_dim;
  m.weights.assign(vocab_size * feature_dim, 0.0);
  m.bias.assign(vocab_size, 0.0);
  return m;
}

ToyModel ToyModel::random(std::size_t vocab_size, std::size_t feature_dim,
                          double scale, std::uint64_t seed) {
  ToyModel m = zeros(vocab_size, feature_dim);
  Rng rng(seed);
  for (auto& w : m.weights) w = scale * rng.gaussian();
  return m;
}

bool ToyModel::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(weights.begin(), weights.end(), finite) &&
         std::all_of(bias.begin(), bias.end(), finite);
}

Gradient Gradient::zeros_like(const ToyModel& model) {
  return Gradient{std::vector<double>(model.weights.size(), 0.0),
                  std::vector<double>(model.bias.size(), 0.0)};
}

Gradient& Gradient::operator+=(const Gradient& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += other.weights[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += other.bias[i];
  return *this;
}

Gradient& Gradient::operator*=(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : bias) b *= factor;
  return *this;
}

namespace {

void check_fits(const ToyModel& model, const UtteranceRecord& record) {
  if (!record.has_frames()) {
    throw Error(ErrorKind::kUnsupported,
                "utterance '" + record.id + "' has no feature frames");
  }
  if (record.frames.size() != record.tokens.size() * model.feature_dim) {
    throw Error(ErrorKind::kDimension,
                fmt::format("utterance '{}': {} frame values do not match {} tokens "
                            "of dimension {}",
                            record.id, record.frames.size(), record.tokens.size(),
                            model.feature_dim));
  }
  for (TokenId t : record.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= model.vocab_size) {
      throw Error(ErrorKind::kDimension,
                  fmt::format("utterance '{}': token {} outside a {}-way model",
                              record.id, t, model.vocab_size));
    }
  }
}

void logits_into(const ToyModel& model, std::span<const double> x,
                 std::vector<double>& z) {
  const std::size_t d = model.feature_dim;
  z.resize(model.vocab_size);
  for (std::size_t k = 0; k < model.vocab_size; ++k) {
    const double* w = model.weights.data() + k * d;
    double acc = model.bias[k];
    for (std::size_t c = 0; c < d; ++c) acc += w[c] * x[c];
    z[k] = acc;
  }
}

// Turns logits into probabilities in place and returns log(sum(exp(z))).
double softmax_in_place(std::vector<double>& z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return peak + std::log(sum);
}

}  // namespace

std::vector<double> frame_probabilities(const ToyModel& model,
                                        std::span<const double> frame) {
  if (frame.size() != model.feature_dim) {
    throw Error(ErrorKind::kDimension, "frame dimension does not match the model");
  }
  std::vector<double> z;
  logits_into(model, frame, z);
  softmax_in_place(z);
  return z;
}

LossAndGradient example_loss(const ToyModel& model, const UtteranceRecord& record) {
  check_fits(model, record);
  const std::size_t d = model.feature_dim;
  const std::size_t frames = record.tokens.size();
  LossAndGradient out{0.0, Gradient::zeros_like(model)};
  std::vector<double> z;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto x = record.frame(t, d);
    logits_into(model, x, z);
    const auto y = static_cast<std::size_t>(record.tokens[t]);
    const double target_logit = z[y];
    const double log_norm = softmax_in_place(z);
    out.loss += log_norm - target_logit;
    // d(-log p_y)/dz = p - e_y
    z[y] -= 1.0;
    for (std::size_t k = 0; k < model.vocab_size; ++k) {
      double* g = out.gradient.weights.data() + k * d;
      for (std::size_t c = 0; c < d; ++c) g[c] += z[k] * x[c];
      out.gradient.bias[k] += z[k];
    }
  }
  out.loss /= static_cast<double>(frames);
  out.gradient *= 1.0 / static_cast<double>(frames);
  return out;
}

double example_loss_value(const ToyModel& model, const UtteranceRecord& record) {
  check_fits(model, record);
  const std::size_t d = model.feature_dim;
  double loss = 0.0;
  std::vector<double> z;
  for (std::size_t t = 0; t < record.tokens.size(); ++t) {
    logits_into(model, record.frame(t, d), z);
    const double target_logit = z[static_cast<std::size_t>(record.tokens[t])];
    loss += softmax_in_place(z) - target_logit;
  }
  return loss / static_cast<double>(record.tokens.size());
}

Decoding decode(const ToyModel& model, const UtteranceRecord& record) {
  check_fits(model, record);
  const std::size_t d = model.feature_dim;
  Decoding out;
  out.hypothesis.reserve(record.tokens.size());
  double log_conf = 0.0;
  std::vector<double> z;
  for (std::size_t t = 0; t < record.tokens.size(); ++t) {
    logits_into(model, record.frame(t, d), z);
    softmax_in_place(z);
    // max_element returns the first maximum, i.e. the lowest token id.
    const auto best = std::max_element(z.begin(), z.end());
    out.hypothesis.push_back(static_cast<TokenId>(best - z.begin()));
    log_conf += std::log(*best);
  }
  out.confidence = std::exp(log_conf / static_cast<double>(record.tokens.size()));
  return out;
}

void TrainConfig::validate() const {
  if (micro_batch == 0 || accumulation_steps == 0) {
    throw Error(ErrorKind::kValidation,
                "micro_batch and accumulation_steps must be positive");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kValidation, "learning_rate must be finite and >= 0");
  }
  if (n_epochs < 1) throw Error(ErrorKind::kValidation, "n_epochs must be >= 1");
  if (!(init_scale >= 0.0)) {
    throw Error(ErrorKind::kValidation, "init_scale must be >= 0");
  }
}

ExampleFeedback evaluate_example(const ToyModel& model, const UtteranceRecord& record,
                                 std::span<const std::string> vocabulary) {
  ExampleFeedback fb;
  fb.utterance_id = record.id;
  fb.duration_s = record.duration_s;
  fb.loss = example_loss_value(model, record);
  const auto dec = decode(model, record);
  fb.has_metrics = true;
  fb.confidence = dec.confidence;
  fb.word_counts = edit_distance(std::span<const TokenId>(record.tokens),
                                 std::span<const TokenId>(dec.hypothesis));
  fb.wer = error_rate(fb.word_counts);
  fb.char_counts = edit_distance(char_expansion(record.tokens, vocabulary),
                                 char_expansion(dec.hypothesis, vocabulary));
  fb.cer = error_rate(fb.char_counts);
  return fb;
}

namespace {

void apply_update(ToyModel& model, Gradient& sum, std::size_t examples, double lr) {
  const double step = lr / static_cast<double>(examples);
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    model.weights[i] -= step * sum.weights[i];
  }
  for (std::size_t i = 0; i < model.bias.size(); ++i) {
    model.bias[i] -= step * sum.bias[i];
  }
  std::fill(sum.weights.begin(), sum.weights.end(), 0.0);
  std::fill(sum.bias.begin(), sum.bias.end(), 0.0);
}

}  // namespace

EpochOutcome train_epoch(const ToyModel& model, const EpochPlan& plan,
                         const Corpus& corpus, const TrainConfig& config,
                         Collect collect) {
  config.validate();
  std::unordered_map<std::string, const UtteranceRecord*> index;
  index.reserve(corpus.size());
  for (const auto& r : corpus.records) index.emplace(r.id, &r);

  EpochOutcome out;
  out.model = model;
  out.scores.epoch = plan.epoch;
  out.scores.strategy_kind = collect == Collect::kLossAndMetric
                                 ? StrategyKind::kWerScore
                                 : StrategyKind::kSeq2SeqLoss;
  out.feedback.reserve(plan.size());

  Gradient pending = Gradient::zeros_like(model);
  std::size_t pending_examples = 0;
  std::size_t pending_batches = 0;
  double loss_sum = 0.0;

  const std::size_t n = plan.size();
  for (std::size_t start = 0; start < n; start += config.micro_batch) {
    const std::size_t stop = std::min(n, start + config.micro_batch);
    // Every example of a micro-batch sees the same parameters.
    for (std::size_t i = start; i < stop; ++i) {
      const auto& id = plan.ordered_ids[i];
      const auto it = index.find(id);
      if (it == index.end()) {
        throw Error(ErrorKind::kValidation,
                    "epoch plan names utterance '" + id + "' not in the corpus");
      }
      const UtteranceRecord& rec = *it->second;
      auto lg = example_loss(out.model, rec);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorKind::kNumeric,
                    fmt::format("non-finite loss on utterance '{}' in epoch {}", id,
                                plan.epoch));
      }
      ExampleFeedback fb;
      if (collect == Collect::kLossAndMetric) {
        fb = evaluate_example(out.model, rec, corpus.vocabulary);
      } else {
        fb.utterance_id = id;
        fb.duration_s = rec.duration_s;
      }
      fb.loss = lg.loss;
      pending += lg.gradient;
      ++pending_examples;
      loss_sum += lg.loss;

      ScoreEntry entry;
      entry.utterance_id = id;
      entry.duration_s = rec.duration_s;
      if (fb.has_metrics) {
        entry.primary_score = fb.wer;
        entry.confidence = fb.confidence;
      } else {
        entry.primary_score = fb.loss;
      }
      out.scores.insert(std::move(entry));
      out.feedback.push_back(std::move(fb));
    }
    ++pending_batches;
    if (pending_batches == config.accumulation_steps) {
      apply_update(out.model, pending, pending_examples, config.learning_rate);
      ++out.updates;
      pending_examples = 0;
      pending_batches = 0;
    }
  }
  if (pending_examples > 0) {
    apply_update(out.model, pending, pending_examples, config.learning_rate);
    ++out.updates;
  }
  if (!out.model.all_finite()) {
    throw Error(ErrorKind::kNumeric,
                fmt::format("parameters became non-finite in epoch {}", plan.epoch));
  }
  out.mean_loss = n > 0 ? loss_sum / static_cast<double>(n) : 0.0;
  return out;
}

Evaluation evaluate(const ToyModel& model, const Corpus& corpus) {
  if (corpus.empty()) {
    throw Error(ErrorKind::kValidation, "cannot evaluate on an empty corpus");
  }
  Evaluation ev;
  ev.examples.reserve(corpus.size());
  double loss_sum = 0.0;
  for (const auto& rec : corpus.records) {
    auto fb = evaluate_example(model, rec, corpus.vocabulary);
    ev.word_totals += fb.word_counts;
    ev.char_totals += fb.char_counts;
    loss_sum += fb.loss;
    ev.examples.push_back(std::move(fb));
  }
  ev.wer = error_rate(ev.word_totals);
  ev.cer = error_rate(ev.char_totals);
  ev.mean_loss = loss_sum / static_cast<double>(corpus.size());
  return ev;
}

ToyModel train_teacher(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  if (!corpus.has_frames()) {
    throw Error(ErrorKind::kUnsupported, "teacher training needs feature frames");
  }
  ToyModel model = ToyModel::random(corpus.vocab_size, corpus.feature_dim,
                                    config.init_scale,
                                    derive_seed(config.seed, "teacher-init"));
  EpochPlan plan = order_by_scores(score_duration(corpus), TieBreak::kIdOnly);
  for (int epoch = 1; epoch <= config.n_epochs; ++epoch) {
    plan.epoch = epoch;
    model = train_epoch(model, plan, corpus, config, Collect::kLossOnly).model;
  }
  return model;
}

void save_model(const ToyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write model " + path.string());
  out << "curriculum-toy-model 1\n";
  out << model.vocab_size << ' ' << model.feature_dim << '\n';
  for (std::size_t k = 0; k < model.vocab_size; ++k) {
    for (std::size_t c = 0; c < model.feature_dim; ++c) {
      if (c > 0) out << ' ';
      out << fmt::format("{:a}", model.weights[k * model.feature_dim + c]);
    }
    out << '\n';
  }
  for (std::size_t k = 0; k < model.vocab_size; ++k) {
    if (k > 0) out << ' ';
    out << fmt::format("{:a}", model.bias[k]);
  }
  out << '\n';
}

ToyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open model " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "curriculum-toy-model" || version != 1) {
    throw Error(ErrorKind::kParse, path.string() + ": not a version-1 model checkpoint");
  }
  std::size_t k = 0;
  std::size_t d = 0;
  if (!(in >> k >> d)) throw Error(ErrorKind::kParse, path.string() + ": bad shape");
  ToyModel model = ToyModel::zeros(k, d);
  auto read_value = [&](double& v) {
    std::string token;
    if (!(in >> token)) {
      throw Error(ErrorKind::kParse, path.string() + ": truncated parameters");
    }
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      throw Error(ErrorKind::kParse, path.string() + ": bad value '" + token + "'");
    }
  };
  for (auto& w : model.weights) read_value(w);
  for (auto& b : model.bias) read_value(b);
  return model;
}

}  // namespace curriculum
