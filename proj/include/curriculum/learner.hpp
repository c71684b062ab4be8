#pragma once

// Per-frame linear softmax classifier trained by mini-batch SGD with gradient
// accumulation. It stands in for the recognizer whose per-example losses,
// decodes and confidences drive the adaptive curricula.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "curriculum/corpus.hpp"
#include "curriculum/metrics.hpp"
#include "curriculum/scoring.hpp"

namespace curriculum {

struct ToyModel {
  std::size_t vocab_size = 0;
  std::size_t feature_dim = 0;
  std::vector<double> weights;  // vocab_size x feature_dim, row-major
  std::vector<double> bias;     // vocab_size

  static ToyModel zeros(std::size_t vocab_size, std::size_t feature_dim);
  // Gaussian weights with standard deviation `scale`, zero bias.
  static ToyModel random(std::size_t vocab_size, std::size_t feature_dim,
                         double scale, std::uint64_t seed);

  std::size_t parameter_count() const { return weights.size() + bias.size(); }
  bool all_finite() const;
  bool operator==(const ToyModel&) const = default;
};

// Same shape as ToyModel's parameters.
struct Gradient {
  std::vector<double> weights;
  std::vector<double> bias;

  static Gradient zeros_like(const ToyModel& model);
  Gradient& operator+=(const Gradient& other);
  Gradient& operator*=(double factor);
};

struct LossAndGradient {
  double loss = 0.0;
  Gradient gradient;
};

// Softmax over the logits of one frame.
std::vector<double> frame_probabilities(const ToyModel& model,
                                        std::span<const double> frame);

// Mean per-frame negative log likelihood of the reference tokens and its
// exact gradient. Throws Error(kDimension) when the record does not fit the
// model.
LossAndGradient example_loss(const ToyModel& model, const UtteranceRecord& record);
double example_loss_value(const ToyModel& model, const UtteranceRecord& record);

struct Decoding {
  std::vector<TokenId> hypothesis;
  // Geometric mean of the chosen tokens' probabilities.
  double confidence = 1.0;
};

// Greedy per-frame argmax; ties go to the lower token id.
Decoding decode(const ToyModel& model, const UtteranceRecord& record);

struct TrainConfig {
  std::size_t micro_batch = 8;
  std::size_t accumulation_steps = 4;
  double learning_rate = 0.02;
  int n_epochs = 10;
  std::uint64_t seed = 0;
  // Standard deviation of the initial weights.
  double init_scale = 0.01;

  std::size_t effective_batch() const { return micro_batch * accumulation_steps; }
  void validate() const;
};

enum class Collect { kLossOnly, kLossAndMetric };

struct ExampleFeedback {
  std::string utterance_id;
  double loss = 0.0;
  bool has_metrics = false;
  double wer = 0.0;
  double cer = 0.0;
  double confidence = 1.0;
  AlignmentCounts word_counts;
  AlignmentCounts char_counts;
  double duration_s = 0.0;
};

struct EpochOutcome {
  ToyModel model;
  std::vector<ExampleFeedback> feedback;  // in visiting order
  // Primary score is the loss, or the WER when metrics were collected.
  ScoreTable scores;
  double mean_loss = 0.0;
  std::size_t updates = 0;
};

// One pass over `plan`. Each group of `accumulation_steps` micro-batches
// contributes the mean gradient of all its examples to a single SGD step; a
// trailing partial group is applied the same way. Feedback is measured with
// the parameters in effect when each example is visited.
EpochOutcome train_epoch(const ToyModel& model, const EpochPlan& plan,
                         const Corpus& corpus, const TrainConfig& config,
                         Collect collect);

struct Evaluation {
  double wer = 0.0;
  double cer = 0.0;
  double mean_loss = 0.0;
  AlignmentCounts word_totals;
  AlignmentCounts char_totals;
  std::vector<ExampleFeedback> examples;  // corpus order
};

Evaluation evaluate(const ToyModel& model, const Corpus& corpus);
ExampleFeedback evaluate_example(const ToyModel& model, const UtteranceRecord& record,
                                 std::span<const std::string> vocabulary);

// Trains from a seeded initialization with duration-ordered epochs.
ToyModel train_teacher(const Corpus& corpus, const TrainConfig& config);

// Versioned text checkpoint; parameters are written as hex floats so a
// save/load cycle is bit-exact.
void save_model(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_model(const std::filesystem::path& path);

}  // namespace curriculum
