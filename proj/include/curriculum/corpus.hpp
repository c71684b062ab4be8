#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace curriculum {

using TokenId = int;

// One training example. Frames are stored row-major, one row of
// `feature_dim` values per token; ingested manifests carry no frames.
struct UtteranceRecord {
  std::string id;
  double duration_s = 0.0;
  std::vector<TokenId> tokens;
  std::vector<double> frames;
  std::optional<double> noise_sigma;

  bool has_frames() const { return !frames.empty(); }
  std::size_t length() const { return tokens.size(); }
  std::span<const double> frame(std::size_t t, std::size_t dim) const {
    return std::span<const double>(frames).subspan(t * dim, dim);
  }
};

struct CorpusSpec {
  std::size_t n_utterances = 2000;
  std::size_t vocab_size = 12;
  std::size_t feature_dim = 16;
  std::size_t min_tokens = 10;
  std::size_t max_tokens = 20;
  double min_noise_sigma = 0.1;
  double max_noise_sigma = 1.0;
  double frame_seconds = 0.5;
  double prototype_scale = 1.0;

  // Throws Error(kValidation) naming the first violated constraint.
  void validate() const;
};

struct Corpus {
  std::vector<UtteranceRecord> records;
  // Seconds of audio per token. Zero for ingested manifests, where durations
  // come straight from the file.
  double frame_seconds = 0.0;
  std::size_t vocab_size = 0;
  std::size_t feature_dim = 0;
  // Printable name for every token id; CER is computed over these.
  std::vector<std::string> vocabulary;

  // Present when the corpus was generated rather than ingested.
  std::optional<CorpusSpec> spec;
  std::optional<std::uint64_t> seed;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  bool has_frames() const;
  double total_seconds() const;
  const UtteranceRecord& at(const std::string& id) const;
  const UtteranceRecord* find(const std::string& id) const;

  // Checks id uniqueness, token range and frame shapes.
  void validate() const;
};

// Non-owning view of a subset of a corpus, in a caller-chosen order.
using RecordView = std::vector<const UtteranceRecord*>;

RecordView view_of(const Corpus& corpus);

// Unique pronounceable name for a token id: 0 -> "a", 1 -> "ka", 2 -> "ke".
std::string token_name(TokenId id);

Corpus generate_corpus(const CorpusSpec& spec, std::uint64_t seed);

// Reads a `id,duration_s,transcript` CSV manifest. Token names are assigned
// ids in order of first appearance.
Corpus load_manifest(const std::filesystem::path& path);
void save_manifest(const Corpus& corpus, const std::filesystem::path& path);

// JSON persistence of a full corpus (spec, seed, vocabulary and records).
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

// Cuts a record into consecutive chunks of at most `max_duration_s`. Tokens
// (and their frames) are divided in proportion to chunk duration using
// cumulative rounding, so the counts always sum to the original.
std::vector<UtteranceRecord> segment_utterance(const UtteranceRecord& record,
                                               double max_duration_s,
                                               std::size_t feature_dim);

Corpus segment_corpus(const Corpus& corpus, double max_duration_s);

// Seeded partition into train / valid / test. Each held-out part gets
// round(fraction * n) records; the rest is train. Record order is preserved
// within each part.
struct CorpusSplit {
  Corpus train;
  Corpus valid;
  Corpus test;
};

CorpusSplit split_corpus(const Corpus& corpus, double valid_fraction,
                         double test_fraction, std::uint64_t seed);

}  // namespace curriculum
