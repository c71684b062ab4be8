#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "curriculum/corpus.hpp"

namespace curriculum::testing {

// Metadata-only corpus with the given durations; ids are "u0", "u1", ...
inline Corpus corpus_from_durations(const std::vector<double>& durations) {
  Corpus c;
  c.vocab_size = 1;
  c.feature_dim = 1;
  c.vocabulary = {"a"};
  for (std::size_t i = 0; i < durations.size(); ++i) {
    UtteranceRecord r;
    r.id = "u" + std::to_string(i);
    r.duration_s = durations[i];
    r.tokens = {0};
    c.records.push_back(r);
  }
  return c;
}

inline CorpusSpec small_spec(std::size_t n = 60) {
  CorpusSpec spec;
  spec.n_utterances = n;
  spec.vocab_size = 5;
  spec.feature_dim = 6;
  spec.min_tokens = 3;
  spec.max_tokens = 7;
  return spec;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("curriculum-unit-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace curriculum::testing
