#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curriculum/corpus.hpp"

namespace curriculum {

struct AlignmentCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;

  std::size_t distance() const { return substitutions + deletions + insertions; }

  AlignmentCounts& operator+=(const AlignmentCounts& other) {
    substitutions += other.substitutions;
    deletions += other.deletions;
    insertions += other.insertions;
    ref_len += other.ref_len;
    return *this;
  }
};

namespace detail {

enum class EditOp : unsigned char { kMatch, kSubstitute, kDelete, kInsert };

AlignmentCounts backtrack(const std::vector<EditOp>& op, std::size_t ref_len,
                          std::size_t hyp_len);

}  // namespace detail

// Levenshtein alignment with unit costs. When several optimal alignments
// exist, backtracking prefers substitution, then deletion, then insertion.
template <typename T>
AlignmentCounts edit_distance(std::span<const T> ref, std::span<const T> hyp) {
  using detail::EditOp;
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t width = m + 1;
  std::vector<std::size_t> cost((n + 1) * width);
  std::vector<EditOp> op((n + 1) * width, EditOp::kMatch);
  for (std::size_t i = 1; i <= n; ++i) {
    cost[i * width] = i;
    op[i * width] = EditOp::kDelete;
  }
  for (std::size_t j = 1; j <= m; ++j) {
    cost[j] = j;
    op[j] = EditOp::kInsert;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      std::size_t best = cost[(i - 1) * width + (j - 1)] + (same ? 0 : 1);
      EditOp best_op = same ? EditOp::kMatch : EditOp::kSubstitute;
      const std::size_t del = cost[(i - 1) * width + j] + 1;
      if (del < best) {
        best = del;
        best_op = EditOp::kDelete;
      }
      const std::size_t ins = cost[i * width + (j - 1)] + 1;
      if (ins < best) {
        best = ins;
        best_op = EditOp::kInsert;
      }
      cost[i * width + j] = best;
      op[i * width + j] = best_op;
    }
  }
  return detail::backtrack(op, n, m);
}

inline AlignmentCounts edit_distance(std::span<const TokenId> ref,
                                     std::span<const TokenId> hyp) {
  return edit_distance<TokenId>(ref, hyp);
}

inline AlignmentCounts edit_distance(std::string_view ref, std::string_view hyp) {
  return edit_distance<char>(std::span<const char>(ref.data(), ref.size()),
                             std::span<const char>(hyp.data(), hyp.size()));
}

// Errors per reference token. Throws Error(kUndefined) for an empty reference.
double wer(std::span<const TokenId> ref, std::span<const TokenId> hyp);
double cer(std::string_view ref_chars, std::string_view hyp_chars);

// Token names concatenated without separators; the CER character stream.
std::string char_expansion(std::span<const TokenId> tokens,
                           std::span<const std::string> vocabulary);

// Corpus-level rate: total errors over total reference length.
double error_rate(const AlignmentCounts& totals);

// Per-utterance error counts of two systems over the same utterances.
struct PairedErrorSample {
  std::vector<long long> errors_a;
  std::vector<long long> errors_b;
};

struct MapssweResult {
  double mean_difference = 0.0;
  double stddev = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
};

// Matched-pairs sentence-segment word error test, one segment per utterance,
// normal approximation. A zero spread with a nonzero mean gives z = +/-inf
// and p = 0.
MapssweResult mapsswe(const PairedErrorSample& sample);

// Two-sided standard normal tail probability P(|Z| >= |z|).
double normal_two_sided_p(double z);

}  // namespace curriculum
