#include "curriculum/metrics.hpp"

#include <cmath>
#include <limits>

#include "curriculum/error.hpp"

namespace curriculum {

namespace detail {

AlignmentCounts backtrack(const std::vector<EditOp>& op, std::size_t ref_len,
                          std::size_t hyp_len) {
  AlignmentCounts counts;
  counts.ref_len = ref_len;
  const std::size_t width = hyp_len + 1;
  std::size_t i = ref_len;
  std::size_t j = hyp_len;
  while (i > 0 || j > 0) {
    switch (op[i * width + j]) {
      case EditOp::kMatch:
        --i;
        --j;
        break;
      case EditOp::kSubstitute:
        ++counts.substitutions;
        --i;
        --j;
        break;
      case EditOp::kDelete:
        ++counts.deletions;
        --i;
        break;
      case EditOp::kInsert:
        ++counts.insertions;
        --j;
        break;
    }
  }
  return counts;
}

}  // namespace detail

double error_rate(const AlignmentCounts& totals) {
  if (totals.ref_len == 0) {
    throw Error(ErrorKind::kUndefined,
                "error rate is undefined for an empty reference");
  }
  return static_cast<double>(totals.distance()) /
         static_cast<double>(totals.ref_len);
}

double wer(std::span<const TokenId> ref, std::span<const TokenId> hyp) {
  return error_rate(edit_distance(ref, hyp));
}

double cer(std::string_view ref_chars, std::string_view hyp_chars) {
  return error_rate(edit_distance(ref_chars, hyp_chars));
}

std::string char_expansion(std::span<const TokenId> tokens,
                           std::span<const std::string> vocabulary) {
  std::string out;
  for (TokenId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocabulary.size()) {
      throw Error(ErrorKind::kValidation, "token id outside the vocabulary");
    }
    out += vocabulary[static_cast<std::size_t>(t)];
  }
  return out;
}

double normal_two_sided_p(double z) {
  if (std::isinf(z)) return 0.0;
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

MapssweResult mapsswe(const PairedErrorSample& sample) {
  if (sample.errors_a.size() != sample.errors_b.size()) {
    throw Error(ErrorKind::kValidation,
                "matched-pairs test needs the same utterances for both systems");
  }
  const std::size_t n = sample.errors_a.size();
  if (n < 2) {
    throw Error(ErrorKind::kValidation,
                "matched-pairs test needs at least two utterances");
  }
  std::vector<double> d(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = static_cast<double>(sample.errors_a[i] - sample.errors_b[i]);
    sum += d[i];
  }
  MapssweResult r;
  r.mean_difference = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - r.mean_difference) * (v - r.mean_difference);
  r.stddev = std::sqrt(ss / static_cast<double>(n - 1));

  if (r.stddev == 0.0) {
    if (r.mean_difference == 0.0) {
      r.z = 0.0;
      r.p_two_sided = 1.0;
    } else {
      r.z = std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
      r.p_two_sided = 0.0;
    }
    return r;
  }
  r.z = r.mean_difference / (r.stddev / std::sqrt(static_cast<double>(n)));
  r.p_two_sided = normal_two_sided_p(r.z);
  return r;
}

}  // namespace curriculum
