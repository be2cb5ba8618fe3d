// include/werfair/alignment.hpp

// Copyright 2026  The werfair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WERFAIR_ALIGNMENT_HPP_
#define WERFAIR_ALIGNMENT_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "werfair/errors.hpp"

namespace werfair {

using TokenSeq = std::vector<std::string>;

/// Word-level edit counts of one utterance against its reference.
struct ErrorCounts {
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t substitutions = 0;
  std::int64_t ref_words = 0;

  std::int64_t total() const { return insertions + deletions + substitutions; }
  std::int64_t hyp_words() const { return ref_words - deletions + insertions; }

  ErrorCounts &operator+=(const ErrorCounts &other) {
    insertions += other.insertions;
    deletions += other.deletions;
    substitutions += other.substitutions;
    ref_words += other.ref_words;
    return *this;
  }

  friend bool operator==(const ErrorCounts &, const ErrorCounts &) = default;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace detail

/// Splits on runs of ASCII whitespace. With `normalize`, ASCII letters are
/// lowercased; bytes outside ASCII pass through unchanged.
inline TokenSeq tokenize(std::string_view text, bool normalize = true) {
  TokenSeq tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_space(text[j])) ++j;
    if (j > i) {
      std::string token(text.substr(i, j - i));
      if (normalize)
        for (char &c : token)
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

/// Minimum edit distance alignment with unit costs. Among equal-cost
/// alignments the traceback prefers substitution (or match), then insertion,
/// then deletion; only the ins/del/sub split depends on this choice.
inline ErrorCounts align(std::span<const std::string> ref,
                         std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  const std::size_t stride = m + 1;
  std::vector<std::int64_t> cost((n + 1) * stride);
  for (std::size_t j = 0; j <= m; ++j) cost[j] = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cost[i * stride] = static_cast<std::int64_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::int64_t diag =
          cost[(i - 1) * stride + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::int64_t ins = cost[i * stride + j - 1] + 1;
      const std::int64_t del = cost[(i - 1) * stride + j] + 1;
      cost[i * stride + j] = std::min(diag, std::min(ins, del));
    }
  }

  ErrorCounts counts;
  counts.ref_words = static_cast<std::int64_t>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::int64_t here = cost[i * stride + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (here == cost[(i - 1) * stride + j - 1] + (same ? 0 : 1)) {
        if (!same) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && here == cost[i * stride + j - 1] + 1) {
      ++counts.insertions;
      --j;
      continue;
    }
    ++counts.deletions;
    --i;
  }
  return counts;
}

/// Corpus WER: total errors over total reference words. May exceed 1.
inline double corpus_wer(std::span<const ErrorCounts> counts) {
  std::int64_t errors = 0, words = 0;
  for (const auto &c : counts) {
    errors += c.total();
    words += c.ref_words;
  }
  if (words <= 0) throw EmptyCorpusError();
  return static_cast<double>(errors) / static_cast<double>(words);
}

}  // namespace werfair

#endif  // WERFAIR_ALIGNMENT_HPP_
