// Copyright 2026 The termforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "termforge/corpus.hpp"

namespace termforge {

/// Local alignment scores. min_length is the minimum subword length of a
/// discovered segment.
struct AlignScoring {
  double match_score = 1.0;
  double mismatch_penalty = -1.0;
  double gap_penalty = -1.0;
  double min_align_score = 3.0;
  int min_length = 3;

  friend bool operator==(const AlignScoring&, const AlignScoring&) = default;
};

void validate(const AlignScoring& scoring);

/// Half-open index interval into a symbol sequence.
struct IndexSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t length() const { return end - begin; }
  friend bool operator==(const IndexSpan&, const IndexSpan&) = default;
};

struct Alignment {
  IndexSpan a;
  IndexSpan b;
  double score = 0.0;

  friend bool operator==(const Alignment&, const Alignment&) = default;
};

/// Unit-cost edit distance.
std::size_t levenshtein(std::span<const Symbol> a, std::span<const Symbol> b);

/// levenshtein / max(len). Throws Error("undefined") when both are empty.
double normalized_levenshtein(std::span<const Symbol> a, std::span<const Symbol> b);

/// Smith-Waterman local alignments, extracted best-first. After each
/// accepted alignment its rows and columns are masked and the DP re-run, so
/// returned spans never overlap within a or within b. Traceback prefers
/// diagonal, then up, then left; the best cell is the first maximum in
/// row-major order.
///
/// `self_pair` aligns a sequence against itself: only cells strictly above
/// the main diagonal are used, masking applies to both axes, and alignments
/// whose two spans overlap are rejected.
std::vector<Alignment> local_align(std::span<const Symbol> a, std::span<const Symbol> b,
                                   const AlignScoring& scoring, bool self_pair = false,
                                   std::size_t max_alignments = 64);

struct DiscoveryOptions {
  /// Guard on the number of utterance pairs (including self-pairs).
  std::size_t max_pairs = 5'000'000;
  std::size_t max_alignments_per_pair = 64;

  friend bool operator==(const DiscoveryOptions&, const DiscoveryOptions&) = default;
};

/// Aligns every unordered utterance pair (self-pairs included) and turns
/// each aligned span into a segment. Duplicate (utterance, span) hits are
/// merged; ids follow first discovery in pair order.
SegmentSet discover_segments(const Corpus& corpus, const AlignScoring& scoring,
                             const DiscoveryOptions& options = {});

}  // namespace termforge
