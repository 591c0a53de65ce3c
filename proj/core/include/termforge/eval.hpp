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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "termforge/baseline.hpp"
#include "termforge/corpus.hpp"

namespace termforge {

/// Precision/recall/F triple. A missing value means the denominator was
/// zero. F is the harmonic mean when both sides exist, 0 when either side is
/// 0 and nothing otherwise.
struct Prf {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_score;

  friend bool operator==(const Prf&, const Prf&) = default;
};

Prf make_prf(std::optional<double> precision, std::optional<double> recall);

struct EvalOptions {
  int token_tolerance = 1;     // frames, per edge
  int boundary_tolerance = 1;  // frames

  friend bool operator==(const EvalOptions&, const EvalOptions&) = default;
};

struct EvalReport {
  std::string system;
  Prf grouping;
  Prf token;
  Prf type;
  Prf boundary;
  std::optional<double> ned;
  double coverage = 0.0;
  std::int64_t n_words = 0;
  std::int64_t n_pairs = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Mean normalized edit distance between the gold subword strings of every
/// within-cluster pair. Two empty gold strings count as distance 0. Null
/// when no cluster has two members.
std::optional<double> ned(const ClusterSet& clusters, const SegmentSet& segments, const GoldAnnotation& gold);

/// Frames covered by the union of clustered segment spans over all frames.
double coverage(const ClusterSet& clusters, const SegmentSet& segments, std::int64_t total_frames);

/// Pairwise grouping scores over segments carrying a gold label.
Prf grouping_prf(const ClusterSet& clusters, const SegmentSet& segments, const GoldAnnotation& gold);

/// Same, from precomputed labels indexed by segment id.
Prf grouping_prf(const ClusterSet& clusters, const std::vector<std::optional<int>>& labels);

/// Token and type scores. Clustered segments are matched against gold word
/// tokens when both edges agree within the tolerance.
std::pair<Prf, Prf> token_type_prf(const ClusterSet& clusters, const SegmentSet& segments,
                                   const GoldAnnotation& gold, int tolerance = 1);

/// Boundary scores against the edges of gold word tokens.
Prf boundary_prf(const ClusterSet& clusters, const SegmentSet& segments, const GoldAnnotation& gold,
                 int tolerance = 1);

/// (cluster count, sum of |C|(|C|-1)/2).
std::pair<std::int64_t, std::int64_t> n_words_n_pairs(const ClusterSet& clusters);

/// All metrics. Requires corpus.gold().
EvalReport evaluate(const ClusterSet& clusters, const SegmentSet& segments, const Corpus& corpus,
                    const EvalOptions& options = {}, std::string system = {});

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// Aligned text grid, percentages with one decimal, "NA" for missing values.
std::string report_table(const std::vector<EvalReport>& rows);

}  // namespace termforge
