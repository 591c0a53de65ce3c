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
#include <string>
#include <utility>
#include <vector>

#include "termforge/baseline.hpp"
#include "termforge/corpus.hpp"

namespace termforge {

/// Within-cluster Levenshtein mean and standard deviation.
struct PurityStats {
  double mu_s = 0.0;
  double sigma_s = 0.0;
};

/// Cross-cluster Levenshtein mean and standard deviation.
struct ContrastStats {
  double mu_d = 0.0;
  double sigma_d = 0.0;
};

struct MiningThresholds {
  double mu_s = 0.2;
  double sigma_s = 0.2;
  double mu_d = 0.4;
  double sigma_d = 0.2;

  friend bool operator==(const MiningThresholds&, const MiningThresholds&) = default;
};

void validate(const MiningThresholds& t);

/// Statistics over all |C|^2 ordered member pairs, self-pairs included.
/// With include_self = false the |C|(|C|-1) distinct ordered pairs are used
/// instead (singletons then report (0, 0)). Distances are unnormalized.
PurityStats purity_stats(const Cluster& cluster, const SegmentSet& segments, bool include_self = true);

ContrastStats contrast_stats(const Cluster& c1, const Cluster& c2, const SegmentSet& segments);

/// Clusters with mu_s < t.mu_s * mean_len and sigma_s < t.sigma_s * mean_len.
std::vector<Cluster> select_pure_clusters(const ClusterSet& clusters, const SegmentSet& segments,
                                          const MiningThresholds& thresholds, bool include_self = true);

/// Index pairs (i < j) into `retained` with
/// mu_d > t.mu_d * avg_len and sigma_d < t.sigma_d * avg_len, where
/// avg_len = (mean_len_i + mean_len_j) / 2.
std::vector<std::pair<std::size_t, std::size_t>> select_contrasting_pairs(
    const std::vector<Cluster>& retained, const SegmentSet& segments, const MiningThresholds& thresholds);

struct SiamesePair {
  std::int64_t a = 0;
  std::int64_t b = 0;
  int label = 0;  // 1 matched, 0 mismatched
  std::int64_t cluster_a = 0;
  std::int64_t cluster_b = 0;

  friend bool operator==(const SiamesePair&, const SiamesePair&) = default;
};

struct Triplet {
  std::int64_t anchor = 0;
  std::int64_t positive = 0;
  std::int64_t negative = 0;
  std::int64_t cluster_pos = 0;
  std::int64_t cluster_neg = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct PairManifest {
  std::vector<SiamesePair> siamese_pairs;
  std::vector<Triplet> triplets;
  std::uint64_t sample_seed = 0;

  friend bool operator==(const PairManifest&, const PairManifest&) = default;
};

/// Samples with replacement. Positives are uniform over (retained cluster,
/// unordered member pair); negatives uniform over (contrasting pair, cross
/// member pair). Siamese labels alternate 1, 0, 1, ... so the classes differ
/// by at most one. A triplet draws a positive pair, then a negative uniformly
/// among members of clusters contrasting with the positive's cluster.
/// Throws Error("no positive source") / Error("no negative source").
PairManifest sample_manifest(const std::vector<Cluster>& retained,
                             const std::vector<std::pair<std::size_t, std::size_t>>& contrasting,
                             std::size_t n_siamese, std::size_t n_triplet, std::uint64_t seed);

std::string manifest_to_json(const PairManifest& manifest);
PairManifest manifest_from_json(const std::string& text);

}  // namespace termforge
