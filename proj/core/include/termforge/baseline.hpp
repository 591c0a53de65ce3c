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
#include <map>
#include <vector>

#include "termforge/corpus.hpp"

namespace termforge {

/// What happens to a segment that is neither within `radius` of a leader nor
/// far enough (separation * radius) from all leaders to found a cluster.
enum class AmbiguousPolicy { kNearest, kDrop };

struct LeaderParams {
  double radius = 0.4;       // T, in normalized-Levenshtein units
  double separation = 1.8;   // a; new leaders must be >= a*T from all leaders
  int min_length = 3;        // R
  AmbiguousPolicy ambiguous = AmbiguousPolicy::kNearest;

  friend bool operator==(const LeaderParams&, const LeaderParams&) = default;
};

void validate(const LeaderParams& params);

struct Cluster {
  std::int64_t id = 0;
  std::int64_t leader = 0;              // segment id
  std::vector<std::int64_t> members;    // segment ids, ascending
  double mean_len = 0.0;                // average symbol-sequence length
  /// Members placed by the nearest-leader fallback rather than the radius
  /// test. Leader clustering only; empty elsewhere.
  std::vector<std::int64_t> nearest_assigned;
  /// Excess-of-mass stability; HDBSCAN clusters only.
  double stability = 0.0;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct ClusterSet {
  std::vector<Cluster> clusters;
  std::vector<std::int64_t> noise;  // segment ids left unclustered

  friend bool operator==(const ClusterSet&, const ClusterSet&) = default;
};

/// One pass in ascending segment-id order. Segments shorter than
/// params.min_length are skipped. Deterministic.
ClusterSet leader_cluster(const SegmentSet& segments, const LeaderParams& params);

struct ClusterSetStats {
  std::size_t count = 0;
  std::size_t total_members = 0;
  std::map<std::size_t, std::size_t> size_histogram;  // size -> number of clusters
  std::vector<double> mean_len;                       // per cluster, in order

  friend bool operator==(const ClusterSetStats&, const ClusterSetStats&) = default;
};

ClusterSetStats cluster_set_stats(const ClusterSet& clusters);

/// Average symbol length of the given segment ids. `segments` must be
/// indexed by id (segments[id].id == id).
double mean_symbol_length(const SegmentSet& segments, const std::vector<std::int64_t>& members);

/// Throws Error unless segments[i].id == i for every i.
void require_dense_ids(const SegmentSet& segments);

/// clusters_*.json: {"clusters":[{id, leader, members, mean_len, stability?}], "noise":[...]}.
std::string clusters_to_json(const ClusterSet& clusters, bool with_stability);
ClusterSet clusters_from_json(const std::string& text);

}  // namespace termforge
