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
#include <cstdint>
#include <vector>

#include "termforge/baseline.hpp"
#include "termforge/dense.hpp"

namespace termforge {

enum class Extraction { kEom, kHybrid };

struct HdbscanParams {
  int min_cluster_size = 5;
  int min_samples = 5;                     // k for core distances
  double cluster_selection_epsilon = 0.0;  // used by hybrid extraction
  /// The root may be selected as a single cluster when it has at least
  /// min_cluster_size points.
  bool allow_single_cluster = false;
  std::size_t max_points = 20000;

  friend bool operator==(const HdbscanParams&, const HdbscanParams&) = default;
};

void validate(const HdbscanParams& params);

double euclidean(std::span<const double> a, std::span<const double> b);

/// Distance to the k-th nearest other point. Throws Error if n <= k.
std::vector<double> core_distances(const DenseMatrix& points, int k);

/// d_mr(i, j) = max(core_i, core_j, d(i, j)), zero diagonal.
DenseMatrix mutual_reachability(const DenseMatrix& points, const std::vector<double>& core);

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
  double tiebreak = 0.0;  // secondary key among equal weights

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Prim's algorithm on a dense symmetric matrix, started at vertex 0. Ties
/// pick the smaller vertex index. Edges are listed in insertion order.
std::vector<Edge> mst(const DenseMatrix& distances);

/// Minimum spanning tree of mutual_reachability(points, core) without
/// materializing the n x n matrix. Equal reachability weights are ordered by
/// the plain Euclidean distance (kept in Edge::tiebreak), which makes the
/// tree and the merge order independent of point order for generic data.
std::vector<Edge> mst_mutual_reachability(const DenseMatrix& points, const std::vector<double>& core);

/// Single-linkage merge. Nodes 0..n-1 are points; merge i creates node n+i.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::size_t n_points = 0;
  std::vector<Merge> merges;
};

/// Union-find over edges sorted by (weight, tiebreak, input index). Throws Error if the
/// edges do not form a spanning tree over n_points vertices.
Dendrogram build_hierarchy(std::size_t n_points, const std::vector<Edge>& edges);

/// Row of a condensed tree. Children below n_points are points falling out
/// of `parent` at `lambda`; larger ids are child clusters born at `lambda`.
struct CondensedRow {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t child_size = 0;

  friend bool operator==(const CondensedRow&, const CondensedRow&) = default;
};

/// Cluster ids run from n_points (the root) upwards; a cluster's parent
/// always has a smaller id.
struct CondensedTree {
  std::size_t n_points = 0;
  std::size_t min_cluster_size = 0;
  std::vector<CondensedRow> rows;
  std::vector<double> birth_lambda;         // per cluster (index id - n_points)
  std::vector<std::size_t> parent;          // per cluster; root points to itself
  std::vector<std::size_t> size;            // points in each cluster at birth
  std::vector<double> stability;            // sum over points of (lambda_leave - lambda_birth)

  [[nodiscard]] std::size_t root() const { return n_points; }
  [[nodiscard]] std::size_t cluster_count() const { return birth_lambda.size(); }
};

/// lambda = 1 / distance. Zero-distance merges (exact duplicates) use the
/// smallest positive merge distance in the dendrogram instead, so every
/// lambda and stability is finite.
CondensedTree condense(const Dendrogram& dendrogram, std::size_t min_cluster_size);

/// Canonical labels: -1 is noise; clusters are numbered by decreasing size,
/// ties broken by smallest member index.
struct Labelling {
  std::vector<int> labels;
  std::vector<std::size_t> tree_cluster;  // condensed-tree id of each label
};

/// Excess-of-mass selection.
Labelling extract_eom(const CondensedTree& tree, bool allow_single_cluster = false);

/// EOM, then every selection born below `epsilon` (birth distance
/// 1/lambda_birth < epsilon) is replaced by its closest ancestor born at
/// distance >= epsilon. The root counts as born at infinite distance, so it
/// can be reached this way even when allow_single_cluster is false (that flag
/// only governs the EOM pass). epsilon = 0 reproduces extract_eom.
Labelling extract_hybrid(const CondensedTree& tree, double epsilon, bool allow_single_cluster = false);

/// Renames labels canonically (see Labelling).
std::vector<int> canonical_labels(const std::vector<int>& labels);

struct HdbscanResult {
  Labelling labelling;
  std::vector<double> stability;  // per label
  std::vector<std::size_t> exemplar;  // per label: member with the largest fall-out lambda
};

/// Full pipeline: core distances, mutual reachability MST, hierarchy,
/// condensation, extraction. Requires n > max(min_samples, min_cluster_size).
HdbscanResult hdbscan(const DenseMatrix& points, const HdbscanParams& params, Extraction extraction);

/// Cluster set over segment ids (point i is segment id i); noise points are
/// listed in ClusterSet::noise. mean_len is left at 0.
ClusterSet to_cluster_set(const HdbscanResult& result);

}  // namespace termforge
