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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "termforge/error.hpp"
#include "termforge/recluster.hpp"

using namespace termforge;

namespace {

DenseMatrix random_points(std::mt19937_64& g, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  DenseMatrix m(n, dim);
  for (auto& v : m.values) v = nd(g);
  return m;
}

// Isotropic Gaussian blobs; blob b is centred at centers[b].
DenseMatrix blobs(std::mt19937_64& g, const std::vector<std::vector<double>>& centers, std::size_t per_blob,
                  double spread) {
  std::normal_distribution<double> nd(0.0, spread);
  const std::size_t dim = centers.front().size();
  DenseMatrix m(centers.size() * per_blob, dim);
  for (std::size_t b = 0; b < centers.size(); ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      for (std::size_t d = 0; d < dim; ++d) m.at(b * per_blob + i, d) = centers[b][d] + nd(g);
    }
  }
  return m;
}

DenseMatrix pairwise(const DenseMatrix& pts) {
  DenseMatrix d(pts.rows, pts.rows);
  for (std::size_t i = 0; i < pts.rows; ++i) {
    for (std::size_t j = 0; j < pts.rows; ++j) d.at(i, j) = euclidean(pts.row(i), pts.row(j));
  }
  return d;
}

double total_weight(const std::vector<Edge>& edges) {
  std::vector<double> w;
  for (const auto& e : edges) w.push_back(e.weight);
  return oracle::ascending_sum(w);
}

// Partition as a set of point sets, ignoring label names; noise is dropped.
std::set<std::set<std::size_t>> partition(const std::vector<int>& labels) {
  std::map<int, std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) groups[labels[i]].insert(i);
  }
  std::set<std::set<std::size_t>> out;
  for (auto& [l, s] : groups) out.insert(s);
  return out;
}

int label_count(const Labelling& l) { return static_cast<int>(l.tree_cluster.size()); }

CondensedTree tree_for(const DenseMatrix& pts, int k, std::size_t mcs) {
  const auto core = core_distances(pts, k);
  return condense(build_hierarchy(pts.rows, mst_mutual_reachability(pts, core)), mcs);
}

// Cluster stabilities straight from the dendrogram: walk down from each
// cluster's node, charging (lambda - birth) for every point that leaves.
std::vector<std::pair<std::size_t, double>> stability_oracle(const Dendrogram& d, std::size_t mcs) {
  const std::size_t n = d.n_points;
  auto size_of = [&](std::size_t node) { return node < n ? std::size_t{1} : d.merges[node - n].size; };
  std::vector<std::pair<std::size_t, double>> out;
  std::function<void(std::size_t, double)> cluster = [&](std::size_t top, double birth) {
    double s = 0.0;
    std::size_t node = top;
    while (node >= n) {
      const Merge& m = d.merges[node - n];
      const double lambda = 1.0 / m.distance;
      const bool lb = size_of(m.left) >= mcs, rb = size_of(m.right) >= mcs;
      if (lb && rb) {
        s += static_cast<double>(size_of(node)) * (lambda - birth);
        cluster(m.left, lambda);
        cluster(m.right, lambda);
        break;
      }
      if (!lb && !rb) {
        s += static_cast<double>(size_of(node)) * (lambda - birth);
        break;
      }
      const std::size_t small = lb ? m.right : m.left;
      s += static_cast<double>(size_of(small)) * (lambda - birth);
      node = lb ? m.left : m.right;
    }
    out.emplace_back(size_of(top), s);
  };
  cluster(2 * n - 2, 0.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(CoreDistances, Cases) {
  DenseMatrix same(4, 2, std::vector<double>(8, 1.5));
  for (double c : core_distances(same, 2)) EXPECT_EQ(c, 0.0);
  DenseMatrix line(3, 1, {0.0, 1.0, 3.0});
  EXPECT_EQ(core_distances(line, 1), (std::vector<double>{1.0, 1.0, 2.0}));
  EXPECT_EQ(core_distances(line, 2), (std::vector<double>{3.0, 2.0, 3.0}));
  EXPECT_THROW(core_distances(line, 3), Error);
}

TEST(CoreDistances, MatchesSortOracle) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 30; ++trial) {
    const DenseMatrix pts = random_points(g, 25, 3);
    const DenseMatrix d = pairwise(pts);
    for (int k : {1, 3, 7}) {
      const auto core = core_distances(pts, k);
      for (std::size_t i = 0; i < pts.rows; ++i) {
        std::vector<double> others;
        for (std::size_t j = 0; j < pts.rows; ++j) {
          if (j != i) others.push_back(d.at(i, j));
        }
        std::sort(others.begin(), others.end());
        ASSERT_EQ(core[i], others[static_cast<std::size_t>(k - 1)]);
      }
    }
  }
}

TEST(MutualReachability, Cases) {
  const DenseMatrix pts(4, 2, {0, 0, 3, 0, 0, 4, 10, 0});
  const auto plain = mutual_reachability(pts, std::vector<double>(4, 0.0));
  EXPECT_EQ(plain, pairwise(pts));
  const std::vector<double> core{1.0, 6.0, 2.0, 0.5};
  const auto mr = mutual_reachability(pts, core);
  EXPECT_EQ(mr.at(0, 1), 6.0);   // core of point 1 dominates d = 3
  EXPECT_EQ(mr.at(0, 2), 4.0);   // plain distance dominates
  EXPECT_EQ(mr.at(1, 2), 6.0);   // max(6, 2, 5)
  EXPECT_EQ(mr.at(0, 3), 10.0);
  EXPECT_EQ(mr.at(2, 2), 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(mr.at(i, j), mr.at(j, i));
  }
}

TEST(Mst, SmallCases) {
  const DenseMatrix two(2, 2, {0, 2.5, 2.5, 0});
  ASSERT_EQ(mst(two).size(), 1u);
  EXPECT_EQ(mst(two)[0].weight, 2.5);

  const DenseMatrix line = pairwise(DenseMatrix(4, 1, {0.0, 1.0, 3.0, 6.0}));
  const auto edges = mst(line);
  ASSERT_EQ(edges.size(), 3u);
  std::set<std::pair<std::size_t, std::size_t>> got;
  for (const auto& e : edges) got.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  EXPECT_EQ(got, (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_EQ(total_weight(edges), 6.0);
}

TEST(Mst, MatchesPrueferEnumeration) {
  std::mt19937_64 g(2);
  std::uniform_int_distribution<std::size_t> size(2, 7);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix pts = random_points(g, size(g), 3);
    const auto core = core_distances(pts, 1);
    const DenseMatrix mr = mutual_reachability(pts, core);
    const double want = oracle::mst_weight_by_enumeration(mr);
    EXPECT_EQ(total_weight(mst(mr)), want);
    const auto direct = mst_mutual_reachability(pts, core);
    EXPECT_EQ(total_weight(direct), want);
    for (const auto& e : direct) EXPECT_EQ(e.weight, mr.at(e.u, e.v));
  }
}

TEST(BuildHierarchy, TiesAndSmallCases) {
  const std::vector<Edge> tied{{0, 1, 1.0}, {2, 3, 1.0}, {1, 2, 1.0}};
  const Dendrogram d = build_hierarchy(4, tied);
  ASSERT_EQ(d.merges.size(), 3u);
  EXPECT_EQ(d.merges[0], (Merge{0, 1, 1.0, 2}));
  EXPECT_EQ(d.merges[1], (Merge{2, 3, 1.0, 2}));
  EXPECT_EQ(d.merges[2], (Merge{4, 5, 1.0, 4}));

  const Dendrogram three = build_hierarchy(3, {{0, 1, 5.0}, {1, 2, 2.0}});
  ASSERT_EQ(three.merges.size(), 2u);
  EXPECT_EQ(three.merges[0].distance, 2.0);
  EXPECT_EQ(three.merges[1].distance, 5.0);
  EXPECT_EQ(three.merges[1].size, 3u);

  EXPECT_THROW(build_hierarchy(3, {{0, 1, 1.0}}), Error);
  EXPECT_THROW(build_hierarchy(3, {{0, 1, 1.0}, {1, 0, 2.0}}), Error);
  EXPECT_THROW(build_hierarchy(3, {{0, 1, 1.0}, {1, 5, 2.0}}), Error);
}

TEST(BuildHierarchy, MatchesNaiveSingleLinkage) {
  std::mt19937_64 g(3);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  for (int trial = 0; trial < 30; ++trial) {
    const DenseMatrix pts = random_points(g, size(g), 2);
    const DenseMatrix d = pairwise(pts);
    const Dendrogram dend = build_hierarchy(pts.rows, mst(d));
    const auto want = oracle::single_linkage_heights(d);
    ASSERT_EQ(dend.merges.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_EQ(dend.merges[i].distance, want[i]);

    // Each merge joins exactly the points of one component at its height.
    const std::size_t n = pts.rows;
    std::vector<std::vector<std::size_t>> members(2 * n - 1);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};
    for (std::size_t m = 0; m < dend.merges.size(); ++m) {
      const Merge& mg = dend.merges[m];
      auto& all = members[n + m];
      all = members[mg.left];
      all.insert(all.end(), members[mg.right].begin(), members[mg.right].end());
      ASSERT_EQ(all.size(), mg.size);
      const auto comp = oracle::components_below(d, mg.distance);
      for (std::size_t p : all) ASSERT_EQ(comp[p], comp[all.front()]);
      ASSERT_EQ(static_cast<std::size_t>(std::count(comp.begin(), comp.end(), comp[all.front()])), all.size());
    }
  }
}

TEST(Condense, MinClusterSizeAboveN) {
  std::mt19937_64 g(4);
  const DenseMatrix pts = random_points(g, 12, 2);
  const CondensedTree t = tree_for(pts, 2, 13);
  EXPECT_EQ(t.cluster_count(), 1u);
  EXPECT_EQ(t.rows.size(), 12u);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.parent, t.root());
    EXPECT_LT(r.child, 12u);
  }
  EXPECT_TRUE(extract_eom(t).tree_cluster.empty());
}

TEST(Condense, TwoBlobsGiveTwoChildren) {
  std::mt19937_64 g(5);
  const DenseMatrix pts = blobs(g, {{0, 0}, {20, 0}}, 10, 0.5);
  const CondensedTree t = tree_for(pts, 3, 5);
  std::size_t root_children = 0;
  for (const auto& r : t.rows) root_children += r.parent == t.root() && r.child >= t.n_points;
  EXPECT_EQ(root_children, 2u);
}

TEST(Condense, StabilityMatchesDirectSummation) {
  std::mt19937_64 g(6);
  for (int trial = 0; trial < 30; ++trial) {
    const DenseMatrix pts = blobs(g, {{0, 0}, {6, 0}, {0, 6}}, 12, 1.0);
    const auto core = core_distances(pts, 3);
    const Dendrogram d = build_hierarchy(pts.rows, mst_mutual_reachability(pts, core));
    for (std::size_t mcs : {3u, 5u, 8u}) {
      const CondensedTree t = condense(d, mcs);
      std::vector<std::pair<std::size_t, double>> got;
      for (std::size_t c = 0; c < t.cluster_count(); ++c) got.emplace_back(t.size[c], t.stability[c]);
      std::sort(got.begin(), got.end());
      const auto want = stability_oracle(d, mcs);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_EQ(got[i].first, want[i].first);
        ASSERT_NEAR(got[i].second, want[i].second, 1e-9 * std::max(1.0, std::abs(want[i].second)));
      }
    }
  }
}

TEST(Condense, DuplicatePointsStayFinite) {
  const DenseMatrix pts(6, 1, {0, 0, 0, 5, 5, 5});
  const CondensedTree t = tree_for(pts, 1, 2);
  for (double s : t.stability) EXPECT_TRUE(std::isfinite(s));
  EXPECT_EQ(label_count(extract_eom(t)), 2);
}

TEST(ExtractEom, SingleBlobWithStragglers) {
  std::mt19937_64 g(7);
  DenseMatrix pts = blobs(g, {{0, 0}}, 30, 0.3);
  pts.rows += 2;
  pts.values.insert(pts.values.end(), {40.0, 40.0, -40.0, 35.0});
  HdbscanParams p;
  p.allow_single_cluster = true;
  const auto r = hdbscan(pts, p, Extraction::kEom);
  // Noise, if any, is confined to the two stragglers.
  ASSERT_EQ(r.labelling.tree_cluster.size(), 1u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(r.labelling.labels[i], 0);
}

TEST(ExtractEom, UniformScatterLargeMinSizeIsAllNoise) {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseMatrix pts(40, 2);
  for (auto& v : pts.values) v = u(g);
  HdbscanParams p;
  p.min_cluster_size = 25;
  const auto r = hdbscan(pts, p, Extraction::kEom);
  EXPECT_TRUE(r.labelling.tree_cluster.empty());
  for (int l : r.labelling.labels) EXPECT_EQ(l, -1);
}

TEST(ExtractEom, TwoBlobs) {
  std::mt19937_64 g(9);
  const DenseMatrix pts = blobs(g, {{0, 0, 0}, {15, 15, 0}}, 20, 0.8);
  const auto r = hdbscan(pts, HdbscanParams{}, Extraction::kEom);
  ASSERT_EQ(r.labelling.tree_cluster.size(), 2u);
  for (std::size_t i = 0; i < 40; ++i) {
    const int l = r.labelling.labels[i];
    if (l < 0) continue;
    EXPECT_EQ(l, r.labelling.labels[i < 20 ? 0 : 20] < 0 ? l : r.labelling.labels[i < 20 ? 0 : 20]);
  }
  std::set<int> first, second;
  for (std::size_t i = 0; i < 20; ++i) first.insert(r.labelling.labels[i]);
  for (std::size_t i = 20; i < 40; ++i) second.insert(r.labelling.labels[i]);
  first.erase(-1);
  second.erase(-1);
  ASSERT_EQ(first.size(), 1u);
  ASSERT_EQ(second.size(), 1u);
  EXPECT_NE(*first.begin(), *second.begin());
}

TEST(ExtractHybrid, EpsilonZeroIsEom) {
  std::mt19937_64 g(10);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix pts =
        trial % 2 == 0 ? random_points(g, 60, 4) : blobs(g, {{0, 0, 0, 0}, {4, 0, 0, 0}, {0, 4, 0, 0}}, 20, 1.0);
    for (std::size_t mcs : {3u, 5u}) {
      const CondensedTree t = tree_for(pts, 3, mcs);
      for (bool single : {false, true}) {
        const Labelling e = extract_eom(t, single);
        const Labelling h = extract_hybrid(t, 0.0, single);
        ASSERT_EQ(h.labels, e.labels);
        ASSERT_EQ(h.tree_cluster, e.tree_cluster);
      }
    }
  }
}

TEST(ExtractHybrid, MergesMicroBlobs) {
  std::mt19937_64 g(11);
  // Two tight micro-blobs 0.1 apart, plus a distant third group.
  const DenseMatrix pts = blobs(g, {{0, 0}, {0.1, 0}, {10, 10}}, 10, 0.005);
  HdbscanParams p;
  p.min_cluster_size = 5;
  p.min_samples = 3;
  const auto eom = hdbscan(pts, p, Extraction::kEom);
  EXPECT_EQ(eom.labelling.tree_cluster.size(), 3u);
  EXPECT_NE(eom.labelling.labels[0], eom.labelling.labels[10]);

  p.cluster_selection_epsilon = 0.2;
  const auto hyb = hdbscan(pts, p, Extraction::kHybrid);
  EXPECT_EQ(hyb.labelling.tree_cluster.size(), 2u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(hyb.labelling.labels[i], hyb.labelling.labels[0]);
  EXPECT_NE(hyb.labelling.labels[25], hyb.labelling.labels[0]);
}

TEST(ExtractHybrid, HugeEpsilonLeavesAtMostOneCluster) {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix pts = blobs(g, {{0, 0}, {8, 0}, {0, 8}}, 15, 0.7);
    const CondensedTree t = tree_for(pts, 3, 5);
    EXPECT_LE(label_count(extract_hybrid(t, 1e6)), 1);
  }
}

TEST(Hdbscan, PreconditionsAndLimits) {
  std::mt19937_64 g(13);
  HdbscanParams p;
  EXPECT_THROW(hdbscan(random_points(g, 5, 2), p, Extraction::kEom), Error);
  EXPECT_NO_THROW(hdbscan(random_points(g, 6, 2), p, Extraction::kEom));
  p.max_points = 10;
  EXPECT_THROW(hdbscan(random_points(g, 11, 2), p, Extraction::kEom), Error);
  p = HdbscanParams{};
  p.min_cluster_size = 1;
  EXPECT_THROW(hdbscan(random_points(g, 11, 2), p, Extraction::kEom), Error);
  EXPECT_THROW(extract_hybrid(CondensedTree{}, -1.0), Error);
}

TEST(Hdbscan, PermutationInvariant) {
  std::mt19937_64 g(14);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix pts = blobs(g, {{0, 0}, {5, 1}, {1, 6}}, 15, 1.0);
    std::vector<std::size_t> perm(pts.rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), g);
    DenseMatrix shuffled(pts.rows, pts.cols);
    for (std::size_t i = 0; i < pts.rows; ++i) {
      for (std::size_t c = 0; c < pts.cols; ++c) shuffled.at(i, c) = pts.at(perm[i], c);
    }
    for (Extraction x : {Extraction::kEom, Extraction::kHybrid}) {
      HdbscanParams p;
      p.cluster_selection_epsilon = 0.5;
      const auto a = hdbscan(pts, p, x).labelling.labels;
      const auto b = hdbscan(shuffled, p, x).labelling.labels;
      std::vector<int> back(pts.rows);
      for (std::size_t i = 0; i < pts.rows; ++i) back[perm[i]] = b[i];
      EXPECT_EQ(partition(a), partition(back));
      EXPECT_EQ(std::count(a.begin(), a.end(), -1), std::count(back.begin(), back.end(), -1));
    }
  }
}

TEST(Hdbscan, CanonicalLabelsAndClusterSet) {
  EXPECT_EQ(canonical_labels({5, 5, -1, 2, 2, 2, 7}), (std::vector<int>{1, 1, -1, 0, 0, 0, 2}));
  std::mt19937_64 g(15);
  const DenseMatrix pts = blobs(g, {{0, 0}, {30, 0}}, 12, 0.5);
  const auto r = hdbscan(pts, HdbscanParams{}, Extraction::kEom);
  const ClusterSet cs = to_cluster_set(r);
  ASSERT_EQ(cs.clusters.size(), r.labelling.tree_cluster.size());
  std::size_t total = cs.noise.size();
  for (std::size_t l = 0; l < cs.clusters.size(); ++l) {
    const auto& c = cs.clusters[l];
    total += c.members.size();
    EXPECT_TRUE(std::is_sorted(c.members.begin(), c.members.end()));
    EXPECT_EQ(r.labelling.labels[static_cast<std::size_t>(c.leader)], static_cast<int>(l));
    EXPECT_GT(c.stability, 0.0);
  }
  EXPECT_EQ(total, pts.rows);
}
