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
#include <random>
#include <set>

#include "termforge/baseline.hpp"
#include "termforge/error.hpp"
#include "termforge/seqmatch.hpp"
#include "termforge/synthgen.hpp"
#include "test_util.hpp"

using namespace termforge;

TEST(LeaderCluster, HandWorkedExample) {
  const SegmentSet segs = testutil::segments_from({
      {1, 2, 3, 4},  // leader of cluster 0
      {1, 2, 3, 5},  // 0.25 from 0
      {6, 7, 8, 9},  // 1.0 from 0, founds cluster 1
      {1, 2, 6, 7},  // 0.5 from 0: ambiguous, nearest is 0
      {1, 2},        // too short
  });
  const ClusterSet cs = leader_cluster(segs, LeaderParams{});
  ASSERT_EQ(cs.clusters.size(), 2u);
  EXPECT_EQ(cs.clusters[0].leader, 0);
  EXPECT_EQ(cs.clusters[0].members, (std::vector<std::int64_t>{0, 1, 3}));
  EXPECT_EQ(cs.clusters[0].nearest_assigned, (std::vector<std::int64_t>{3}));
  EXPECT_DOUBLE_EQ(cs.clusters[0].mean_len, 4.0);
  EXPECT_EQ(cs.clusters[1].leader, 2);
  EXPECT_EQ(cs.clusters[1].members, (std::vector<std::int64_t>{2}));
  EXPECT_TRUE(cs.noise.empty());

  LeaderParams drop;
  drop.ambiguous = AmbiguousPolicy::kDrop;
  const ClusterSet d = leader_cluster(segs, drop);
  EXPECT_EQ(d.clusters[0].members, (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(d.noise, (std::vector<std::int64_t>{3}));
}

TEST(LeaderCluster, IdenticalStringsFormOneCluster) {
  const SegmentSet segs = testutil::segments_from({{4, 4, 2}, {4, 4, 2}, {4, 4, 2}, {4, 4, 2}});
  const ClusterSet cs = leader_cluster(segs, LeaderParams{});
  ASSERT_EQ(cs.clusters.size(), 1u);
  EXPECT_EQ(cs.clusters[0].members, (std::vector<std::int64_t>{0, 1, 2, 3}));
}

TEST(LeaderCluster, TwoDisjointGroups) {
  const SegmentSet segs = testutil::segments_from({{1, 2, 3}, {7, 8, 9}, {1, 2, 3}, {7, 8, 9}, {7, 8, 9}});
  const ClusterSet cs = leader_cluster(segs, LeaderParams{});
  ASSERT_EQ(cs.clusters.size(), 2u);
  EXPECT_EQ(cs.clusters[0].members, (std::vector<std::int64_t>{0, 2}));
  EXPECT_EQ(cs.clusters[1].members, (std::vector<std::int64_t>{1, 3, 4}));
}

TEST(LeaderCluster, ZeroNoiseGoldTokensGroupByWord) {
  SynthConfig c;
  c.vocabulary_size = 5;
  c.occurrences_per_word = 8;
  c.feature_dim = 4;
  c.seed = 31;
  const Corpus corpus = generate(c);
  SegmentSet segs;
  std::vector<int> words;
  for (const auto& u : corpus.gold()->utterances) {
    for (const auto& t : u.tokens) {
      if (!t.is_word()) continue;
      segs.push_back(testutil::segment(static_cast<std::int64_t>(segs.size()), t.subwords, u.utterance_id, t.span));
      words.push_back(t.word);
    }
  }
  const ClusterSet cs = leader_cluster(segs, LeaderParams{});
  ASSERT_EQ(cs.clusters.size(), 5u);
  std::set<int> seen;
  for (const auto& cl : cs.clusters) {
    EXPECT_EQ(cl.members.size(), 8u);
    const int w = words[static_cast<std::size_t>(cl.leader)];
    EXPECT_TRUE(seen.insert(w).second);
    for (auto m : cl.members) EXPECT_EQ(words[static_cast<std::size_t>(m)], w);
  }
}

TEST(LeaderCluster, RandomInvariants) {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SymbolSeq> seqs;
    for (int i = 0; i < 80; ++i) seqs.push_back(testutil::random_seq(g, 8, 3, 1));
    const SegmentSet segs = testutil::segments_from(seqs);
    const LeaderParams p;
    const ClusterSet cs = leader_cluster(segs, p);

    std::set<std::int64_t> seen;
    for (const auto& c : cs.clusters) {
      ASSERT_TRUE(std::is_sorted(c.members.begin(), c.members.end()));
      ASSERT_EQ(c.members.front(), c.leader);
      for (auto m : c.members) {
        ASSERT_TRUE(seen.insert(m).second);
        const bool fallback = std::count(c.nearest_assigned.begin(), c.nearest_assigned.end(), m) > 0;
        if (!fallback) ASSERT_LE(normalized_levenshtein(seqs[m], seqs[c.leader]), p.radius);
      }
      for (const auto& o : cs.clusters) {
        if (o.id < c.id) ASSERT_GE(normalized_levenshtein(seqs[c.leader], seqs[o.leader]), p.separation * p.radius);
      }
    }
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      ASSERT_EQ(seen.count(static_cast<std::int64_t>(i)) > 0, static_cast<int>(seqs[i].size()) >= p.min_length);
    }
    EXPECT_EQ(leader_cluster(segs, p), cs);
  }
}

TEST(LeaderCluster, RejectsBadInput) {
  LeaderParams p;
  p.radius = 0.0;
  EXPECT_THROW(leader_cluster({}, p), Error);
  p = LeaderParams{};
  p.separation = 0.0;
  EXPECT_THROW(leader_cluster({}, p), Error);
  SegmentSet segs = testutil::segments_from({{1, 2, 3}, {1, 2, 3}});
  segs[1].id = 5;
  EXPECT_THROW(leader_cluster(segs, LeaderParams{}), Error);
}

TEST(ClusterSet, StatsAndJsonRoundTrip) {
  ClusterSet cs;
  cs.clusters = {testutil::cluster(0, {0, 2, 4}), testutil::cluster(1, {1}), testutil::cluster(2, {3, 5, 6})};
  cs.clusters[0].mean_len = 4.5;
  cs.clusters[0].nearest_assigned = {4};
  cs.clusters[2].stability = 1.25;
  cs.noise = {7, 8};
  const ClusterSetStats s = cluster_set_stats(cs);
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.total_members, 7u);
  EXPECT_EQ(s.size_histogram, (std::map<std::size_t, std::size_t>{{1, 1}, {3, 2}}));

  EXPECT_EQ(clusters_from_json(clusters_to_json(cs, true)), cs);
  ClusterSet no_stab = cs;
  no_stab.clusters[2].stability = 0.0;
  EXPECT_EQ(clusters_from_json(clusters_to_json(cs, false)), no_stab);
  EXPECT_THROW(clusters_from_json("{\"clusters\": 3}"), Error);
}

TEST(ClusterSet, EmptyAndHandCases) {
  EXPECT_EQ(cluster_set_stats(ClusterSet{}), ClusterSetStats{});
  const SegmentSet segs = testutil::segments_from({{1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1, 1}});
  const ClusterSet cs = leader_cluster(segs, LeaderParams{});
  ASSERT_EQ(cs.clusters.size(), 1u);
  EXPECT_DOUBLE_EQ(cs.clusters[0].mean_len, 4.0);
  EXPECT_EQ(cluster_set_stats(cs).mean_len, std::vector<double>{4.0});
}

TEST(ClusterSet, StatsMatchRecount) {
  std::mt19937_64 g(12);
  std::vector<SymbolSeq> seqs;
  for (int i = 0; i < 300; ++i) seqs.push_back(testutil::random_seq(g, 7, 4, 3));
  const ClusterSet cs = leader_cluster(testutil::segments_from(seqs), LeaderParams{});
  const ClusterSetStats s = cluster_set_stats(cs);
  std::size_t total = 0;
  std::map<std::size_t, std::size_t> hist;
  for (const auto& c : cs.clusters) {
    std::size_t k = 0;
    for (auto it = c.members.begin(); it != c.members.end(); ++it) ++k;
    total += k;
    hist[k] += 1;
  }
  EXPECT_EQ(s.count, cs.clusters.size());
  EXPECT_EQ(s.total_members, total);
  EXPECT_EQ(s.size_histogram, hist);
}

TEST(ClusterSet, MeanSymbolLength) {
  const SegmentSet segs = testutil::segments_from({{1}, {1, 2}, {1, 2, 3, 4}});
  EXPECT_DOUBLE_EQ(mean_symbol_length(segs, {0, 2}), 2.5);
  EXPECT_DOUBLE_EQ(mean_symbol_length(segs, {1}), 2.0);
}
