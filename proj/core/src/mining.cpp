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

#include "termforge/mining.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>
#include "termforge/error.hpp"
#include "termforge/parallel.hpp"
#include "termforge/rng.hpp"
#include "termforge/seqmatch.hpp"

namespace termforge {

using nlohmann::json;

void validate(const MiningThresholds& t) {
  if (!(t.mu_s > 0 && t.sigma_s > 0 && t.mu_d > 0 && t.sigma_d > 0)) {
    throw Error("mining thresholds must all be positive");
  }
}

namespace {

const SymbolSeq& symbols_of(const SegmentSet& segments, std::int64_t id) {
  if (id < 0 || static_cast<std::size_t>(id) >= segments.size()) {
    throw Error("cluster references unknown segment " + std::to_string(id));
  }
  return segments[static_cast<std::size_t>(id)].symbols;
}

// Mean and population deviation from integer moments: sum of distances,
// sum of squared distances and the number of terms. Exact up to the final
// division and square root.
__extension__ using u128 = unsigned __int128;

std::pair<double, double> moments(std::uint64_t sum, std::uint64_t sum_sq, std::uint64_t n) {
  if (n == 0) return {0.0, 0.0};
  const double mean = static_cast<double>(sum) / static_cast<double>(n);
  // n * sum_sq - sum^2 >= 0 by Cauchy-Schwarz; computed in 128 bits.
  const u128 num = static_cast<u128>(n) * sum_sq - static_cast<u128>(sum) * sum;
  const double sd = std::sqrt(static_cast<double>(num)) / static_cast<double>(n);
  return {mean, sd};
}

}  // namespace

PurityStats purity_stats(const Cluster& cluster, const SegmentSet& segments, bool include_self) {
  const auto& m = cluster.members;
  std::uint64_t sum = 0, sum_sq = 0;
  // Self-pairs contribute lev = 0 but still count as terms.
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const std::uint64_t d = levenshtein(symbols_of(segments, m[i]), symbols_of(segments, m[j]));
      sum += 2 * d;
      sum_sq += 2 * d * d;
    }
  }
  const std::uint64_t n = include_self ? m.size() * m.size() : m.size() * (m.size() - (m.empty() ? 0 : 1));
  const auto [mu, sd] = moments(sum, sum_sq, n);
  return {mu, sd};
}

ContrastStats contrast_stats(const Cluster& c1, const Cluster& c2, const SegmentSet& segments) {
  std::uint64_t sum = 0, sum_sq = 0;
  for (auto a : c1.members) {
    for (auto b : c2.members) {
      const std::uint64_t d = levenshtein(symbols_of(segments, a), symbols_of(segments, b));
      sum += d;
      sum_sq += d * d;
    }
  }
  const auto [mu, sd] = moments(sum, sum_sq, c1.members.size() * c2.members.size());
  return {mu, sd};
}

std::vector<Cluster> select_pure_clusters(const ClusterSet& clusters, const SegmentSet& segments,
                                          const MiningThresholds& t, bool include_self) {
  validate(t);
  std::vector<PurityStats> stats(clusters.clusters.size());
  parallel_for(stats.size(), [&](std::size_t i) {
    stats[i] = purity_stats(clusters.clusters[i], segments, include_self);
  });
  std::vector<Cluster> retained;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double len = clusters.clusters[i].mean_len;
    if (stats[i].mu_s < t.mu_s * len && stats[i].sigma_s < t.sigma_s * len) {
      retained.push_back(clusters.clusters[i]);
    }
  }
  return retained;
}

std::vector<std::pair<std::size_t, std::size_t>> select_contrasting_pairs(
    const std::vector<Cluster>& retained, const SegmentSet& segments, const MiningThresholds& t) {
  validate(t);
  const std::size_t n = retained.size();
  std::vector<std::vector<std::size_t>> partners(n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = (retained[i].mean_len + retained[j].mean_len) / 2.0;
      const auto s = contrast_stats(retained[i], retained[j], segments);
      if (s.mu_d > t.mu_d * avg && s.sigma_d < t.sigma_d * avg) partners[i].push_back(j);
    }
  });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : partners[i]) out.emplace_back(i, j);
  }
  return out;
}

namespace {

// Picks index k with probability weights[k] / sum via a cumulative table.
class WeightedPicker {
 public:
  explicit WeightedPicker(const std::vector<std::uint64_t>& weights) {
    cumulative_.reserve(weights.size());
    std::uint64_t total = 0;
    for (auto w : weights) cumulative_.push_back(total += w);
  }
  [[nodiscard]] bool empty() const { return cumulative_.empty() || cumulative_.back() == 0; }
  std::size_t pick(Rng& rng) const {
    const std::uint64_t r = rng.below(cumulative_.back());
    return static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), r) -
                                    cumulative_.begin());
  }

 private:
  std::vector<std::uint64_t> cumulative_;
};

std::pair<std::int64_t, std::int64_t> draw_member_pair(const Cluster& c, Rng& rng) {
  const std::size_t n = c.members.size();
  const std::size_t i = static_cast<std::size_t>(rng.below(n));
  std::size_t j = static_cast<std::size_t>(rng.below(n - 1));
  if (j >= i) ++j;
  return {c.members[i], c.members[j]};
}

}  // namespace

PairManifest sample_manifest(const std::vector<Cluster>& retained,
                             const std::vector<std::pair<std::size_t, std::size_t>>& contrasting,
                             std::size_t n_siamese, std::size_t n_triplet, std::uint64_t seed) {
  PairManifest out;
  out.sample_seed = seed;
  const Rng root(seed);

  std::vector<std::uint64_t> pos_weights;
  for (const auto& c : retained) pos_weights.push_back(c.members.size() * (c.members.size() - 1) / 2);
  std::vector<std::uint64_t> neg_weights;
  for (auto [i, j] : contrasting) {
    if (i >= retained.size() || j >= retained.size()) throw Error("contrasting pair index out of range");
    neg_weights.push_back(retained[i].members.size() * retained[j].members.size());
  }
  const WeightedPicker pos_picker(pos_weights);
  const WeightedPicker neg_picker(neg_weights);

  if (n_siamese > 0) {
    if (pos_picker.empty()) throw Error("no positive source");
    if (n_siamese > 1 && neg_picker.empty()) throw Error("no negative source");
    Rng rng = root.split("siamese");
    for (std::size_t k = 0; k < n_siamese; ++k) {
      if (k % 2 == 0) {
        const Cluster& c = retained[pos_picker.pick(rng)];
        const auto [a, b] = draw_member_pair(c, rng);
        out.siamese_pairs.push_back({a, b, 1, c.id, c.id});
      } else {
        const auto [i, j] = contrasting[neg_picker.pick(rng)];
        const Cluster& c1 = retained[i];
        const Cluster& c2 = retained[j];
        const auto a = c1.members[static_cast<std::size_t>(rng.below(c1.members.size()))];
        const auto b = c2.members[static_cast<std::size_t>(rng.below(c2.members.size()))];
        out.siamese_pairs.push_back({a, b, 0, c1.id, c2.id});
      }
    }
  }

  if (n_triplet > 0) {
    // Partners of each retained cluster, and positive weights restricted to
    // clusters that have at least one partner.
    std::vector<std::vector<std::size_t>> partners(retained.size());
    for (auto [i, j] : contrasting) {
      partners[i].push_back(j);
      partners[j].push_back(i);
    }
    if (pos_picker.empty()) throw Error("no positive source");
    std::vector<std::uint64_t> anchor_weights(pos_weights);
    for (std::size_t i = 0; i < retained.size(); ++i) {
      if (partners[i].empty()) anchor_weights[i] = 0;
    }
    const WeightedPicker anchor_picker(anchor_weights);
    if (anchor_picker.empty()) throw Error("no negative source");

    Rng rng = root.split("triplet");
    for (std::size_t k = 0; k < n_triplet; ++k) {
      const std::size_t ci = anchor_picker.pick(rng);
      const Cluster& c = retained[ci];
      const auto [a, p] = draw_member_pair(c, rng);
      std::vector<std::uint64_t> w;
      for (auto j : partners[ci]) w.push_back(retained[j].members.size());
      const Cluster& neg = retained[partners[ci][WeightedPicker(w).pick(rng)]];
      const auto n = neg.members[static_cast<std::size_t>(rng.below(neg.members.size()))];
      out.triplets.push_back({a, p, n, c.id, neg.id});
    }
  }
  return out;
}

std::string manifest_to_json(const PairManifest& m) {
  json pairs = json::array();
  for (const auto& p : m.siamese_pairs) {
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"label", p.label}, {"clusters", {p.cluster_a, p.cluster_b}}});
  }
  json triplets = json::array();
  for (const auto& t : m.triplets) {
    triplets.push_back({{"anchor", t.anchor},
                        {"positive", t.positive},
                        {"negative", t.negative},
                        {"clusters", {t.cluster_pos, t.cluster_neg}}});
  }
  return json{{"sample_seed", m.sample_seed}, {"siamese_pairs", pairs}, {"triplets", triplets}}.dump() + "\n";
}

PairManifest manifest_from_json(const std::string& text) {
  PairManifest m;
  try {
    const json j = json::parse(text);
    m.sample_seed = j.at("sample_seed").get<std::uint64_t>();
    for (const auto& jp : j.at("siamese_pairs")) {
      const auto cl = jp.at("clusters").get<std::vector<std::int64_t>>();
      m.siamese_pairs.push_back({jp.at("a").get<std::int64_t>(), jp.at("b").get<std::int64_t>(),
                                 jp.at("label").get<int>(), cl.at(0), cl.at(1)});
    }
    for (const auto& jt : j.at("triplets")) {
      const auto cl = jt.at("clusters").get<std::vector<std::int64_t>>();
      m.triplets.push_back({jt.at("anchor").get<std::int64_t>(), jt.at("positive").get<std::int64_t>(),
                            jt.at("negative").get<std::int64_t>(), cl.at(0), cl.at(1)});
    }
  } catch (const std::exception& e) {
    throw Error(std::string("pair manifest: ") + e.what());
  }
  return m;
}

}  // namespace termforge
