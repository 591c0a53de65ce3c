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

// Brute-force reference implementations used only by tests. Each one is
// written from the definition, independently of the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "termforge/baseline.hpp"
#include "termforge/corpus.hpp"
#include "termforge/embednet.hpp"
#include "termforge/recluster.hpp"

namespace oracle {

using termforge::Symbol;
using Seq = std::vector<Symbol>;

// Edit distance by memoized recursion on suffixes.
inline std::size_t levenshtein(const Seq& a, const Seq& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, go(i + 1, j) + 1);
    best = std::min(best, go(i, j + 1) + 1);
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

// Best global alignment score of a[ai,aj) with b[bi,bj) (Needleman-Wunsch).
inline double global_score(const Seq& a, std::size_t ai, std::size_t aj, const Seq& b, std::size_t bi, std::size_t bj,
                           double match, double mismatch, double gap) {
  const std::size_t n = aj - ai, m = bj - bi;
  std::vector<std::vector<double>> s(n + 1, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 1; i <= n; ++i) s[i][0] = gap * static_cast<double>(i);
  for (std::size_t j = 1; j <= m; ++j) s[0][j] = gap * static_cast<double>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double d = s[i - 1][j - 1] + (a[ai + i - 1] == b[bi + j - 1] ? match : mismatch);
      s[i][j] = std::max({d, s[i - 1][j] + gap, s[i][j - 1] + gap});
    }
  }
  return s[n][m];
}

struct SubstringHit {
  double score = 0.0;
  std::size_t a_begin = 0, a_end = 0, b_begin = 0, b_end = 0;
};

// Exhaustive scan over every pair of non-empty substrings; returns the best
// score and every substring pair achieving it.
inline std::pair<double, std::vector<SubstringHit>> best_substring_pairs(const Seq& a, const Seq& b, double match,
                                                                         double mismatch, double gap) {
  double best = 0.0;
  std::vector<SubstringHit> hits;
  for (std::size_t ai = 0; ai < a.size(); ++ai) {
    for (std::size_t aj = ai + 1; aj <= a.size(); ++aj) {
      for (std::size_t bi = 0; bi < b.size(); ++bi) {
        for (std::size_t bj = bi + 1; bj <= b.size(); ++bj) {
          const double s = global_score(a, ai, aj, b, bi, bj, match, mismatch, gap);
          if (s > best + 1e-12) {
            best = s;
            hits.clear();
          }
          if (std::abs(s - best) <= 1e-12 && s > 0.0) hits.push_back({s, ai, aj, bi, bj});
        }
      }
    }
  }
  return {best, hits};
}

inline const Seq& symbols(const termforge::SegmentSet& segs, std::int64_t id) {
  return segs.at(static_cast<std::size_t>(id)).symbols;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

// Two passes over integer terms. Deviations are scaled by n so the second
// pass stays exact: sum (n t - S)^2 = n^2 sum (t - mean)^2.
inline MeanSd mean_sd(const std::vector<std::int64_t>& terms) {
  const auto n = static_cast<std::int64_t>(terms.size());
  std::int64_t total = 0;
  for (auto t : terms) total += t;
  std::int64_t dev = 0;
  for (auto t : terms) dev += (n * t - total) * (n * t - total);
  MeanSd r;
  r.mean = static_cast<double>(total) / static_cast<double>(n);
  r.sd = std::sqrt(static_cast<double>(dev / n)) / static_cast<double>(n);
  return r;
}

// Literal double loop over all |C|^2 ordered pairs (self-pairs included).
inline MeanSd purity(const std::vector<std::int64_t>& members, const termforge::SegmentSet& segs) {
  std::vector<std::int64_t> terms;
  for (auto i : members) {
    for (auto j : members) terms.push_back(static_cast<std::int64_t>(levenshtein(symbols(segs, i), symbols(segs, j))));
  }
  return mean_sd(terms);
}

// Same over the |C1||C2| cross pairs.
inline MeanSd contrast(const std::vector<std::int64_t>& c1, const std::vector<std::int64_t>& c2,
                       const termforge::SegmentSet& segs) {
  std::vector<std::int64_t> terms;
  for (auto i : c1) {
    for (auto j : c2) terms.push_back(static_cast<std::int64_t>(levenshtein(symbols(segs, i), symbols(segs, j))));
  }
  return mean_sd(terms);
}

// Mean normalized edit distance over within-cluster pairs, enumerated
// cluster by cluster, i < j.
inline std::optional<double> ned(const termforge::ClusterSet& cs, const std::vector<Seq>& gold_strings) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& c : cs.clusters) {
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      for (std::size_t j = i + 1; j < c.members.size(); ++j) {
        const Seq& a = gold_strings.at(static_cast<std::size_t>(c.members[i]));
        const Seq& b = gold_strings.at(static_cast<std::size_t>(c.members[j]));
        const std::size_t m = std::max(a.size(), b.size());
        sum += m == 0 ? 0.0 : static_cast<double>(levenshtein(a, b)) / static_cast<double>(m);
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

struct PairCounts {
  std::int64_t within = 0;       // labelled pairs sharing a cluster
  std::int64_t within_same = 0;  // ... with equal gold word
  std::int64_t same_word = 0;    // labelled clustered pairs with equal gold word
};

// Visits every unordered pair of clustered, labelled segments.
inline PairCounts grouping_counts(const termforge::ClusterSet& cs, const std::vector<std::optional<int>>& labels) {
  std::vector<std::pair<std::int64_t, std::size_t>> items;  // (segment, cluster)
  for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
    for (auto id : cs.clusters[c].members) {
      if (labels.at(static_cast<std::size_t>(id))) items.emplace_back(id, c);
    }
  }
  PairCounts pc;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const bool same_cluster = items[i].second == items[j].second;
      const bool same_word = *labels[static_cast<std::size_t>(items[i].first)] ==
                             *labels[static_cast<std::size_t>(items[j].first)];
      if (same_cluster) ++pc.within;
      if (same_cluster && same_word) ++pc.within_same;
      if (same_word) ++pc.same_word;
    }
  }
  return pc;
}

inline std::pair<std::int64_t, std::int64_t> words_pairs(const termforge::ClusterSet& cs) {
  std::int64_t pairs = 0;
  for (const auto& c : cs.clusters) {
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      for (std::size_t j = i + 1; j < c.members.size(); ++j) ++pairs;
    }
  }
  return {static_cast<std::int64_t>(cs.clusters.size()), pairs};
}

// Edge weights summed smallest first, so equal multisets give equal sums.
inline double ascending_sum(std::vector<double> w) {
  std::sort(w.begin(), w.end());
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

// Minimum spanning tree weight by enumerating every labelled tree through
// its Pruefer sequence (n^(n-2) trees).
inline double mst_weight_by_enumeration(const termforge::DenseMatrix& d) {
  const std::size_t n = d.rows;
  if (n == 2) return d.at(0, 1);
  const std::size_t len = n - 2;
  std::vector<std::size_t> code(len, 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> w;
  while (true) {
    std::vector<std::size_t> degree(n, 1);
    for (auto c : code) ++degree[c];
    w.clear();
    for (auto c : code) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      w.push_back(d.at(leaf, c));
      --degree[leaf];
      --degree[c];
    }
    std::size_t u = n, v = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] == 1) (u == n ? u : v) = i;
    }
    w.push_back(d.at(u, v));
    best = std::min(best, ascending_sum(w));
    std::size_t pos = 0;
    while (pos < len && ++code[pos] == n) code[pos++] = 0;
    if (pos == len) break;
  }
  return best;
}

// Naive agglomerative single linkage: repeatedly merge the two closest
// clusters (cluster distance = min pointwise distance). Returns merge heights
// in order.
inline std::vector<double> single_linkage_heights(const termforge::DenseMatrix& d) {
  const std::size_t n = d.rows;
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<double> heights;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double link = std::numeric_limits<double>::infinity();
        for (auto p : clusters[i]) {
          for (auto q : clusters[j]) link = std::min(link, d.at(p, q));
        }
        if (link < best) {
          best = link;
          bi = i;
          bj = j;
        }
      }
    }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    heights.push_back(best);
  }
  return heights;
}

// Connected components of the graph joining points at distance <= threshold.
// Each point is labelled with the smallest index in its component.
inline std::vector<std::size_t> components_below(const termforge::DenseMatrix& d, double threshold) {
  const std::size_t n = d.rows;
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), std::size_t{0});
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && d.at(i, j) <= threshold && label[j] < label[i]) {
          label[i] = label[j];
          changed = true;
        }
      }
    }
  }
  return label;
}

// Forward pass on nested per-frame vectors straight from the layer list.
// If `pattern` is given it receives every ReLU sign and pool argmax.
inline std::vector<double> forward(const termforge::NetworkParams& p, const std::vector<double>& flat_input,
                                   std::vector<int>* pattern = nullptr) {
  using termforge::Tensor;
  const auto& a = p.arch;
  using Frames = std::vector<std::vector<double>>;
  Frames x(static_cast<std::size_t>(a.input_frames), std::vector<double>(static_cast<std::size_t>(a.feature_dim)));
  for (int t = 0; t < a.input_frames; ++t) {
    for (int c = 0; c < a.feature_dim; ++c) {
      x[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] =
          flat_input[static_cast<std::size_t>(t * a.feature_dim + c)];
    }
  }
  auto conv = [&](const Frames& in, Tensor wt, Tensor bt, int kernel, int out_ch) {
    const auto w = p.tensor(wt);
    const auto b = p.tensor(bt);
    const std::size_t in_ch = in.front().size();
    Frames out;
    for (std::size_t t = 0; t + static_cast<std::size_t>(kernel) <= in.size(); ++t) {
      std::vector<double> row(static_cast<std::size_t>(out_ch));
      for (int o = 0; o < out_ch; ++o) {
        double s = b[static_cast<std::size_t>(o)];
        for (int k = 0; k < kernel; ++k) {
          for (std::size_t c = 0; c < in_ch; ++c) {
            s += w[(static_cast<std::size_t>(o) * static_cast<std::size_t>(kernel) + static_cast<std::size_t>(k)) *
                       in_ch + c] *
                 in[t + static_cast<std::size_t>(k)][c];
          }
        }
        row[static_cast<std::size_t>(o)] = std::max(0.0, s);
        if (pattern) pattern->push_back(s > 0.0);
      }
      out.push_back(row);
    }
    return out;
  };
  auto pool = [&](const Frames& in) {
    Frames out;
    const auto width = static_cast<std::size_t>(a.pool_width);
    for (std::size_t t = 0; (t + 1) * width <= in.size(); ++t) {
      std::vector<double> row = in[t * width];
      std::vector<int> arg(row.size(), 0);
      for (std::size_t k = 1; k < width; ++k) {
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (in[t * width + k][c] > row[c]) {
            row[c] = in[t * width + k][c];
            arg[c] = static_cast<int>(k);
          }
        }
      }
      if (pattern) pattern->insert(pattern->end(), arg.begin(), arg.end());
      out.push_back(row);
    }
    return out;
  };
  auto dense = [&](const std::vector<double>& in, Tensor wt, Tensor bt, bool relu) {
    const auto w = p.tensor(wt);
    const auto b = p.tensor(bt);
    std::vector<double> out(b.size());
    for (std::size_t o = 0; o < b.size(); ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in.size(); ++i) s += w[o * in.size() + i] * in[i];
      out[o] = relu ? std::max(0.0, s) : s;
      if (pattern && relu) pattern->push_back(s > 0.0);
    }
    return out;
  };
  Frames h = pool(conv(x, Tensor::kConv1W, Tensor::kConv1B, a.conv_kernels[0], a.conv_channels[0]));
  h = pool(conv(h, Tensor::kConv2W, Tensor::kConv2B, a.conv_kernels[1], a.conv_channels[1]));
  h = conv(h, Tensor::kConv3W, Tensor::kConv3B, a.conv_kernels[2], a.conv_channels[2]);
  std::vector<double> flat;
  for (const auto& row : h) flat.insert(flat.end(), row.begin(), row.end());
  auto f1 = dense(flat, Tensor::kFc1W, Tensor::kFc1B, true);
  auto f2 = dense(f1, Tensor::kFc2W, Tensor::kFc2B, true);
  return dense(f2, Tensor::kOutW, Tensor::kOutB, false);
}

}  // namespace oracle
