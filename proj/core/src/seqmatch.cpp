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

#include "termforge/seqmatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "termforge/error.hpp"
#include "termforge/parallel.hpp"

namespace termforge {

void validate(const AlignScoring& s) {
  if (!(s.match_score > 0.0)) throw Error("align scoring: match_score must be > 0");
  if (s.mismatch_penalty > 0.0 || s.gap_penalty > 0.0) {
    throw Error("align scoring: penalties must be <= 0");
  }
  if (s.min_length < 1) throw Error("align scoring: min_length must be >= 1");
}

std::size_t levenshtein(std::span<const Symbol> a, std::span<const Symbol> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double normalized_levenshtein(std::span<const Symbol> a, std::span<const Symbol> b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) throw Error("normalized levenshtein undefined for two empty sequences");
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

namespace {

constexpr double kTieEps = 1e-9;

class LocalAligner {
 public:
  LocalAligner(std::span<const Symbol> a, std::span<const Symbol> b, const AlignScoring& s, bool self)
      : a_(a), b_(b), s_(s), self_(self), rows_(a.size() + 1), cols_(b.size() + 1),
        h_(rows_ * cols_, 0.0), cell_banned_(a.size() * b.size(), 0),
        row_banned_(a.size(), 0), col_banned_(b.size(), 0) {}

  std::vector<Alignment> run(std::size_t max_alignments) {
    std::vector<Alignment> out;
    const std::size_t max_passes = a_.size() * b_.size() + 1;
    for (std::size_t pass = 0; pass < max_passes && out.size() < max_alignments; ++pass) {
      fill();
      std::size_t bi = 0, bj = 0;
      double best = 0.0;
      for (std::size_t i = 1; i < rows_; ++i) {
        for (std::size_t j = 1; j < cols_; ++j) {
          if (h(i, j) > best + kTieEps) {
            best = h(i, j);
            bi = i;
            bj = j;
          }
        }
      }
      if (best <= 0.0 || best + kTieEps < s_.min_align_score) break;

      std::vector<std::pair<std::size_t, std::size_t>> path;
      std::size_t i = bi, j = bj;
      while (i > 0 && j > 0 && h(i, j) > kTieEps) {
        path.emplace_back(i, j);
        const double here = h(i, j);
        if (std::abs(here - (h(i - 1, j - 1) + score(i, j))) < kTieEps) {
          --i;
          --j;
        } else if (std::abs(here - (h(i - 1, j) + s_.gap_penalty)) < kTieEps) {
          --i;
        } else {
          --j;
        }
      }
      Alignment al{{i, bi}, {j, bj}, best};
      const auto min_len = static_cast<std::size_t>(s_.min_length);
      const bool long_enough = al.a.length() >= min_len && al.b.length() >= min_len;
      const bool disjoint = !self_ || al.a.end <= al.b.begin || al.b.end <= al.a.begin;
      if (long_enough && disjoint) {
        out.push_back(al);
        mask(al);
      } else {
        for (auto [pi, pj] : path) cell_banned_[(pi - 1) * b_.size() + (pj - 1)] = 1;
      }
    }
    return out;
  }

 private:
  double& h(std::size_t i, std::size_t j) { return h_[i * cols_ + j]; }

  double score(std::size_t i, std::size_t j) const {
    return a_[i - 1] == b_[j - 1] ? s_.match_score : s_.mismatch_penalty;
  }

  bool usable(std::size_t i, std::size_t j) const {
    if (row_banned_[i - 1] || col_banned_[j - 1]) return false;
    if (cell_banned_[(i - 1) * b_.size() + (j - 1)]) return false;
    return !self_ || j > i;
  }

  void fill() {
    for (std::size_t i = 1; i < rows_; ++i) {
      for (std::size_t j = 1; j < cols_; ++j) {
        if (!usable(i, j)) {
          h(i, j) = 0.0;
          continue;
        }
        const double diag = h(i - 1, j - 1) + score(i, j);
        const double up = h(i - 1, j) + s_.gap_penalty;
        const double left = h(i, j - 1) + s_.gap_penalty;
        h(i, j) = std::max({0.0, diag, up, left});
      }
    }
  }

  void mask(const Alignment& al) {
    for (std::size_t k = al.a.begin; k < al.a.end; ++k) {
      row_banned_[k] = 1;
      if (self_) col_banned_[k] = 1;
    }
    for (std::size_t k = al.b.begin; k < al.b.end; ++k) {
      col_banned_[k] = 1;
      if (self_) row_banned_[k] = 1;
    }
  }

  std::span<const Symbol> a_, b_;
  const AlignScoring& s_;
  bool self_;
  std::size_t rows_, cols_;
  std::vector<double> h_;
  std::vector<char> cell_banned_, row_banned_, col_banned_;
};

}  // namespace

std::vector<Alignment> local_align(std::span<const Symbol> a, std::span<const Symbol> b,
                                   const AlignScoring& scoring, bool self_pair,
                                   std::size_t max_alignments) {
  validate(scoring);
  if (a.empty() || b.empty()) return {};
  if (self_pair && a.size() != b.size()) throw Error("self-pair alignment needs identical sequences");
  return LocalAligner(a, b, scoring, self_pair).run(max_alignments);
}

SegmentSet discover_segments(const Corpus& corpus, const AlignScoring& scoring,
                             const DiscoveryOptions& options) {
  validate(scoring);
  const auto& utts = corpus.utterances();
  const std::size_t n = utts.size();
  const std::size_t n_pairs = n * (n + 1) / 2;
  if (n_pairs > options.max_pairs) {
    throw Error("segment discovery: " + std::to_string(n_pairs) +
                " utterance pairs exceed the configured limit of " + std::to_string(options.max_pairs));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<std::vector<Alignment>> found(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    found[p] = local_align(utts[i].symbols, utts[j].symbols, scoring, i == j,
                           options.max_alignments_per_pair);
  });

  SegmentSet segments;
  std::map<std::tuple<std::size_t, std::int64_t, std::int64_t>, std::int64_t> seen;
  auto add = [&](std::size_t u, const IndexSpan& range) {
    const Utterance& utt = utts[u];
    const FrameSpan span{utt.spans[range.begin].start, utt.spans[range.end - 1].end};
    auto [it, inserted] = seen.emplace(std::make_tuple(u, span.start, span.end),
                                       static_cast<std::int64_t>(segments.size()));
    if (!inserted) return;
    Segment s;
    s.id = it->second;
    s.utterance_id = utt.id;
    s.span = span;
    s.symbols.assign(utt.symbols.begin() + static_cast<std::ptrdiff_t>(range.begin),
                     utt.symbols.begin() + static_cast<std::ptrdiff_t>(range.end));
    segments.push_back(std::move(s));
  };
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (const auto& al : found[p]) {
      add(pairs[p].first, al.a);
      add(pairs[p].second, al.b);
    }
  }
  return segments;
}

}  // namespace termforge
