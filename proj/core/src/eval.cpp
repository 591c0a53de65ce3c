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

#include "termforge/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include "termforge/error.hpp"
#include "termforge/parallel.hpp"
#include "termforge/seqmatch.hpp"
#include "termforge/synthgen.hpp"

namespace termforge {

using nlohmann::json;

namespace {

const Segment& segment_at(const SegmentSet& segments, std::int64_t id) {
  if (id < 0 || static_cast<std::size_t>(id) >= segments.size() || segments[static_cast<std::size_t>(id)].id != id) {
    throw Error("eval: cluster member " + std::to_string(id) + " is not a known segment id");
  }
  return segments[static_cast<std::size_t>(id)];
}

const GoldUtterance& gold_for(const GoldAnnotation& gold, const std::string& utterance_id) {
  const GoldUtterance* g = gold.find(utterance_id);
  if (g == nullptr) throw Error("eval: no gold annotation for utterance " + utterance_id);
  return *g;
}

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Clustered segment ids in cluster order.
std::vector<std::int64_t> clustered(const ClusterSet& clusters) {
  std::vector<std::int64_t> out;
  for (const auto& c : clusters.clusters) out.insert(out.end(), c.members.begin(), c.members.end());
  return out;
}

bool near(std::int64_t a, std::int64_t b, int tol) { return std::llabs(a - b) <= tol; }

}  // namespace

Prf make_prf(std::optional<double> p, std::optional<double> r) {
  Prf out{p, r, std::nullopt};
  if (p && r) {
    out.f_score = (*p + *r) > 0.0 ? 2.0 * *p * *r / (*p + *r) : 0.0;
  } else if ((p && *p == 0.0) || (r && *r == 0.0)) {
    out.f_score = 0.0;
  }
  return out;
}

std::optional<double> ned(const ClusterSet& clusters, const SegmentSet& segments, const GoldAnnotation& gold) {
  const auto& cs = clusters.clusters;
  std::vector<std::vector<double>> per_cluster(cs.size());
  parallel_for(cs.size(), [&](std::size_t ci) {
    const auto& m = cs[ci].members;
    std::vector<SymbolSeq> strings;
    strings.reserve(m.size());
    for (auto id : m) {
      const Segment& s = segment_at(segments, id);
      strings.push_back(gold_for(gold, s.utterance_id).subwords_in(s.span));
    }
    auto& out = per_cluster[ci];
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        out.push_back(strings[i].empty() && strings[j].empty() ? 0.0
                                                               : normalized_levenshtein(strings[i], strings[j]));
      }
    }
  });
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& v : per_cluster) {
    for (double d : v) sum += d;
    count += static_cast<std::int64_t>(v.size());
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

double coverage(const ClusterSet& clusters, const SegmentSet& segments, std::int64_t total_frames) {
  if (total_frames <= 0) throw Error("eval: corpus has no frames");
  std::map<std::string, std::vector<FrameSpan>> spans;
  for (auto id : clustered(clusters)) {
    const Segment& s = segment_at(segments, id);
    spans[s.utterance_id].push_back(s.span);
  }
  std::int64_t covered = 0;
  for (auto& [utt, v] : spans) {
    std::sort(v.begin(), v.end());
    std::int64_t reach = v.front().start;
    for (const auto& sp : v) {
      const std::int64_t from = std::max(reach, sp.start);
      if (sp.end > from) covered += sp.end - from;
      reach = std::max(reach, sp.end);
    }
  }
  return static_cast<double>(covered) / static_cast<double>(total_frames);
}

Prf grouping_prf(const ClusterSet& clusters, const std::vector<std::optional<int>>& labels) {
  auto label_of = [&](std::int64_t id) -> std::optional<int> {
    if (id < 0 || static_cast<std::size_t>(id) >= labels.size()) {
      throw Error("eval: cluster member " + std::to_string(id) + " has no label slot");
    }
    return labels[static_cast<std::size_t>(id)];
  };
  std::int64_t within = 0, within_same = 0;
  // word -> cluster -> count, over clustered labelled segments
  std::map<int, std::map<std::size_t, std::int64_t>> by_word;
  for (std::size_t ci = 0; ci < clusters.clusters.size(); ++ci) {
    std::map<int, std::int64_t> counts;
    std::int64_t n = 0;
    for (auto id : clusters.clusters[ci].members) {
      if (auto l = label_of(id)) {
        ++counts[*l];
        ++n;
      }
    }
    within += n * (n - 1) / 2;
    for (const auto& [w, k] : counts) {
      within_same += k * (k - 1) / 2;
      by_word[w][ci] = k;
    }
  }
  std::int64_t gold_pairs = 0;
  for (const auto& [w, per] : by_word) {
    std::int64_t total = 0;
    for (const auto& [ci, k] : per) total += k;
    gold_pairs += total * (total - 1) / 2;
  }
  return make_prf(ratio(within_same, within), ratio(within_same, gold_pairs));
}

Prf grouping_prf(const ClusterSet& clusters, const SegmentSet& segments, const GoldAnnotation& gold) {
  std::vector<std::optional<int>> labels(segments.size());
  parallel_for(segments.size(), [&](std::size_t i) { labels[i] = gold_segment_label(gold, segments[i]); });
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].id != static_cast<std::int64_t>(i)) throw Error("eval: segment ids must be dense");
  }
  return grouping_prf(clusters, labels);
}

std::pair<Prf, Prf> token_type_prf(const ClusterSet& clusters, const SegmentSet& segments,
                                   const GoldAnnotation& gold, int tolerance) {
  std::int64_t gold_tokens = 0;
  std::set<int> gold_types;
  for (const auto& u : gold.utterances) {
    for (const auto& t : u.tokens) {
      if (!t.is_word()) continue;
      ++gold_tokens;
      gold_types.insert(t.word);
    }
  }

  // (utterance, token index) of matched gold tokens; matched word per segment.
  std::set<std::pair<std::string, std::size_t>> hit_tokens;
  std::set<int> found_types;
  std::int64_t discovered = 0, matched = 0;
  std::int64_t cluster_types = 0;
  std::set<int> majority_types;
  for (const auto& c : clusters.clusters) {
    std::map<int, std::int64_t> votes;
    for (auto id : c.members) {
      const Segment& s = segment_at(segments, id);
      const GoldUtterance& g = gold_for(gold, s.utterance_id);
      ++discovered;
      std::optional<int> word;
      for (std::size_t k = 0; k < g.tokens.size(); ++k) {
        const GoldToken& t = g.tokens[k];
        if (!t.is_word()) continue;
        if (near(s.span.start, t.span.start, tolerance) && near(s.span.end, t.span.end, tolerance)) {
          hit_tokens.emplace(s.utterance_id, k);
          found_types.insert(t.word);
          if (!word) word = t.word;
        }
      }
      if (word) {
        ++matched;
        ++votes[*word];
      }
    }
    ++cluster_types;
    if (!votes.empty()) {
      auto best = std::max_element(votes.begin(), votes.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
      majority_types.insert(best->first);
    }
  }
  Prf token = make_prf(ratio(matched, discovered), ratio(static_cast<std::int64_t>(hit_tokens.size()), gold_tokens));
  Prf type = make_prf(ratio(static_cast<std::int64_t>(majority_types.size()), cluster_types),
                      ratio(static_cast<std::int64_t>(found_types.size()), static_cast<std::int64_t>(gold_types.size())));
  return {token, type};
}

Prf boundary_prf(const ClusterSet& clusters, const SegmentSet& segments, const GoldAnnotation& gold, int tolerance) {
  std::map<std::string, std::set<std::int64_t>> found;
  for (auto id : clustered(clusters)) {
    const Segment& s = segment_at(segments, id);
    found[s.utterance_id].insert(s.span.start);
    found[s.utterance_id].insert(s.span.end);
  }
  std::map<std::string, std::set<std::int64_t>> truth;
  for (const auto& u : gold.utterances) {
    auto& b = truth[u.utterance_id];
    for (const auto& t : u.tokens) {
      if (!t.is_word()) continue;
      b.insert(t.span.start);
      b.insert(t.span.end);
    }
  }
  auto hits = [&](const std::set<std::int64_t>& pool, std::int64_t x) {
    auto it = pool.lower_bound(x - tolerance);
    return it != pool.end() && *it <= x + tolerance;
  };
  static const std::set<std::int64_t> kNone;
  std::int64_t n_found = 0, found_ok = 0, n_truth = 0, truth_ok = 0;
  for (const auto& [utt, b] : found) {
    auto it = truth.find(utt);
    if (it == truth.end()) throw Error("eval: no gold annotation for utterance " + utt);
    for (auto x : b) {
      ++n_found;
      found_ok += hits(it->second, x) ? 1 : 0;
    }
  }
  for (const auto& [utt, b] : truth) {
    auto it = found.find(utt);
    const auto& pool = it == found.end() ? kNone : it->second;
    for (auto x : b) {
      ++n_truth;
      truth_ok += hits(pool, x) ? 1 : 0;
    }
  }
  return make_prf(ratio(found_ok, n_found), ratio(truth_ok, n_truth));
}

std::pair<std::int64_t, std::int64_t> n_words_n_pairs(const ClusterSet& clusters) {
  std::int64_t pairs = 0;
  for (const auto& c : clusters.clusters) {
    const auto n = static_cast<std::int64_t>(c.members.size());
    pairs += n * (n - 1) / 2;
  }
  return {static_cast<std::int64_t>(clusters.clusters.size()), pairs};
}

EvalReport evaluate(const ClusterSet& clusters, const SegmentSet& segments, const Corpus& corpus,
                    const EvalOptions& options, std::string system) {
  if (!corpus.gold()) throw Error("eval: corpus has no gold annotation");
  const GoldAnnotation& gold = *corpus.gold();
  std::set<std::int64_t> seen;
  for (auto id : clustered(clusters)) {
    if (!seen.insert(id).second) throw Error("eval: segment " + std::to_string(id) + " belongs to two clusters");
  }
  EvalReport r;
  r.system = std::move(system);
  r.ned = ned(clusters, segments, gold);
  r.coverage = coverage(clusters, segments, corpus.total_frames());
  r.grouping = grouping_prf(clusters, segments, gold);
  std::tie(r.token, r.type) = token_type_prf(clusters, segments, gold, options.token_tolerance);
  r.boundary = boundary_prf(clusters, segments, gold, options.boundary_tolerance);
  std::tie(r.n_words, r.n_pairs) = n_words_n_pairs(clusters);
  return r;
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json prf_json(const Prf& p) {
  return {{"precision", opt_json(p.precision)}, {"recall", opt_json(p.recall)}, {"f_score", opt_json(p.f_score)}};
}

Prf prf_from(const json& j) {
  return {opt_from(j.at("precision")), opt_from(j.at("recall")), opt_from(j.at("f_score"))};
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  json j = {{"system", r.system},
            {"ned", opt_json(r.ned)},
            {"coverage", r.coverage},
            {"grouping", prf_json(r.grouping)},
            {"token", prf_json(r.token)},
            {"type", prf_json(r.type)},
            {"boundary", prf_json(r.boundary)},
            {"n_words", r.n_words},
            {"n_pairs", r.n_pairs}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.system = j.value("system", std::string{});
    r.ned = opt_from(j.at("ned"));
    r.coverage = j.at("coverage").get<double>();
    r.grouping = prf_from(j.at("grouping"));
    r.token = prf_from(j.at("token"));
    r.type = prf_from(j.at("type"));
    r.boundary = prf_from(j.at("boundary"));
    r.n_words = j.at("n_words").get<std::int64_t>();
    r.n_pairs = j.at("n_pairs").get<std::int64_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("report file: ") + e.what());
  }
}

std::string report_table(const std::vector<EvalReport>& rows) {
  auto pct = [](const std::optional<double>& v) { return v ? fmt::format("{:.1f}", 100.0 * *v) : std::string("NA"); };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"system", "NED", "Cov", "grp P", "grp R", "grp F", "tok P", "tok R", "tok F", "typ P", "typ R",
                   "typ F", "bnd P", "bnd R", "bnd F", "n-words", "n-pairs"});
  for (const auto& r : rows) {
    std::vector<std::string> row{r.system.empty() ? "-" : r.system, pct(r.ned), pct(r.coverage)};
    for (const Prf* p : {&r.grouping, &r.token, &r.type, &r.boundary}) {
      row.push_back(pct(p->precision));
      row.push_back(pct(p->recall));
      row.push_back(pct(p->f_score));
    }
    row.push_back(std::to_string(r.n_words));
    row.push_back(std::to_string(r.n_pairs));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out += fmt::format("{:<{}}", row[c], width[c]);
      } else {
        out += fmt::format("  {:>{}}", row[c], width[c]);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace termforge
