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

#include "termforge/baseline.hpp"

#include <limits>

#include <nlohmann/json.hpp>
#include "termforge/error.hpp"
#include "termforge/seqmatch.hpp"

namespace termforge {

using nlohmann::json;

void validate(const LeaderParams& p) {
  if (!(p.radius > 0.0 && p.radius <= 1.0)) throw Error("leader params: T must lie in (0, 1]");
  if (!(p.separation > 0.0)) throw Error("leader params: a must be > 0");
  if (p.min_length < 1) throw Error("leader params: R must be >= 1");
}

void require_dense_ids(const SegmentSet& segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].id != static_cast<std::int64_t>(i)) {
      throw Error("segment ids must be dense and ordered (segment at index " + std::to_string(i) +
                  " has id " + std::to_string(segments[i].id) + ")");
    }
  }
}

double mean_symbol_length(const SegmentSet& segments, const std::vector<std::int64_t>& members) {
  if (members.empty()) return 0.0;
  std::size_t total = 0;
  for (auto id : members) total += segments[static_cast<std::size_t>(id)].symbols.size();
  return static_cast<double>(total) / static_cast<double>(members.size());
}

ClusterSet leader_cluster(const SegmentSet& segments, const LeaderParams& params) {
  validate(params);
  require_dense_ids(segments);
  ClusterSet out;
  const double found_distance = params.separation * params.radius;

  for (const auto& seg : segments) {
    if (static_cast<int>(seg.symbols.size()) < params.min_length) continue;

    std::vector<double> dist(out.clusters.size());
    std::size_t nearest = 0;
    bool assigned = false;
    for (std::size_t c = 0; c < out.clusters.size(); ++c) {
      const auto& leader = segments[static_cast<std::size_t>(out.clusters[c].leader)];
      dist[c] = normalized_levenshtein(seg.symbols, leader.symbols);
      if (dist[c] <= params.radius) {
        out.clusters[c].members.push_back(seg.id);
        assigned = true;
        break;
      }
      if (dist[c] < dist[nearest]) nearest = c;
    }
    if (assigned) continue;

    // Every leader is farther than T here, so dist is fully populated.
    bool can_found = true;
    for (double d : dist) can_found = can_found && d >= found_distance;
    if (can_found) {
      Cluster c;
      c.id = static_cast<std::int64_t>(out.clusters.size());
      c.leader = seg.id;
      c.members.push_back(seg.id);
      out.clusters.push_back(std::move(c));
    } else if (params.ambiguous == AmbiguousPolicy::kNearest) {
      out.clusters[nearest].members.push_back(seg.id);
      out.clusters[nearest].nearest_assigned.push_back(seg.id);
    } else {
      out.noise.push_back(seg.id);
    }
  }
  for (auto& c : out.clusters) c.mean_len = mean_symbol_length(segments, c.members);
  return out;
}

ClusterSetStats cluster_set_stats(const ClusterSet& clusters) {
  ClusterSetStats s;
  s.count = clusters.clusters.size();
  for (const auto& c : clusters.clusters) {
    s.total_members += c.members.size();
    ++s.size_histogram[c.members.size()];
    s.mean_len.push_back(c.mean_len);
  }
  return s;
}

std::string clusters_to_json(const ClusterSet& clusters, bool with_stability) {
  json arr = json::array();
  for (const auto& c : clusters.clusters) {
    json jc = {{"id", c.id}, {"leader", c.leader}, {"members", c.members}, {"mean_len", c.mean_len}};
    if (!c.nearest_assigned.empty()) jc["nearest_assigned"] = c.nearest_assigned;
    if (with_stability) jc["stability"] = c.stability;
    arr.push_back(std::move(jc));
  }
  return json{{"clusters", arr}, {"noise", clusters.noise}}.dump(1) + "\n";
}

ClusterSet clusters_from_json(const std::string& text) {
  ClusterSet out;
  try {
    const json j = json::parse(text);
    for (const auto& jc : j.at("clusters")) {
      Cluster c;
      c.id = jc.at("id").get<std::int64_t>();
      c.leader = jc.at("leader").get<std::int64_t>();
      c.members = jc.at("members").get<std::vector<std::int64_t>>();
      if (jc.contains("mean_len")) c.mean_len = jc.at("mean_len").get<double>();
      if (jc.contains("nearest_assigned")) {
        c.nearest_assigned = jc.at("nearest_assigned").get<std::vector<std::int64_t>>();
      }
      if (jc.contains("stability")) c.stability = jc.at("stability").get<double>();
      out.clusters.push_back(std::move(c));
    }
    if (j.contains("noise")) out.noise = j.at("noise").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw Error(std::string("cluster file: ") + e.what());
  }
  return out;
}

}  // namespace termforge
