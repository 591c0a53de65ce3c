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

#include "termforge/recluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "termforge/error.hpp"
#include "termforge/parallel.hpp"

namespace termforge {

void validate(const HdbscanParams& p) {
  if (p.min_cluster_size < 2) throw Error("hdbscan: min_cluster_size must be >= 2");
  if (p.min_samples < 1) throw Error("hdbscan: min_samples must be >= 1");
  if (!(p.cluster_selection_epsilon >= 0.0)) throw Error("hdbscan: cluster_selection_epsilon must be >= 0");
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> core_distances(const DenseMatrix& points, int k) {
  const std::size_t n = points.rows;
  if (k < 1 || n <= static_cast<std::size_t>(k)) {
    throw Error("core distances: need more than k=" + std::to_string(k) + " points, got " + std::to_string(n));
  }
  std::vector<double> core(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.push_back(euclidean(points.row(i), points.row(j)));
    }
    auto kth = d.begin() + (k - 1);
    std::nth_element(d.begin(), kth, d.end());
    core[i] = *kth;
  });
  return core;
}

DenseMatrix mutual_reachability(const DenseMatrix& points, const std::vector<double>& core) {
  const std::size_t n = points.rows;
  if (core.size() != n) throw Error("mutual reachability: core distance count differs from point count");
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::max({core[i], core[j], euclidean(points.row(i), points.row(j))});
      m.at(i, j) = d;
      m.at(j, i) = d;
    }
  }
  return m;
}

namespace {

// Dist returns (weight, tiebreak); keys compare lexicographically.
template <typename Dist>
std::vector<Edge> prim(std::size_t n, Dist&& dist) {
  if (n < 2) throw Error("mst: need at least 2 points");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> key(n, {kInf, kInf});
  std::vector<std::size_t> from(n, 0);
  std::vector<char> in_tree(n, 0);
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const auto d = dist(current, v);
      if (d < key[v]) {
        key[v] = d;
        from[v] = current;
      }
      if (next == n || key[v] < key[next]) next = v;
    }
    in_tree[next] = 1;
    edges.push_back({from[next], next, key[next].first, key[next].second});
    current = next;
  }
  return edges;
}

}  // namespace

std::vector<Edge> mst(const DenseMatrix& distances) {
  if (distances.rows != distances.cols) throw Error("mst: distance matrix must be square");
  return prim(distances.rows, [&](std::size_t i, std::size_t j) { return std::pair{distances.at(i, j), 0.0}; });
}

std::vector<Edge> mst_mutual_reachability(const DenseMatrix& points, const std::vector<double>& core) {
  if (core.size() != points.rows) throw Error("mst: core distance count differs from point count");
  return prim(points.rows, [&](std::size_t i, std::size_t j) {
    const double d = euclidean(points.row(i), points.row(j));
    return std::pair{std::max({core[i], core[j], d}), d};
  });
}

Dendrogram build_hierarchy(std::size_t n, const std::vector<Edge>& edges) {
  if (n < 2 || edges.size() != n - 1) {
    throw Error("build_hierarchy: a spanning tree over " + std::to_string(n) + " points needs " +
                std::to_string(n == 0 ? 0 : n - 1) + " edges, got " + std::to_string(edges.size()));
  }
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::pair{edges[a].weight, edges[a].tiebreak} < std::pair{edges[b].weight, edges[b].tiebreak};
                   });

  // parent over 2n-1 dendrogram nodes; node n+i is created by merge i.
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::size_t> size(2 * n - 1, 1);
  auto find = [&](std::size_t x) {
    std::size_t root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      const std::size_t up = parent[x];
      parent[x] = root;
      x = up;
    }
    return root;
  };

  Dendrogram d;
  d.n_points = n;
  d.merges.reserve(n - 1);
  for (std::size_t idx : order) {
    const Edge& e = edges[idx];
    if (e.u >= n || e.v >= n) throw Error("build_hierarchy: edge endpoint out of range");
    if (!std::isfinite(e.weight) || e.weight < 0.0) throw Error("build_hierarchy: invalid edge weight");
    const std::size_t a = find(e.u);
    const std::size_t b = find(e.v);
    if (a == b) throw Error("build_hierarchy: edges contain a cycle");
    const std::size_t node = n + d.merges.size();
    parent[a] = node;
    parent[b] = node;
    size[node] = size[a] + size[b];
    d.merges.push_back({a, b, e.weight, size[node]});
  }
  return d;
}

CondensedTree condense(const Dendrogram& dend, std::size_t min_cluster_size) {
  const std::size_t n = dend.n_points;
  if (n < 2 || dend.merges.size() != n - 1) throw Error("condense: malformed dendrogram");
  if (min_cluster_size < 1) throw Error("condense: min_cluster_size must be >= 1");

  double floor_distance = std::numeric_limits<double>::infinity();
  for (const auto& m : dend.merges) {
    if (m.distance > 0.0) floor_distance = std::min(floor_distance, m.distance);
  }
  if (!std::isfinite(floor_distance)) floor_distance = 1.0;
  auto lambda_of = [&](double distance) { return 1.0 / std::max(distance, floor_distance); };

  const std::size_t root_node = 2 * n - 2;
  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : dend.merges[node - n].size; };

  // Points below a node, in left-to-right order.
  auto leaves = [&](std::size_t node, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        out.push_back(x);
      } else {
        stack.push_back(dend.merges[x - n].right);
        stack.push_back(dend.merges[x - n].left);
      }
    }
  };

  CondensedTree tree;
  tree.n_points = n;
  tree.min_cluster_size = min_cluster_size;
  tree.birth_lambda.push_back(0.0);
  tree.parent.push_back(n);
  tree.size.push_back(n);

  auto new_cluster = [&](std::size_t parent_label, double lambda, std::size_t sz) {
    const std::size_t label = n + tree.birth_lambda.size();
    tree.birth_lambda.push_back(lambda);
    tree.parent.push_back(parent_label);
    tree.size.push_back(sz);
    tree.rows.push_back({parent_label, label, lambda, sz});
    return label;
  };

  // Breadth-first walk over dendrogram nodes that still carry a cluster label.
  std::vector<std::pair<std::size_t, std::size_t>> queue{{root_node, n}};
  std::vector<std::size_t> fallen;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto [node, label] = queue[head];
    if (node < n) continue;
    const Merge& m = dend.merges[node - n];
    const double lambda = lambda_of(m.distance);
    const std::size_t left_size = node_size(m.left);
    const std::size_t right_size = node_size(m.right);
    const bool left_big = left_size >= min_cluster_size;
    const bool right_big = right_size >= min_cluster_size;

    auto fall_out = [&](std::size_t child) {
      fallen.clear();
      leaves(child, fallen);
      for (std::size_t p : fallen) tree.rows.push_back({label, p, lambda, 1});
    };

    if (left_big && right_big) {
      queue.emplace_back(m.left, new_cluster(label, lambda, left_size));
      queue.emplace_back(m.right, new_cluster(label, lambda, right_size));
    } else if (!left_big && !right_big) {
      fall_out(m.left);
      fall_out(m.right);
    } else if (!left_big) {
      fall_out(m.left);
      queue.emplace_back(m.right, label);
    } else {
      fall_out(m.right);
      queue.emplace_back(m.left, label);
    }
  }

  tree.stability.assign(tree.cluster_count(), 0.0);
  for (const auto& r : tree.rows) {
    const std::size_t c = r.parent - n;
    tree.stability[c] += (r.lambda - tree.birth_lambda[c]) * static_cast<double>(r.child_size);
  }
  return tree;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  const auto k = static_cast<std::size_t>(max_label + 1);
  std::vector<std::size_t> count(k, 0), first(k, labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto l = static_cast<std::size_t>(labels[i]);
    ++count[l];
    first[l] = std::min(first[l], i);
  }
  std::vector<std::size_t> order;
  for (std::size_t l = 0; l < k; ++l) {
    if (count[l] > 0) order.push_back(l);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (count[a] != count[b]) return count[a] > count[b];
    return first[a] < first[b];
  });
  std::vector<int> rename(k, -1);
  for (std::size_t i = 0; i < order.size(); ++i) rename[order[i]] = static_cast<int>(i);
  std::vector<int> out(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[i] = rename[static_cast<std::size_t>(labels[i])];
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> cluster_children(const CondensedTree& tree) {
  std::vector<std::vector<std::size_t>> children(tree.cluster_count());
  for (std::size_t c = 1; c < tree.cluster_count(); ++c) children[tree.parent[c]- tree.n_points].push_back(c);
  return children;
}

bool root_eligible(const CondensedTree& tree, bool allow_single_cluster) {
  return allow_single_cluster && tree.n_points >= tree.min_cluster_size;
}

// Selection flags per cluster index (id - n_points).
std::vector<char> eom_selection(const CondensedTree& tree, bool allow_single_cluster) {
  const std::size_t m = tree.cluster_count();
  const auto children = cluster_children(tree);
  std::vector<char> selected(m, 0);
  std::vector<double> best(m, 0.0);
  const bool root_ok = root_eligible(tree, allow_single_cluster);

  auto deselect_below = [&](std::size_t c) {
    std::vector<std::size_t> stack(children[c].begin(), children[c].end());
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      selected[x] = 0;
      stack.insert(stack.end(), children[x].begin(), children[x].end());
    }
  };

  for (std::size_t c = m; c-- > 0;) {
    if (c == 0 && !root_ok) break;
    if (children[c].empty()) {
      selected[c] = 1;
      best[c] = tree.stability[c];
      continue;
    }
    double below = 0.0;
    for (std::size_t ch : children[c]) below += best[ch];
    if (tree.stability[c] > below) {
      selected[c] = 1;
      best[c] = tree.stability[c];
      deselect_below(c);
    } else {
      best[c] = below;
    }
  }
  return selected;
}

Labelling label_points(const CondensedTree& tree, const std::vector<char>& selected) {
  const std::size_t n = tree.n_points;
  std::vector<int> raw(n, -1);
  for (const auto& r : tree.rows) {
    if (r.child >= n) continue;
    std::size_t c = r.parent - n;
    while (true) {
      if (selected[c]) {
        raw[r.child] = static_cast<int>(c);
        break;
      }
      if (c == 0) break;
      c = tree.parent[c] - n;
    }
  }
  Labelling out;
  out.labels = canonical_labels(raw);
  int k = 0;
  for (int l : out.labels) k = std::max(k, l + 1);
  out.tree_cluster.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] >= 0) out.tree_cluster[static_cast<std::size_t>(out.labels[i])] = static_cast<std::size_t>(raw[i]) + n;
  }
  return out;
}

}  // namespace

Labelling extract_eom(const CondensedTree& tree, bool allow_single_cluster) {
  return label_points(tree, eom_selection(tree, allow_single_cluster));
}

Labelling extract_hybrid(const CondensedTree& tree, double epsilon, bool allow_single_cluster) {
  if (!(epsilon >= 0.0)) throw Error("hybrid extraction: epsilon must be >= 0");
  std::vector<char> selected = eom_selection(tree, allow_single_cluster);
  if (epsilon == 0.0) return label_points(tree, selected);

  const std::size_t m = tree.cluster_count();
  auto birth_distance = [&](std::size_t c) {
    return c == 0 ? std::numeric_limits<double>::infinity() : 1.0 / tree.birth_lambda[c];
  };
  // The root is born at infinite distance, so every climb ends by then.
  std::vector<char> hybrid(m, 0);
  for (std::size_t c = 0; c < m; ++c) {
    if (!selected[c]) continue;
    std::size_t x = c;
    while (birth_distance(x) < epsilon) x = tree.parent[x] - tree.n_points;
    hybrid[x] = 1;
  }
  // Drop selections nested inside another selection.
  for (std::size_t c = 1; c < m; ++c) {
    if (!hybrid[c]) continue;
    for (std::size_t a = tree.parent[c] - tree.n_points;; a = tree.parent[a] - tree.n_points) {
      if (hybrid[a]) {
        hybrid[c] = 0;
        break;
      }
      if (a == 0) break;
    }
  }
  return label_points(tree, hybrid);
}

HdbscanResult hdbscan(const DenseMatrix& points, const HdbscanParams& params, Extraction extraction) {
  validate(params);
  const std::size_t n = points.rows;
  const auto need = static_cast<std::size_t>(std::max(params.min_samples, params.min_cluster_size));
  if (n <= need) {
    throw Error("hdbscan: need more than " + std::to_string(need) + " points, got " + std::to_string(n));
  }
  if (n > params.max_points) {
    throw Error("hdbscan: " + std::to_string(n) + " points exceed the configured limit of " +
                std::to_string(params.max_points) + "; subsample first");
  }
  const auto core = core_distances(points, params.min_samples);
  const auto edges = mst_mutual_reachability(points, core);
  const auto tree = condense(build_hierarchy(n, edges), static_cast<std::size_t>(params.min_cluster_size));

  HdbscanResult result;
  result.labelling = extraction == Extraction::kEom
                         ? extract_eom(tree, params.allow_single_cluster)
                         : extract_hybrid(tree, params.cluster_selection_epsilon, params.allow_single_cluster);
  const std::size_t k = result.labelling.tree_cluster.size();
  result.stability.resize(k);
  for (std::size_t l = 0; l < k; ++l) result.stability[l] = tree.stability[result.labelling.tree_cluster[l] - n];

  std::vector<double> fall_lambda(n, 0.0);
  for (const auto& r : tree.rows) {
    if (r.child < n) fall_lambda[r.child] = r.lambda;
  }
  result.exemplar.assign(k, n);
  for (std::size_t i = 0; i < n; ++i) {
    const int l = result.labelling.labels[i];
    if (l < 0) continue;
    auto& ex = result.exemplar[static_cast<std::size_t>(l)];
    if (ex == n || fall_lambda[i] > fall_lambda[ex]) ex = i;
  }
  return result;
}

ClusterSet to_cluster_set(const HdbscanResult& result) {
  ClusterSet out;
  const auto& labels = result.labelling.labels;
  out.clusters.resize(result.exemplar.size());
  for (std::size_t l = 0; l < out.clusters.size(); ++l) {
    out.clusters[l].id = static_cast<std::int64_t>(l);
    out.clusters[l].leader = static_cast<std::int64_t>(result.exemplar[l]);
    out.clusters[l].stability = result.stability[l];
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      out.noise.push_back(static_cast<std::int64_t>(i));
    } else {
      out.clusters[static_cast<std::size_t>(labels[i])].members.push_back(static_cast<std::int64_t>(i));
    }
  }
  return out;
}

}  // namespace termforge
