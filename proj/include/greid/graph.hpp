#pragma once

#include "greid/affinity.hpp"

#include <numeric>

namespace greid {

struct GraphNode {
  PersonDescriptor person;         // empty descriptor for dummies
  std::vector<Vec> part_features;  // P vectors of dimension D/P; all-zero for dummies
  bool is_dummy = false;
};

/// Fixed-size context graph: real nodes first, sorted ascending by depth
/// (ties by person_id), then dummy padding up to n_max. Edges form the
/// complete graph over real nodes; dummies are never touched by an edge.
struct ContextGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int n_max = 0;
  int real_count = 0;
  int part_count = 0;
  int part_dim = 0;

  const GraphNode& node(int i) const { return nodes[static_cast<std::size_t>(i)]; }
};

namespace detail {

inline void pad_and_wire(ContextGraph& g) {
  const std::size_t real = static_cast<std::size_t>(g.real_count);
  std::vector<Vec> zero_parts(static_cast<std::size_t>(g.part_count),
                              Vec::Zero(g.part_dim));
  for (std::size_t i = real; i < static_cast<std::size_t>(g.n_max); ++i) {
    GraphNode dummy;
    dummy.part_features = zero_parts;
    dummy.is_dummy = true;
    g.nodes.push_back(std::move(dummy));
  }
  for (int i = 0; i < g.real_count; ++i) {
    for (int j = i + 1; j < g.real_count; ++j) {
      g.edges.emplace_back(i, j);
    }
  }
}

}  // namespace detail

/// Builds the depth-ordered graph for one group, padded to n_max nodes.
/// Member order in the input is irrelevant: sorting canonicalizes.
inline ContextGraph build_graph(const GroupSample& group, int n_max) {
  if (group.members.empty()) throw DataError("group '" + group.group_id + "' has no members");
  if (static_cast<int>(group.members.size()) > n_max) {
    throw ConfigError("group '" + group.group_id + "' has " +
                      std::to_string(group.members.size()) + " members, exceeding n_max " +
                      std::to_string(n_max));
  }
  GroupSample sorted = group;
  sort_members(sorted);

  ContextGraph g;
  g.n_max = n_max;
  g.real_count = static_cast<int>(sorted.members.size());
  g.part_count = static_cast<int>(sorted.members.front().parts.size());
  g.part_dim = static_cast<int>(sorted.members.front().parts.front().size());
  g.nodes.reserve(static_cast<std::size_t>(n_max));
  for (auto& m : sorted.members) {
    GraphNode node;
    node.part_features = m.parts;
    node.person = std::move(m);
    node.is_dummy = false;
    g.nodes.push_back(std::move(node));
  }
  detail::pad_and_wire(g);
  return g;
}

/// Subgraph induced by the given real-node indices (kept in depth order),
/// re-padded to the parent's n_max.
inline ContextGraph induced_subgraph(const ContextGraph& parent, std::vector<int> real_indices) {
  std::sort(real_indices.begin(), real_indices.end());
  ContextGraph g;
  g.n_max = parent.n_max;
  g.real_count = static_cast<int>(real_indices.size());
  g.part_count = parent.part_count;
  g.part_dim = parent.part_dim;
  g.nodes.reserve(static_cast<std::size_t>(parent.n_max));
  for (int idx : real_indices) {
    if (idx < 0 || idx >= parent.real_count) {
      throw ConfigError("subgraph index out of range");
    }
    g.nodes.push_back(parent.node(idx));
  }
  detail::pad_and_wire(g);
  return g;
}

/// Candidate subgroups, one per real starting node: the start plus the
/// (size-1) nodes it visits most strongly after `walk_steps` applications of
/// the walk matrix (ties broken by depth order). Candidates with equal node
/// sets are merged, keeping first-start order.
inline std::vector<ContextGraph> enumerate_candidates(const ContextGraph& graph,
                                                      const AffinityMatrix& walk, int size,
                                                      int walk_steps = 1) {
  const int n = graph.real_count;
  if (size < 1) throw ConfigError("candidate size must be positive");
  if (size > n) {
    throw ConfigError("candidate size " + std::to_string(size) +
                      " exceeds real node count " + std::to_string(n));
  }
  if (walk.normalized.rows() != n) {
    throw ConfigError("walk matrix size does not match real node count");
  }
  if (walk_steps < 1) throw ConfigError("walk_steps must be positive");

  Mat visit = walk.normalized;
  for (int s = 1; s < walk_steps; ++s) visit = visit * walk.normalized;

  std::vector<std::vector<int>> seen_sets;
  std::vector<ContextGraph> out;
  for (int start = 0; start < n; ++start) {
    std::vector<int> others;
    others.reserve(static_cast<std::size_t>(n - 1));
    for (int u = 0; u < n; ++u) {
      if (u != start) others.push_back(u);
    }
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
      if (visit(start, a) != visit(start, b)) return visit(start, a) > visit(start, b);
      return a < b;
    });
    std::vector<int> chosen{start};
    chosen.insert(chosen.end(), others.begin(), others.begin() + (size - 1));
    std::sort(chosen.begin(), chosen.end());
    if (std::find(seen_sets.begin(), seen_sets.end(), chosen) != seen_sets.end()) continue;
    seen_sets.push_back(chosen);
    out.push_back(induced_subgraph(graph, chosen));
  }
  return out;
}

/// Real-node descriptor pointers in node order.
inline std::vector<const PersonDescriptor*> real_people(const ContextGraph& g) {
  std::vector<const PersonDescriptor*> out;
  out.reserve(static_cast<std::size_t>(g.real_count));
  for (int i = 0; i < g.real_count; ++i) out.push_back(&g.node(i).person);
  return out;
}

}  // namespace greid
