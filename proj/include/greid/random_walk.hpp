#pragma once

#include "greid/graph.hpp"

namespace greid {

/// Affinity scores y^(t) for every node of a walk graph, plus the iteration
/// count that produced them.
struct WalkState {
  Vec scores;
  int iteration = 0;
};

/// One walk iteration: scores' = W * scores.
inline WalkState walk_step(const AffinityMatrix& w, const WalkState& y) {
  if (w.normalized.cols() != y.scores.size()) {
    throw ConfigError("walk_step: matrix and score dimensions disagree");
  }
  WalkState out;
  out.scores = w.normalized * y.scores;
  out.iteration = y.iteration + 1;
  return out;
}

inline WalkState iterate_walk(const AffinityMatrix& w, const WalkState& y0, int steps) {
  if (steps < 1) throw ConfigError("iterate_walk: steps must be positive");
  WalkState y = y0;
  for (int s = 0; s < steps; ++s) y = walk_step(w, y);
  return y;
}

/// Average refined affinity of a candidate subgroup to a gallery group.
///
/// The walk runs on the joint graph over candidate and gallery real nodes.
/// Initial scores: a candidate node starts from its mean raw affinity to the
/// gallery nodes; a gallery node starts from its best raw affinity to the
/// candidate nodes, so gallery members the candidate fails to cover pull the
/// averaged score down after the walk mixes. Returns the mean of the refined
/// scores over the candidate's nodes.
inline double average_affinity(const ContextGraph& candidate, const ContextGraph& gallery,
                               const AffinityScorer& scorer, int steps = 1) {
  if (candidate.real_count < 1) throw ConfigError("average_affinity: empty candidate");
  if (gallery.real_count < 1) throw ConfigError("average_affinity: empty gallery");

  const int nc = candidate.real_count;
  const int ng = gallery.real_count;
  std::vector<const PersonDescriptor*> joint = real_people(candidate);
  {
    const auto g = real_people(gallery);
    joint.insert(joint.end(), g.begin(), g.end());
  }

  const Mat raw = pairwise_affinities(joint, scorer);
  const AffinityMatrix w = normalize_affinities(raw);

  WalkState y0;
  y0.scores = Vec::Zero(nc + ng);
  for (int i = 0; i < nc; ++i) {
    double sum = 0.0;
    for (int j = 0; j < ng; ++j) sum += raw(i, nc + j);
    y0.scores(i) = sum / ng;
  }
  for (int j = 0; j < ng; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nc; ++i) best = std::max(best, raw(nc + j, i));
    y0.scores(nc + j) = best;
  }

  const WalkState y = iterate_walk(w, y0, steps);
  double total = 0.0;
  for (int i = 0; i < nc; ++i) total += y.scores(i);
  return total / nc;
}

/// Argmax of average_affinity over the candidate list; ties go to the
/// earliest candidate. Returns (index, score).
inline std::pair<std::size_t, double> select_best_index(const std::vector<ContextGraph>& candidates,
                                                        const ContextGraph& gallery,
                                                        const AffinityScorer& scorer,
                                                        int steps = 1) {
  if (candidates.empty()) throw ConfigError("select_best_graph: no candidates");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double s = average_affinity(candidates[i], gallery, scorer, steps);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return {best, best_score};
}

inline std::pair<ContextGraph, double> select_best_graph(const std::vector<ContextGraph>& candidates,
                                                         const ContextGraph& gallery,
                                                         const AffinityScorer& scorer,
                                                         int steps = 1) {
  const auto [idx, score] = select_best_index(candidates, gallery, scorer, steps);
  return {candidates[idx], score};
}

/// All candidate subgroups of a probe graph: sizes swept from 2 up to the
/// real-node count (the full graph itself when fewer than 2 real nodes).
inline std::vector<ContextGraph> candidate_pool(const ContextGraph& probe,
                                                const AffinityScorer& scorer,
                                                int walk_steps = 1) {
  if (probe.real_count < 2) return {probe};
  const AffinityMatrix w = normalize_affinities(pairwise_affinities(real_people(probe), scorer));
  std::vector<ContextGraph> pool;
  for (int size = 2; size <= probe.real_count; ++size) {
    auto cands = enumerate_candidates(probe, w, size, walk_steps);
    for (auto& c : cands) pool.push_back(std::move(c));
  }
  return pool;
}

}  // namespace greid
