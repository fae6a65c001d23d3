#pragma once

#include "greid/matching.hpp"
#include "greid/random_walk.hpp"

namespace greid {

struct PipelineFlags {
  bool random_walk = false;
  bool group_matching = false;
};

struct RankingResult {
  std::string probe_id;
  std::vector<std::pair<std::string, double>> ranking;  // gallery id, score, descending
  int correct_rank = 0;  // 1-based; 0 when no gallery entry shares the probe's group id
};

struct RankOptions {
  PipelineFlags flags;
  int walk_steps = 1;
  int threads = 1;
};

namespace detail {

inline Vec mean_feature(const ContextGraph& g) {
  Vec m = Vec::Zero(g.node(0).person.feature.size());
  for (int i = 0; i < g.real_count; ++i) m += g.node(i).person.feature;
  return m / g.real_count;
}

inline double baseline_similarity(const ContextGraph& a, const ContextGraph& b) {
  const Vec ma = mean_feature(a);
  const Vec mb = mean_feature(b);
  const double na = ma.norm();
  const double nb = mb.norm();
  if (na < 1e-300 || nb < 1e-300) return -1.0;
  return ma.dot(mb) / (na * nb);
}

}  // namespace detail

/// Ranks every gallery group for every probe group.
///
/// With random_walk enabled the probe is first reduced, per gallery entry, to
/// the candidate subgroup with the highest average walk affinity (candidate
/// sizes swept from 2 to the probe's real-node count). With group_matching
/// enabled the score is the matching-head similarity; otherwise it is the
/// cosine of the groups' mean member features. Gallery order is irrelevant:
/// rankings sort by descending score with ties broken by gallery id, and
/// results are returned sorted by probe id.
inline std::vector<RankingResult> rank_all(const std::vector<GroupSample>& probes,
                                           const std::vector<GroupSample>& gallery,
                                           const MatchParams* params,
                                           const AffinityScorer& scorer,
                                           const RankOptions& opt = {}) {
  if (gallery.empty()) throw DataError("rank_all: empty gallery");
  if (probes.empty()) throw DataError("rank_all: no probes");
  if (opt.flags.group_matching) {
    if (params == nullptr) throw ConfigError("rank_all: group matching requires match params");
    params->validate();
  }
  {
    std::unordered_set<std::string> ids;
    for (const auto& g : gallery) {
      if (!ids.insert(g.group_id).second) {
        throw DataError("rank_all: duplicate gallery group id '" + g.group_id + "'");
      }
    }
  }

  int n_max = 0;
  for (const auto& g : probes) n_max = std::max(n_max, static_cast<int>(g.members.size()));
  for (const auto& g : gallery) n_max = std::max(n_max, static_cast<int>(g.members.size()));

  std::vector<ContextGraph> gallery_graphs;
  gallery_graphs.reserve(gallery.size());
  for (const auto& g : gallery) gallery_graphs.push_back(build_graph(g, n_max));

  std::vector<RankingResult> results(probes.size());
  parallel_for(static_cast<int>(probes.size()), opt.threads, [&](int pi) {
    const auto& probe = probes[static_cast<std::size_t>(pi)];
    const ContextGraph probe_graph = build_graph(probe, n_max);
    std::vector<ContextGraph> pool;
    if (opt.flags.random_walk) {
      pool = candidate_pool(probe_graph, scorer, opt.walk_steps);
    }

    RankingResult res;
    res.probe_id = probe.group_id;
    res.ranking.reserve(gallery.size());
    for (std::size_t gi = 0; gi < gallery.size(); ++gi) {
      const ContextGraph& gal = gallery_graphs[gi];
      const ContextGraph* selected = &probe_graph;
      if (opt.flags.random_walk) {
        const auto [idx, score] = select_best_index(pool, gal, scorer, opt.walk_steps);
        (void)score;
        selected = &pool[idx];
      }
      const double s = opt.flags.group_matching
                           ? match_similarity(*selected, gal, *params)
                           : detail::baseline_similarity(*selected, gal);
      res.ranking.emplace_back(gallery[gi].group_id, s);
    }
    std::sort(res.ranking.begin(), res.ranking.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t r = 0; r < res.ranking.size(); ++r) {
      if (res.ranking[r].first == probe.group_id) {
        res.correct_rank = static_cast<int>(r) + 1;
        break;
      }
    }
    results[static_cast<std::size_t>(pi)] = std::move(res);
  });

  std::sort(results.begin(), results.end(),
            [](const RankingResult& a, const RankingResult& b) { return a.probe_id < b.probe_id; });
  return results;
}

/// Rank-k accuracies: fraction of probes whose correct match sits within the
/// top k. Non-decreasing in k by construction.
inline std::vector<double> cmc(const std::vector<RankingResult>& results,
                               const std::vector<int>& ks) {
  if (results.empty()) throw ConfigError("cmc: no results");
  std::vector<double> out;
  out.reserve(ks.size());
  for (int k : ks) {
    if (k < 1) throw ConfigError("cmc: ranks must be positive");
    int hits = 0;
    for (const auto& r : results) {
      if (r.correct_rank >= 1 && r.correct_rank <= k) ++hits;
    }
    out.push_back(static_cast<double>(hits) / static_cast<double>(results.size()));
  }
  return out;
}

/// Splits a manifest into probe and gallery views: for each group identity
/// with at least two cameras, the lexicographically first camera is the probe
/// and the second the gallery. Identities with a single view are skipped.
inline std::pair<std::vector<GroupSample>, std::vector<GroupSample>> split_probe_gallery(
    const DatasetManifest& data) {
  std::unordered_map<std::string, std::vector<const GroupSample*>> by_gid;
  std::vector<std::string> order;
  for (const auto& g : data.groups) {
    auto& v = by_gid[g.group_id];
    if (v.empty()) order.push_back(g.group_id);
    v.push_back(&g);
  }
  std::pair<std::vector<GroupSample>, std::vector<GroupSample>> out;
  for (const auto& gid : order) {
    auto& views = by_gid[gid];
    if (views.size() < 2) continue;
    std::sort(views.begin(), views.end(), [](const GroupSample* a, const GroupSample* b) {
      return a->camera_id < b->camera_id;
    });
    out.first.push_back(*views[0]);
    out.second.push_back(*views[1]);
  }
  return out;
}

inline const std::vector<int>& default_ranks() {
  static const std::vector<int> ks{1, 5, 10, 20};
  return ks;
}

inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

/// Results file: one line per probe (rank + top-20 gallery ids), then a
/// summary block with Rank-1/5/10/20 percentages.
inline void write_results(const std::vector<RankingResult>& results, std::ostream& out,
                          const std::vector<int>& ks = default_ranks()) {
  out << "# probe_id\trank\ttop20\n";
  for (const auto& r : results) {
    out << r.probe_id << '\t' << r.correct_rank << '\t';
    const std::size_t top = std::min<std::size_t>(20, r.ranking.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (i > 0) out << ',';
      out << r.ranking[i].first;
    }
    out << '\n';
  }
  out << "# summary\n";
  const auto accs = cmc(results, ks);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    out << "Rank-" << ks[i] << '\t' << format_percent(accs[i]) << '\n';
  }
}

struct AblationRow {
  std::string variant;
  std::vector<double> rank_acc;  // aligned with default_ranks()
};

inline void write_ablation(const std::vector<AblationRow>& rows, std::ostream& out,
                           const std::vector<int>& ks = default_ranks()) {
  out << "# ablation\nvariant";
  for (int k : ks) out << "\trank" << k;
  out << '\n';
  for (const auto& row : rows) {
    out << row.variant;
    for (double a : row.rank_acc) out << '\t' << format_percent(a);
    out << '\n';
  }
}

}  // namespace greid
