#pragma once

#include "greid/matching.hpp"

namespace greid {

struct GraphPair {
  ContextGraph a;
  ContextGraph b;
  bool same_group = false;
};

/// Similarity of one pair plus d(similarity)/d(params) via the tape.
struct PairGradient {
  double similarity = 0.0;
  MatchGrads grads;
};

inline PairGradient pair_similarity_gradient(const ContextGraph& a, const ContextGraph& b,
                                             const MatchParams& p) {
  detail::check_pair_config(a, b, p);
  Tape tape;
  TapeExec ex(tape, p);
  const int sim = detail::pair_similarity_expr(ex, a, b, p.rounds);
  tape.backward(sim);
  return PairGradient{tape.scalar_value(sim), ex.grads(p)};
}

/// Circle loss over the batch similarities and its gradient with respect to
/// every MatchParams tensor. Pairs are processed independently (optionally in
/// parallel); the gradient is the fixed-order weighted sum of the per-pair
/// similarity gradients, so results do not depend on the thread count.
inline std::pair<double, MatchGrads> loss_and_grad(const std::vector<GraphPair>& batch,
                                                   const MatchParams& p, int threads = 1) {
  p.validate();
  bool has_pos = false, has_neg = false;
  for (const auto& pr : batch) (pr.same_group ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw DataError("loss_and_grad: batch needs at least one positive and one negative pair");
  }

  std::vector<PairGradient> results(batch.size());
  parallel_for(static_cast<int>(batch.size()), threads, [&](int i) {
    const auto& pr = batch[static_cast<std::size_t>(i)];
    results[static_cast<std::size_t>(i)] = pair_similarity_gradient(pr.a, pr.b, p);
  });

  std::vector<double> pos, neg;
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].same_group) {
      pos.push_back(results[i].similarity);
      pos_idx.push_back(i);
    } else {
      neg.push_back(results[i].similarity);
      neg_idx.push_back(i);
    }
  }

  const CircleLossGrads cl =
      circle_loss_with_grads(pos, neg, p.gamma, p.weight_pos, p.weight_neg);

  MatchGrads total = MatchGrads::zeros_like(p);
  for (std::size_t k = 0; k < pos_idx.size(); ++k) {
    total.add_scaled(results[pos_idx[k]].grads, cl.d_pos[k]);
  }
  for (std::size_t k = 0; k < neg_idx.size(); ++k) {
    total.add_scaled(results[neg_idx[k]].grads, cl.d_neg[k]);
  }
  return {cl.value, std::move(total)};
}

/// Loss only, through the plain-value pipeline (the finite-difference target).
inline double batch_loss(const std::vector<GraphPair>& batch, const MatchParams& p) {
  std::vector<double> pos, neg;
  for (const auto& pr : batch) {
    ValueExec ex(p);
    const double s = detail::pair_similarity_expr(ex, pr.a, pr.b, p.rounds);
    (pr.same_group ? pos : neg).push_back(s);
  }
  return circle_loss_with_grads(pos, neg, p.gamma, p.weight_pos, p.weight_neg).value;
}

/// Max relative error between analytic gradients and central finite
/// differences over every parameter entry.
inline double gradient_check(const std::vector<GraphPair>& batch, const MatchParams& params,
                             double eps = 1e-5) {
  auto [loss, grads] = loss_and_grad(batch, params);
  (void)loss;

  double max_err = 0.0;
  MatchParams work = params;

  // Walk parameter and gradient tensors in lockstep through flattened views.
  std::vector<double*> param_data;
  std::vector<const double*> grad_data;
  std::vector<Eigen::Index> sizes;
  for_each_tensor(work, [&](auto& t) {
    param_data.push_back(t.data());
    sizes.push_back(t.size());
  });
  for_each_tensor(grads, [&](auto& t) { grad_data.push_back(t.data()); });

  for (std::size_t k = 0; k < param_data.size(); ++k) {
    for (Eigen::Index i = 0; i < sizes[k]; ++i) {
      const double saved = param_data[k][i];
      const auto central = [&](double step) {
        param_data[k][i] = saved + step;
        const double up = batch_loss(batch, work);
        param_data[k][i] = saved - step;
        const double down = batch_loss(batch, work);
        param_data[k][i] = saved;
        return (up - down) / (2.0 * step);
      };
      const auto rel_err = [](double a, double f) {
        return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6});
      };

      const double an = grad_data[k][i];
      double fd = central(eps);
      if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
      double err = rel_err(an, fd);
      // A coarse step can straddle a ReLU kink, making the difference
      // quotient itself inaccurate. Refining the step separates that from a
      // wrong gradient: a kink artifact vanishes, a real bug persists.
      if (err > 1e-4) {
        err = std::min(err, rel_err(an, central(eps * 0.1)));
        err = std::min(err, rel_err(an, central(eps * 0.01)));
      }
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 300;
  int batch_pairs = 16;
  std::uint64_t seed = 0;
  bool grad_check = false;
  int threads = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  MatchParams params;
  double grad_check_max_rel_error = -1.0;  // -1 when the check was not run
};

namespace detail {

struct PairIndex {
  std::size_t a;
  std::size_t b;
};

/// Positive pairs: same group_id under different cameras, in manifest order.
inline std::vector<PairIndex> positive_pairs(const DatasetManifest& data) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_gid;
  std::vector<std::string> gid_order;
  for (std::size_t i = 0; i < data.groups.size(); ++i) {
    auto& v = by_gid[data.groups[i].group_id];
    if (v.empty()) gid_order.push_back(data.groups[i].group_id);
    v.push_back(i);
  }
  std::vector<PairIndex> out;
  for (const auto& gid : gid_order) {
    const auto& views = by_gid[gid];
    for (std::size_t i = 0; i < views.size(); ++i) {
      for (std::size_t j = i + 1; j < views.size(); ++j) {
        out.push_back(PairIndex{views[i], views[j]});
      }
    }
  }
  return out;
}

}  // namespace detail

/// Plain gradient descent with a fixed learning rate: one parameter update
/// per batch, batches built from shuffled positive pairs plus freshly sampled
/// negatives. Deterministic for a fixed seed regardless of thread count.
inline TrainReport train(const DatasetManifest& data, MatchParams params,
                         const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (cfg.batch_pairs < 2) throw ConfigError("train: batch_pairs must be >= 2");
  params.validate();

  int n_max = 0;
  for (const auto& g : data.groups) n_max = std::max(n_max, static_cast<int>(g.members.size()));
  std::vector<ContextGraph> graphs;
  graphs.reserve(data.groups.size());
  for (const auto& g : data.groups) graphs.push_back(build_graph(g, n_max));

  const auto positives = detail::positive_pairs(data);
  std::unordered_map<std::string, std::vector<std::size_t>> by_gid;
  std::vector<std::string> gids;
  for (std::size_t i = 0; i < data.groups.size(); ++i) {
    auto& v = by_gid[data.groups[i].group_id];
    if (v.empty()) gids.push_back(data.groups[i].group_id);
    v.push_back(i);
  }
  int multi_view = 0;
  for (const auto& gid : gids) {
    if (by_gid[gid].size() >= 2) ++multi_view;
  }
  if (gids.size() < 2 || multi_view < 2) {
    throw DataError("train: need at least 2 group identities with 2 camera views each");
  }

  Rng rng(cfg.seed);
  const int pos_per_batch = std::max(1, cfg.batch_pairs / 2);
  const int neg_per_batch = std::max(1, cfg.batch_pairs - pos_per_batch);

  const auto sample_negative = [&]() -> detail::PairIndex {
    while (true) {
      const std::size_t ga = rng.index(gids.size());
      const std::size_t gb = rng.index(gids.size());
      if (gids[ga] == gids[gb]) continue;
      const auto& va = by_gid[gids[ga]];
      const auto& vb = by_gid[gids[gb]];
      return detail::PairIndex{va[rng.index(va.size())], vb[rng.index(vb.size())]};
    }
  };

  TrainReport report;
  if (cfg.grad_check) {
    std::vector<GraphPair> check;
    check.push_back(GraphPair{graphs[positives[0].a], graphs[positives[0].b], true});
    const auto neg = sample_negative();
    check.push_back(GraphPair{graphs[neg.a], graphs[neg.b], false});
    report.grad_check_max_rel_error = gradient_check(check, params);
  }

  std::vector<std::size_t> order(positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    int batches = 0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::vector<GraphPair> batch;
      const std::size_t take =
          std::min(static_cast<std::size_t>(pos_per_batch), order.size() - cursor);
      for (std::size_t k = 0; k < take; ++k) {
        const auto& pp = positives[order[cursor + k]];
        batch.push_back(GraphPair{graphs[pp.a], graphs[pp.b], true});
      }
      cursor += take;
      for (int k = 0; k < neg_per_batch; ++k) {
        const auto np = sample_negative();
        batch.push_back(GraphPair{graphs[np.a], graphs[np.b], false});
      }

      const auto [loss, grads] = loss_and_grad(batch, params, cfg.threads);
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      apply_gradient_step(params, grads, cfg.learning_rate);
      epoch_total += loss;
      ++batches;
    }
    report.epoch_loss.push_back(epoch_total / batches);
  }
  report.params = std::move(params);
  return report;
}

}  // namespace greid
