#include "greid/matching.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "greid/checkpoint.hpp"
#include "greid/training.hpp"
#include "oracles.hpp"

using namespace greid;

namespace {

/// Graph straight from part features, bypassing descriptor plumbing.
ContextGraph raw_graph(const std::vector<std::vector<Vec>>& node_parts, int n_max = 0) {
  ContextGraph g;
  g.real_count = static_cast<int>(node_parts.size());
  g.n_max = n_max > 0 ? n_max : g.real_count;
  g.part_count = static_cast<int>(node_parts[0].size());
  g.part_dim = static_cast<int>(node_parts[0][0].size());
  for (const auto& parts : node_parts) {
    GraphNode n;
    n.part_features = parts;
    Vec full(g.part_count * g.part_dim);
    for (int q = 0; q < g.part_count; ++q) full.segment(q * g.part_dim, g.part_dim) = parts[q];
    n.person.feature = full;
    g.nodes.push_back(std::move(n));
  }
  detail::pad_and_wire(g);
  return g;
}

std::vector<std::vector<Vec>> random_parts(Rng& rng, int nodes, int parts, int dim) {
  std::vector<std::vector<Vec>> out(static_cast<std::size_t>(nodes));
  for (auto& np : out) {
    for (int q = 0; q < parts; ++q) np.push_back(rng.unit_vec(dim));
  }
  return out;
}

MatchParams random_params(Rng& rng, int part_count, int part_dim, int rounds,
                          int embed_dim = 0) {
  MatchParams p =
      init_match_params(part_count * part_dim, part_count, rounds, rng.next(), embed_dim);
  // Generic position: push every tensor off the structured init skeleton.
  for_each_tensor(p, [&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.3, 0.3);
  });
  return p;
}

Vec softmax_oracle(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

/// Literal re-derivation of the T-round update used as the propagate oracle.
std::pair<std::vector<std::vector<Vec>>, std::vector<std::vector<Vec>>> unrolled_propagate(
    const std::vector<std::vector<Vec>>& s0, const std::vector<std::vector<Vec>>& r0,
    const MatchParams& p) {
  auto s = s0;
  auto r = r0;
  const int ns = static_cast<int>(s.size());
  const int nr = static_cast<int>(r.size());
  const int parts = static_cast<int>(s[0].size());
  for (int t = 0; t < p.rounds; ++t) {
    const Mat& proj = p.projections[static_cast<std::size_t>(t)];
    Mat e(ns, nr);
    for (int i = 0; i < ns; ++i) {
      for (int j = 0; j < nr; ++j) {
        double sum = 0.0;
        for (int q = 0; q < parts; ++q) {
          sum += (proj * s[i][q]).dot(proj * r[j][q]);
        }
        e(i, j) = sum;
      }
    }
    auto next_s = s;
    auto next_r = r;
    for (int j = 0; j < nr; ++j) {
      const Vec attn = softmax_oracle(e.col(j));
      for (int q = 0; q < parts; ++q) {
        Vec msg = Vec::Zero(p.part_dim());
        for (int i = 0; i < ns; ++i) msg += attn(i) * (proj * s[i][q]);
        Vec x(2 * p.part_dim());
        x << r[j][q], msg;
        next_r[j][q] = p.mlp_w2 * (p.mlp_w1 * x + p.mlp_b1).cwiseMax(0.0) + p.mlp_b2;
      }
    }
    for (int i = 0; i < ns; ++i) {
      const Vec attn = softmax_oracle(e.row(i).transpose());
      for (int q = 0; q < parts; ++q) {
        Vec msg = Vec::Zero(p.part_dim());
        for (int j = 0; j < nr; ++j) msg += attn(j) * (proj * r[j][q]);
        Vec x(2 * p.part_dim());
        x << s[i][q], msg;
        next_s[i][q] = p.mlp_w2 * (p.mlp_w1 * x + p.mlp_b1).cwiseMax(0.0) + p.mlp_b2;
      }
    }
    s = next_s;
    r = next_r;
  }
  return {s, r};
}

Vec readout_oracle(const std::vector<std::vector<Vec>>& nodes, const MatchParams& p) {
  const int n = static_cast<int>(nodes.size());
  Vec logits(n);
  Mat mapped(p.embed_dim(), n);
  for (int i = 0; i < n; ++i) {
    Vec h(p.node_dim());
    for (int q = 0; q < p.part_count(); ++q) {
      h.segment(q * p.part_dim(), p.part_dim()) = nodes[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
    }
    mapped.col(i) = p.readout_proj * h;
    logits(i) = mapped(0, i);
  }
  const Vec gamma = softmax_oracle(logits);
  return mapped * gamma;
}

}  // namespace

TEST(ImportanceWeight, Examples) {
  const Mat eye = Mat::Identity(3, 3);
  const Vec u = Vec::Unit(3, 0);
  const Vec v = Vec::Unit(3, 1);
  EXPECT_DOUBLE_EQ(importance_weight(u, u, eye), 1.0);
  EXPECT_DOUBLE_EQ(importance_weight(u, v, eye), 0.0);

  Vec a(2), b(2);
  a << 1, 0;
  b << 0.5, std::sqrt(0.75);  // unit vectors with dot 0.5
  EXPECT_NEAR(importance_weight(a, b, 2.0 * Mat::Identity(2, 2)), 2.0, 1e-12);
  EXPECT_THROW(importance_weight(u, Vec::Ones(4), eye), ConfigError);
}

TEST(AttentionWeights, Examples) {
  const Vec single = attention_weights(Vec::Constant(1, 3.7));
  EXPECT_DOUBLE_EQ(single(0), 1.0);

  const Vec equal = attention_weights(Vec::Constant(4, 0.3));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(equal(i), 0.25);

  Vec logits(2);
  logits << std::log(1.0), std::log(3.0);
  const Vec w = attention_weights(logits);
  EXPECT_NEAR(w(0), 0.25, 1e-15);
  EXPECT_NEAR(w(1), 0.75, 1e-15);

  EXPECT_THROW(attention_weights(Vec()), ConfigError);
}

TEST(AttentionWeights, PositiveAndNormalizedOnRandomLogits) {
  Rng rng(3);
  for (int it = 0; it < 100; ++it) {
    const int n = 1 + static_cast<int>(rng.index(6));
    Vec logits(n);
    for (int i = 0; i < n; ++i) logits(i) = rng.uniform(-30.0, 30.0);
    const Vec w = attention_weights(logits);
    EXPECT_NEAR(w.sum(), 1.0, 1e-9);
    EXPECT_GT(w.minCoeff(), 0.0);
  }
}

TEST(AggregateMessages, Examples) {
  const Mat eye = Mat::Identity(2, 2);
  Rng rng(4);
  const auto one = raw_graph(random_parts(rng, 1, 2, 2));
  const Vec got = aggregate_messages(one, 1, Vec::Constant(1, 1.0), eye);
  EXPECT_TRUE(got == one.node(0).part_features[1]);

  // Opposite part features with equal attention cancel.
  std::vector<std::vector<Vec>> two = random_parts(rng, 2, 2, 2);
  two[1][0] = -two[0][0];
  const auto cancel = raw_graph(two);
  const Vec zero = aggregate_messages(cancel, 0, Vec::Constant(2, 0.5), eye);
  EXPECT_LT(zero.cwiseAbs().maxCoeff(), 1e-15);

  // Weighted sum of basis part features reproduces the weights.
  std::vector<std::vector<Vec>> three(3);
  for (int i = 0; i < 3; ++i) three[static_cast<std::size_t>(i)] = {Vec::Unit(3, i), Vec::Unit(3, i)};
  const auto basis = raw_graph(three);
  Vec attn(3);
  attn << 0.2, 0.3, 0.5;
  const Vec msg = aggregate_messages(basis, 0, attn, Mat::Identity(3, 3));
  EXPECT_NEAR(msg(0), 0.2, 1e-15);
  EXPECT_NEAR(msg(1), 0.3, 1e-15);
  EXPECT_NEAR(msg(2), 0.5, 1e-15);
}

TEST(UpdateNode, ZeroMlpMapsToZero) {
  Rng rng(5);
  MatchParams p = random_params(rng, 2, 3, 1);
  p.mlp_w1.setZero();
  p.mlp_b1.setZero();
  p.mlp_w2.setZero();
  p.mlp_b2.setZero();
  const Vec out = update_node(rng.unit_vec(3), rng.unit_vec(3), p);
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(UpdateNode, MatchesExplicitForward) {
  Rng rng(6);
  const MatchParams p = random_params(rng, 2, 3, 1);
  const Vec h = rng.unit_vec(3);
  const Vec o = rng.unit_vec(3);
  Vec x(6);
  x << h, o;
  const Vec expected = p.mlp_w2 * (p.mlp_w1 * x + p.mlp_b1).cwiseMax(0.0) + p.mlp_b2;
  EXPECT_LT((update_node(h, o, p) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Propagate, ZeroMlpZeroesRealNodes) {
  Rng rng(7);
  MatchParams p = random_params(rng, 2, 2, 1);
  p.mlp_w1.setZero();
  p.mlp_b1.setZero();
  p.mlp_w2.setZero();
  p.mlp_b2.setZero();
  const auto ga = raw_graph(random_parts(rng, 2, 2, 2), 4);
  const auto gb = raw_graph(random_parts(rng, 3, 2, 2), 4);
  const auto [oa, ob] = propagate(ga, gb, p);
  for (int i = 0; i < oa.real_count; ++i) {
    for (const auto& part : oa.node(i).part_features) EXPECT_TRUE(part.isZero(0.0));
  }
  for (int j = 0; j < ob.real_count; ++j) {
    for (const auto& part : ob.node(j).part_features) EXPECT_TRUE(part.isZero(0.0));
  }
}

TEST(Propagate, IdenticalGraphsStayIdentical) {
  Rng rng(8);
  const MatchParams p = random_params(rng, 2, 3, 2);
  const auto g = raw_graph(random_parts(rng, 3, 2, 3), 5);
  const auto [oa, ob] = propagate(g, g, p);
  for (int i = 0; i < g.real_count; ++i) {
    for (int q = 0; q < g.part_count; ++q) {
      EXPECT_LT((oa.node(i).part_features[static_cast<std::size_t>(q)] -
                 ob.node(i).part_features[static_cast<std::size_t>(q)])
                    .cwiseAbs()
                    .maxCoeff(),
                1e-12);
    }
  }
}

TEST(Propagate, MatchesUnrolledOracle) {
  Rng rng(9);
  const MatchParams p = random_params(rng, 2, 2, 2);  // n=2, P=2, D_p=2, T=2
  const auto parts_s = random_parts(rng, 2, 2, 2);
  const auto parts_r = random_parts(rng, 2, 2, 2);
  const auto ga = raw_graph(parts_s, 3);
  const auto gb = raw_graph(parts_r, 3);

  const auto [oa, ob] = propagate(ga, gb, p);
  const auto [es, er] = unrolled_propagate(parts_s, parts_r, p);
  for (int i = 0; i < 2; ++i) {
    for (int q = 0; q < 2; ++q) {
      EXPECT_LT((oa.node(i).part_features[static_cast<std::size_t>(q)] -
                 es[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)])
                    .cwiseAbs()
                    .maxCoeff(),
                1e-12);
      EXPECT_LT((ob.node(i).part_features[static_cast<std::size_t>(q)] -
                 er[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)])
                    .cwiseAbs()
                    .maxCoeff(),
                1e-12);
    }
  }
}

TEST(Propagate, DummiesStayZero) {
  Rng rng(10);
  const MatchParams p = random_params(rng, 2, 2, 2);
  const auto ga = raw_graph(random_parts(rng, 2, 2, 2), 6);
  const auto gb = raw_graph(random_parts(rng, 3, 2, 2), 6);
  const auto [oa, ob] = propagate(ga, gb, p);
  for (int i = oa.real_count; i < oa.n_max; ++i) {
    EXPECT_TRUE(oa.node(i).is_dummy);
    for (const auto& part : oa.node(i).part_features) EXPECT_TRUE(part.isZero(0.0));
  }
  for (int j = ob.real_count; j < ob.n_max; ++j) {
    EXPECT_TRUE(ob.node(j).is_dummy);
  }
}

TEST(Propagate, ConfigMismatchRejected) {
  Rng rng(11);
  const MatchParams p = random_params(rng, 2, 2, 1);
  const auto ga = raw_graph(random_parts(rng, 2, 2, 2));
  const auto gb = raw_graph(random_parts(rng, 2, 2, 3));  // different part_dim
  EXPECT_THROW(propagate(ga, gb, p), ConfigError);
}

TEST(Readout, SingleNodeIsProjectedNode) {
  Rng rng(12);
  const MatchParams p = random_params(rng, 2, 3, 1, 4);
  const auto g = raw_graph(random_parts(rng, 1, 2, 3), 3);
  Vec h(6);
  h << g.node(0).part_features[0], g.node(0).part_features[1];
  const Vec expected = p.readout_proj * h;
  EXPECT_LT((readout(g, p).vector - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Readout, IdenticalNodesPreserveValue) {
  Rng rng(13);
  const MatchParams p = random_params(rng, 2, 3, 1, 5);
  auto parts = random_parts(rng, 1, 2, 3);
  std::vector<std::vector<Vec>> same{parts[0], parts[0], parts[0]};
  const auto g1 = raw_graph({parts[0]});
  const auto g3 = raw_graph(same);
  EXPECT_LT((readout(g1, p).vector - readout(g3, p).vector).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Readout, MatchesOracleOnDistinctNodes) {
  Rng rng(14);
  const MatchParams p = random_params(rng, 3, 2, 1, 7);
  const auto parts = random_parts(rng, 3, 3, 2);
  const auto g = raw_graph(parts, 5);
  const Vec expected = readout_oracle(parts, p);
  EXPECT_LT((readout(g, p).vector - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Readout, NoRealNodesRejected) {
  Rng rng(15);
  const MatchParams p = random_params(rng, 2, 2, 1);
  auto g = raw_graph(random_parts(rng, 1, 2, 2), 2);
  g.real_count = 0;
  EXPECT_THROW(readout(g, p), ConfigError);
}

TEST(GroupSimilarity, CosineExamplesAndZeroRejection) {
  GraphEmbedding a{Vec::Unit(4, 0)}, b{Vec::Unit(4, 1)};
  GraphEmbedding neg{-a.vector};
  EXPECT_DOUBLE_EQ(group_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(group_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(group_similarity(a, neg), -1.0);
  EXPECT_THROW(group_similarity(a, GraphEmbedding{Vec::Zero(4)}), NumericError);
}

TEST(CircleLoss, EmptySumsAndLogTwo) {
  Rng rng(16);
  const MatchParams p = random_params(rng, 2, 2, 1);
  EXPECT_EQ(circle_loss(std::vector<double>{}, std::vector<double>{0.3}, p), 0.0);
  EXPECT_EQ(circle_loss(std::vector<double>{0.5}, std::vector<double>{}, p), 0.0);

  MatchParams unit = p;
  unit.gamma = 1.0;
  unit.weight_pos = 1.0;
  unit.weight_neg = 1.0;
  // gamma*(w_neg*s_neg - w_pos*s_pos) = 0  =>  log(2).
  const double loss = circle_loss(std::vector<double>{0.4}, std::vector<double>{0.4}, unit);
  EXPECT_NEAR(loss, std::log(2.0), 1e-12);
}

TEST(CircleLoss, MatchesBruteForceOracle) {
  Rng rng(17);
  for (int it = 0; it < 200; ++it) {
    const std::size_t k = 1 + rng.index(5);
    const std::size_t l = 1 + rng.index(5);
    std::vector<double> pos(k), neg(l);
    for (auto& v : pos) v = rng.uniform(-1.0, 1.0);
    for (auto& v : neg) v = rng.uniform(-1.0, 1.0);
    const double gamma = rng.uniform(0.5, 8.0);
    const double wp = rng.uniform(0.0, 2.0);
    const double wn = rng.uniform(0.0, 2.0);
    const auto got = circle_loss_with_grads(pos, neg, gamma, wp, wn);
    EXPECT_NEAR(got.value, oracle::circle_loss(pos, neg, gamma, wp, wn), 1e-10);
  }
}

TEST(CircleLoss, MonotoneInSimilarities) {
  Rng rng(18);
  const double gamma = 4.0;
  for (int it = 0; it < 50; ++it) {
    std::vector<double> pos{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> neg{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double base = circle_loss_with_grads(pos, neg, gamma, 1.0, 1.0).value;
    const double eps = 1e-6;
    for (std::size_t i = 0; i < neg.size(); ++i) {
      auto bumped = neg;
      bumped[i] += eps;
      EXPECT_GT(circle_loss_with_grads(pos, bumped, gamma, 1.0, 1.0).value, base);
    }
    for (std::size_t i = 0; i < pos.size(); ++i) {
      auto bumped = pos;
      bumped[i] += eps;
      EXPECT_LT(circle_loss_with_grads(bumped, neg, gamma, 1.0, 1.0).value, base);
    }
  }
}

TEST(CircleLoss, StableForLargeArguments) {
  const std::vector<double> pos{-1.0};
  const std::vector<double> neg{1.0};
  const auto got = circle_loss_with_grads(pos, neg, 256.0, 1.0, 1.0);
  // exp(512) overflows raw doubles; stabilized result is ~512.
  EXPECT_TRUE(std::isfinite(got.value));
  EXPECT_NEAR(got.value, 512.0, 1e-9);
  EXPECT_THROW(circle_loss_with_grads(std::vector<double>{std::nan("")}, neg, 2.0, 1.0, 1.0),
               NumericError);
}

TEST(Matching, PropagateAgreesWithNodeLevelOps) {
  // One round composed from the public node-level operations must agree with
  // the pipeline (same math, different code path).
  Rng rng(19);
  MatchParams p = random_params(rng, 2, 3, 1);
  const auto parts_s = random_parts(rng, 3, 2, 3);
  const auto parts_r = random_parts(rng, 2, 2, 3);
  const auto gs = raw_graph(parts_s);
  const auto gr = raw_graph(parts_r);
  const auto [os, or_] = propagate(gs, gr, p);

  const Mat& proj = p.projections[0];
  Mat e(gs.real_count, gr.real_count);
  for (int i = 0; i < gs.real_count; ++i) {
    for (int j = 0; j < gr.real_count; ++j) {
      double sum = 0.0;
      for (int q = 0; q < 2; ++q) {
        sum += importance_weight(gs.node(i).part_features[static_cast<std::size_t>(q)],
                                 gr.node(j).part_features[static_cast<std::size_t>(q)], proj);
      }
      e(i, j) = sum;
    }
  }
  for (int j = 0; j < gr.real_count; ++j) {
    const Vec attn = attention_weights(e.col(j));
    for (int q = 0; q < 2; ++q) {
      const Vec msg = aggregate_messages(gs, q, attn, proj);
      const Vec updated =
          update_node(gr.node(j).part_features[static_cast<std::size_t>(q)], msg, p);
      EXPECT_LT(
          (or_.node(j).part_features[static_cast<std::size_t>(q)] - updated).cwiseAbs().maxCoeff(),
          1e-12);
    }
  }
}

TEST(Matching, PermutationEquivariance) {
  Rng rng(20);
  const MatchParams p = random_params(rng, 2, 3, 2);
  const auto parts_s = random_parts(rng, 4, 2, 3);
  const auto parts_r = random_parts(rng, 3, 2, 3);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<std::vector<Vec>> permuted;
  for (std::size_t k : perm) permuted.push_back(parts_s[k]);

  const auto base = propagate(raw_graph(parts_s), raw_graph(parts_r), p);
  const auto shuf = propagate(raw_graph(permuted), raw_graph(parts_r), p);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    for (int q = 0; q < 2; ++q) {
      EXPECT_LT((shuf.first.node(static_cast<int>(k)).part_features[static_cast<std::size_t>(q)] -
                 base.first.node(static_cast<int>(perm[k])).part_features[static_cast<std::size_t>(q)])
                    .cwiseAbs()
                    .maxCoeff(),
                1e-12);
    }
  }

  const double sim_base =
      match_similarity(raw_graph(parts_s), raw_graph(parts_r), p);
  const double sim_shuf =
      match_similarity(raw_graph(permuted), raw_graph(parts_r), p);
  EXPECT_NEAR(sim_base, sim_shuf, 1e-12);
}

TEST(Matching, DummyPaddingInvariance) {
  Rng rng(21);
  const MatchParams p = random_params(rng, 2, 3, 2);
  for (int it = 0; it < 20; ++it) {
    const auto parts_s = random_parts(rng, 2 + static_cast<int>(rng.index(3)), 2, 3);
    const auto parts_r = random_parts(rng, 2 + static_cast<int>(rng.index(3)), 2, 3);
    const double tight = match_similarity(raw_graph(parts_s), raw_graph(parts_r), p);
    const double padded = match_similarity(raw_graph(parts_s, 9), raw_graph(parts_r, 7), p);
    EXPECT_NEAR(tight, padded, 1e-12);
  }
}

TEST(Matching, ValueAndTapeForwardsAgree) {
  Rng rng(22);
  for (int it = 0; it < 10; ++it) {
    const MatchParams p = random_params(rng, 2, 3, 2);
    const auto ga = raw_graph(random_parts(rng, 2 + static_cast<int>(rng.index(2)), 2, 3));
    const auto gb = raw_graph(random_parts(rng, 2 + static_cast<int>(rng.index(2)), 2, 3));
    const double value = match_similarity(ga, gb, p);
    const double taped = pair_similarity_gradient(ga, gb, p).similarity;
    EXPECT_NEAR(value, taped, 1e-12);
  }
}

TEST(Matching, PropagateThenReadoutEqualsMatchSimilarity) {
  Rng rng(23);
  const MatchParams p = random_params(rng, 2, 3, 2);
  const auto ga = raw_graph(random_parts(rng, 3, 2, 3));
  const auto gb = raw_graph(random_parts(rng, 2, 2, 3));
  const auto [oa, ob] = propagate(ga, gb, p);
  const double composed = group_similarity(readout(oa, p), readout(ob, p));
  EXPECT_NEAR(composed, match_similarity(ga, gb, p), 1e-12);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(24);
  const MatchParams p = init_match_params(12, 4, 3, 77, 9, 17.5, 0.75, 1.25);
  std::ostringstream out;
  save_checkpoint(p, out);
  std::istringstream in(out.str());
  const MatchParams q = load_checkpoint(in);

  ASSERT_EQ(q.rounds, p.rounds);
  EXPECT_EQ(q.gamma, p.gamma);
  EXPECT_EQ(q.weight_pos, p.weight_pos);
  EXPECT_EQ(q.weight_neg, p.weight_neg);
  for (int t = 0; t < p.rounds; ++t) {
    EXPECT_TRUE(q.projections[static_cast<std::size_t>(t)] ==
                p.projections[static_cast<std::size_t>(t)]);
  }
  EXPECT_TRUE(q.mlp_w1 == p.mlp_w1);
  EXPECT_TRUE(q.mlp_b1 == p.mlp_b1);
  EXPECT_TRUE(q.mlp_w2 == p.mlp_w2);
  EXPECT_TRUE(q.mlp_b2 == p.mlp_b2);
  EXPECT_TRUE(q.readout_proj == p.readout_proj);
}

TEST(Checkpoint, RejectsGarbage) {
  std::istringstream in("definitely not a checkpoint");
  EXPECT_THROW(load_checkpoint(in), DataError);
}

TEST(MatchParams, ValidateCatchesBadShapes) {
  Rng rng(25);
  MatchParams p = random_params(rng, 2, 3, 2);
  p.projections[1] = Mat::Identity(4, 4);
  EXPECT_THROW(p.validate(), ConfigError);

  MatchParams q = random_params(rng, 2, 3, 2);
  q.gamma = 0.0;
  EXPECT_THROW(q.validate(), ConfigError);

  MatchParams r = random_params(rng, 2, 3, 2);
  r.mlp_w1(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(r.validate(), NumericError);
}
