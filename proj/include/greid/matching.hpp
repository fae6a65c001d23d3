#pragma once

#include "greid/autodiff.hpp"
#include "greid/graph.hpp"

#include <span>

namespace greid {

/// Learnable state of the group matching head: per-round projection matrices
/// for the cross-graph attention, the node-update MLP, the readout projection
/// (its first row doubles as the readout attention logit), and the circle
/// loss shape parameters.
struct MatchParams {
  std::vector<Mat> projections;  // rounds matrices, each part_dim x part_dim
  Mat mlp_w1;                    // hidden x (2 * part_dim), hidden = 2 * part_dim
  Vec mlp_b1;
  Mat mlp_w2;                    // part_dim x hidden
  Vec mlp_b2;
  Mat readout_proj;              // embed_dim x (part_count * part_dim)
  double gamma = 32.0;
  double weight_pos = 1.0;  // scales positive-pair similarities in the loss
  double weight_neg = 1.0;  // scales negative-pair similarities in the loss
  int rounds = 2;

  int part_dim() const { return projections.empty() ? 0 : static_cast<int>(projections[0].rows()); }
  int node_dim() const { return static_cast<int>(readout_proj.cols()); }
  int part_count() const { return part_dim() > 0 ? node_dim() / part_dim() : 0; }
  int embed_dim() const { return static_cast<int>(readout_proj.rows()); }

  void validate() const {
    if (rounds < 1) throw ConfigError("match params: rounds must be positive");
    if (static_cast<int>(projections.size()) != rounds) {
      throw ConfigError("match params: need one projection matrix per round");
    }
    const int dp = part_dim();
    if (dp <= 0) throw ConfigError("match params: empty projection");
    for (const auto& m : projections) {
      if (m.rows() != dp || m.cols() != dp) {
        throw ConfigError("match params: projection matrices must all be part_dim x part_dim");
      }
      if (!m.allFinite()) throw NumericError("match params: non-finite projection");
    }
    const int hidden = 2 * dp;
    if (mlp_w1.rows() != hidden || mlp_w1.cols() != 2 * dp || mlp_b1.size() != hidden ||
        mlp_w2.rows() != dp || mlp_w2.cols() != hidden || mlp_b2.size() != dp) {
      throw ConfigError("match params: MLP shapes inconsistent with part_dim");
    }
    if (node_dim() % dp != 0) {
      throw ConfigError("match params: readout width must be a multiple of part_dim");
    }
    if (!mlp_w1.allFinite() || !mlp_b1.allFinite() || !mlp_w2.allFinite() ||
        !mlp_b2.allFinite() || !readout_proj.allFinite()) {
      throw NumericError("match params: non-finite weights");
    }
    if (!(gamma > 0.0)) throw ConfigError("match params: gamma must be positive");
    if (weight_pos < 0.0 || weight_neg < 0.0) {
      throw ConfigError("match params: loss weights must be non-negative");
    }
  }
};

namespace detail {

inline Mat uniform_matrix(Rng& rng, int rows, int cols, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace detail

/// Structured init. The head starts as a neutral skeleton: the update MLP is
/// the exact identity on the previous feature (relu(h) - relu(-h) = h), the
/// readout projection is the identity with its logit row zeroed (uniform
/// readout weights), and the attention projections are a scaled identity so
/// cross-graph attention is feature-similarity driven from the first step.
/// Untrained, the head therefore scores pairs like the mean-feature cosine
/// baseline; gradient descent improves from there. `jitter` superimposes
/// seeded uniform noise of magnitude jitter/sqrt(fan_in) on every tensor.
inline MatchParams init_match_params(int feature_dim, int part_count, int rounds,
                                     std::uint64_t seed, int embed_dim = 0,
                                     double gamma = 32.0, double weight_pos = 1.0,
                                     double weight_neg = 1.0, double attention_scale = 4.0,
                                     double jitter = 0.0) {
  if (part_count <= 0 || feature_dim <= 0 || rounds < 1) {
    throw ConfigError("init_match_params: dimensions must be positive");
  }
  if (feature_dim % part_count != 0) {
    throw ConfigError("init_match_params: part count must divide feature dimension");
  }
  const int dp = feature_dim / part_count;
  const int hidden = 2 * dp;
  if (embed_dim <= 0) embed_dim = feature_dim;

  Rng rng(seed);
  const auto noise = [&](int rows, int cols, int fan_in) {
    if (jitter == 0.0) return Mat::Zero(rows, cols).eval();
    return (jitter * detail::uniform_matrix(rng, rows, cols, fan_in)).eval();
  };
  const Mat eye = Mat::Identity(dp, dp);

  MatchParams p;
  p.rounds = rounds;
  for (int t = 0; t < rounds; ++t) {
    p.projections.push_back(attention_scale * eye + noise(dp, dp, dp));
  }
  Mat w1(hidden, 2 * dp);
  w1 << eye, Mat::Zero(dp, dp), -eye, Mat::Zero(dp, dp);
  p.mlp_w1 = w1 + noise(hidden, 2 * dp, 2 * dp);
  p.mlp_b1 = noise(hidden, 1, 2 * dp).col(0);
  Mat w2(dp, hidden);
  w2 << eye, -eye;
  p.mlp_w2 = w2 + noise(dp, hidden, hidden);
  p.mlp_b2 = noise(dp, 1, hidden).col(0);
  p.readout_proj =
      Mat::Identity(embed_dim, feature_dim) + noise(embed_dim, feature_dim, feature_dim);
  if (embed_dim >= 2) p.readout_proj.row(0).setZero();
  p.gamma = gamma;
  p.weight_pos = weight_pos;
  p.weight_neg = weight_neg;
  p.validate();
  return p;
}

/// Gradients for every MatchParams tensor, in the same shapes.
struct MatchGrads {
  std::vector<Mat> projections;
  Mat mlp_w1;
  Vec mlp_b1;
  Mat mlp_w2;
  Vec mlp_b2;
  Mat readout_proj;

  static MatchGrads zeros_like(const MatchParams& p) {
    MatchGrads g;
    for (const auto& m : p.projections) g.projections.push_back(Mat::Zero(m.rows(), m.cols()));
    g.mlp_w1 = Mat::Zero(p.mlp_w1.rows(), p.mlp_w1.cols());
    g.mlp_b1 = Vec::Zero(p.mlp_b1.size());
    g.mlp_w2 = Mat::Zero(p.mlp_w2.rows(), p.mlp_w2.cols());
    g.mlp_b2 = Vec::Zero(p.mlp_b2.size());
    g.readout_proj = Mat::Zero(p.readout_proj.rows(), p.readout_proj.cols());
    return g;
  }

  void add_scaled(const MatchGrads& o, double c) {
    for (std::size_t t = 0; t < projections.size(); ++t) projections[t] += c * o.projections[t];
    mlp_w1 += c * o.mlp_w1;
    mlp_b1 += c * o.mlp_b1;
    mlp_w2 += c * o.mlp_w2;
    mlp_b2 += c * o.mlp_b2;
    readout_proj += c * o.readout_proj;
  }
};

/// Visits every parameter/gradient tensor in a fixed order shared by
/// MatchParams and MatchGrads (used by the update step and finite
/// differences).
template <class Params, class F>
void for_each_tensor(Params& p, F&& f) {
  for (auto& m : p.projections) f(m);
  f(p.mlp_w1);
  f(p.mlp_b1);
  f(p.mlp_w2);
  f(p.mlp_b2);
  f(p.readout_proj);
}

inline void apply_gradient_step(MatchParams& p, const MatchGrads& g, double learning_rate) {
  for (std::size_t t = 0; t < p.projections.size(); ++t) {
    p.projections[t] -= learning_rate * g.projections[t];
  }
  p.mlp_w1 -= learning_rate * g.mlp_w1;
  p.mlp_b1 -= learning_rate * g.mlp_b1;
  p.mlp_w2 -= learning_rate * g.mlp_w2;
  p.mlp_b2 -= learning_rate * g.mlp_b2;
  p.readout_proj -= learning_rate * g.readout_proj;
}

// ---------------------------------------------------------------------------
// Node-level operations
// ---------------------------------------------------------------------------

/// Importance weight between two equally sized feature vectors under a shared
/// projection: <proj a, proj b>.
inline double importance_weight(const Vec& a, const Vec& b, const Mat& proj) {
  if (proj.cols() != a.size() || proj.cols() != b.size()) {
    throw ConfigError("importance_weight: projection does not match feature dimensions");
  }
  return (proj * a).dot(proj * b);
}

/// Softmax over importance weights of the opposing graph's real nodes.
/// Dummy nodes must already be excluded from the logits.
inline Vec attention_weights(const Vec& logits) {
  if (logits.size() == 0) throw ConfigError("attention_weights: no real nodes to attend to");
  double m = logits(0);
  for (Eigen::Index i = 1; i < logits.size(); ++i) m = std::max(m, logits(i));
  Vec out(logits.size());
  double denom = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out(i) = std::exp(logits(i) - m);
    denom += out(i);
  }
  return out / denom;
}

/// Inter-graph message for one target node and one part index: the
/// attention-weighted sum of the source graph's projected part features.
/// All parts of a target node share the same attention weights.
inline Vec aggregate_messages(const ContextGraph& source, int part, const Vec& attn,
                              const Mat& proj) {
  if (attn.size() != source.real_count) {
    throw ConfigError("aggregate_messages: attention size does not match source real nodes");
  }
  if (part < 0 || part >= source.part_count) {
    throw ConfigError("aggregate_messages: part index out of range");
  }
  Vec out = Vec::Zero(proj.rows());
  for (int i = 0; i < source.real_count; ++i) {
    out += attn(i) * (proj * source.node(i).part_features[static_cast<std::size_t>(part)]);
  }
  return out;
}

/// Node update: h' = MLP(concat(h, o)) with one ReLU hidden layer.
inline Vec update_node(const Vec& h_prev, const Vec& message, const MatchParams& p) {
  if (h_prev.size() != p.part_dim() || message.size() != p.part_dim()) {
    throw ConfigError("update_node: feature dimensions do not match params");
  }
  Vec x(2 * p.part_dim());
  x << h_prev, message;
  const Vec hidden = (p.mlp_w1 * x + p.mlp_b1).cwiseMax(0.0);
  return p.mlp_w2 * hidden + p.mlp_b2;
}

// ---------------------------------------------------------------------------
// Backend-generic forward pipeline
// ---------------------------------------------------------------------------

/// Plain-value execution backend: fast forward for matching and evaluation.
struct ValueExec {
  using V = Vec;
  using S = double;

  const MatchParams& p;
  explicit ValueExec(const MatchParams& params) : p(params) {}

  V constant(const Vec& v) const { return v; }
  V project(int round, const V& v) const { return p.projections[static_cast<std::size_t>(round)] * v; }
  V mlp(const V& x) const {
    return p.mlp_w2 * (p.mlp_w1 * x + p.mlp_b1).cwiseMax(0.0) + p.mlp_b2;
  }
  V readout_map(const V& h) const { return p.readout_proj * h; }
  V concat(const V& a, const V& b) const {
    V r(a.size() + b.size());
    r << a, b;
    return r;
  }
  V add_vec(const V& a, const V& b) const { return a + b; }
  S dot(const V& a, const V& b) const { return a.dot(b); }
  S elem0(const V& v) const { return v(0); }
  S add(S a, S b) const { return a + b; }
  S sub(S a, S b) const { return a - b; }
  S mul(S a, S b) const { return a * b; }
  S div(S a, S b) const { return a / b; }
  S sqrt(S a) const { return std::sqrt(a); }
  S exp(S a) const { return std::exp(a); }
  S max(S a, S b) const { return a >= b ? a : b; }
  V scale(const V& v, S s) const { return v * s; }
  double value(S s) const { return s; }
};

/// Tape-backed execution: identical pipeline, recorded for reverse mode.
struct TapeExec {
  using V = int;
  using S = int;

  Tape& tape;
  std::vector<int> proj_ids;
  int w1, b1, w2, b2, wu;

  TapeExec(Tape& t, const MatchParams& p) : tape(t) {
    for (const auto& m : p.projections) proj_ids.push_back(tape.leaf(m));
    w1 = tape.leaf(p.mlp_w1);
    b1 = tape.leaf(p.mlp_b1);
    w2 = tape.leaf(p.mlp_w2);
    b2 = tape.leaf(p.mlp_b2);
    wu = tape.leaf(p.readout_proj);
  }

  V constant(const Vec& v) { return tape.leaf(v); }
  V project(int round, V v) { return tape.matvec(proj_ids[static_cast<std::size_t>(round)], v); }
  V mlp(V x) {
    const int hidden = tape.relu_v(tape.add_v(tape.matvec(w1, x), b1));
    return tape.add_v(tape.matvec(w2, hidden), b2);
  }
  V readout_map(V h) { return tape.matvec(wu, h); }
  V concat(V a, V b) { return tape.concat2(a, b); }
  V add_vec(V a, V b) { return tape.add_v(a, b); }
  S dot(V a, V b) { return tape.dot(a, b); }
  S elem0(V v) { return tape.elem0(v); }
  S add(S a, S b) { return tape.add_s(a, b); }
  S sub(S a, S b) { return tape.sub_s(a, b); }
  S mul(S a, S b) { return tape.mul_s(a, b); }
  S div(S a, S b) { return tape.div_s(a, b); }
  S sqrt(S a) { return tape.sqrt_s(a); }
  S exp(S a) { return tape.exp_s(a); }
  S max(S a, S b) { return tape.max_s(a, b); }
  V scale(V v, S s) { return tape.scale_v(v, s); }
  double value(S s) const { return tape.scalar_value(s); }

  /// Leaf adjoints after Tape::backward, in MatchParams order.
  MatchGrads grads(const MatchParams& p) const {
    MatchGrads g = MatchGrads::zeros_like(p);
    const auto take = [&](int id, auto& dst) {
      const Mat& adj = tape.adjoint(id);
      if (adj.size() != 0) dst = adj;
    };
    for (std::size_t t = 0; t < proj_ids.size(); ++t) take(proj_ids[t], g.projections[t]);
    take(w1, g.mlp_w1);
    if (tape.adjoint(b1).size() != 0) g.mlp_b1 = tape.adjoint(b1).col(0);
    take(w2, g.mlp_w2);
    if (tape.adjoint(b2).size() != 0) g.mlp_b2 = tape.adjoint(b2).col(0);
    take(wu, g.readout_proj);
    return g;
  }
};

namespace detail {

template <class E>
using NodeState = std::vector<std::vector<typename E::V>>;  // [node][part]

template <class E>
NodeState<E> lift_real_nodes(E& ex, const ContextGraph& g) {
  NodeState<E> st(static_cast<std::size_t>(g.real_count));
  for (int i = 0; i < g.real_count; ++i) {
    for (int q = 0; q < g.part_count; ++q) {
      st[static_cast<std::size_t>(i)].push_back(
          ex.constant(g.node(i).part_features[static_cast<std::size_t>(q)]));
    }
  }
  return st;
}

template <class E>
std::vector<typename E::S> softmax_scalars(E& ex, const std::vector<typename E::S>& logits) {
  typename E::S m = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) m = ex.max(m, logits[i]);
  std::vector<typename E::S> terms;
  terms.reserve(logits.size());
  typename E::S denom{};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    terms.push_back(ex.exp(ex.sub(logits[i], m)));
    denom = i == 0 ? terms[0] : ex.add(denom, terms[i]);
  }
  std::vector<typename E::S> out;
  out.reserve(logits.size());
  for (const auto& t : terms) out.push_back(ex.div(t, denom));
  return out;
}

template <class E>
typename E::V weighted_sum(E& ex, const std::vector<typename E::S>& w,
                           const std::vector<typename E::V>& vs) {
  typename E::V acc = ex.scale(vs[0], w[0]);
  for (std::size_t i = 1; i < vs.size(); ++i) {
    acc = ex.add_vec(acc, ex.scale(vs[i], w[i]));
  }
  return acc;
}

/// T rounds of synchronous cross-graph message passing over real nodes.
/// Per-pair importance sums the per-part importances (equivalently the inner
/// product of blockwise-projected node vectors); all parts of a node share
/// one attention weight.
template <class E>
void propagate_states(E& ex, NodeState<E>& gs, NodeState<E>& gr, int rounds) {
  const std::size_t ns = gs.size();
  const std::size_t nr = gr.size();
  const std::size_t parts = gs[0].size();
  using S = typename E::S;
  using V = typename E::V;

  for (int round = 0; round < rounds; ++round) {
    std::vector<std::vector<V>> ps(ns), pr(nr);
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t q = 0; q < parts; ++q) ps[i].push_back(ex.project(round, gs[i][q]));
    }
    for (std::size_t j = 0; j < nr; ++j) {
      for (std::size_t q = 0; q < parts; ++q) pr[j].push_back(ex.project(round, gr[j][q]));
    }

    std::vector<std::vector<S>> imp(ns, std::vector<S>(nr));
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = 0; j < nr; ++j) {
        S e = ex.dot(ps[i][0], pr[j][0]);
        for (std::size_t q = 1; q < parts; ++q) e = ex.add(e, ex.dot(ps[i][q], pr[j][q]));
        imp[i][j] = e;
      }
    }

    // Messages into each r-node j: attention over source nodes i.
    std::vector<std::vector<V>> msg_r(nr);
    for (std::size_t j = 0; j < nr; ++j) {
      std::vector<S> col(ns);
      for (std::size_t i = 0; i < ns; ++i) col[i] = imp[i][j];
      const auto attn = softmax_scalars(ex, col);
      for (std::size_t q = 0; q < parts; ++q) {
        std::vector<V> sources;
        sources.reserve(ns);
        for (std::size_t i = 0; i < ns; ++i) sources.push_back(ps[i][q]);
        msg_r[j].push_back(weighted_sum(ex, attn, sources));
      }
    }
    // Messages into each s-node i: attention over r nodes j.
    std::vector<std::vector<V>> msg_s(ns);
    for (std::size_t i = 0; i < ns; ++i) {
      const auto attn = softmax_scalars(ex, imp[i]);
      for (std::size_t q = 0; q < parts; ++q) {
        std::vector<V> sources;
        sources.reserve(nr);
        for (std::size_t j = 0; j < nr; ++j) sources.push_back(pr[j][q]);
        msg_s[i].push_back(weighted_sum(ex, attn, sources));
      }
    }

    // Synchronous commit: all updates read pre-round features.
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t q = 0; q < parts; ++q) {
        gs[i][q] = ex.mlp(ex.concat(gs[i][q], msg_s[i][q]));
      }
    }
    for (std::size_t j = 0; j < nr; ++j) {
      for (std::size_t q = 0; q < parts; ++q) {
        gr[j][q] = ex.mlp(ex.concat(gr[j][q], msg_r[j][q]));
      }
    }
  }
}

/// Self-attention readout: logit of node i is the first component of
/// W_u h_i; the graph embedding is the softmax-weighted sum of the W_u h_i.
template <class E>
typename E::V readout_state(E& ex, const NodeState<E>& g) {
  using V = typename E::V;
  using S = typename E::S;
  std::vector<V> mapped;
  std::vector<S> logits;
  mapped.reserve(g.size());
  logits.reserve(g.size());
  for (const auto& parts : g) {
    V h = parts[0];
    for (std::size_t q = 1; q < parts.size(); ++q) h = ex.concat(h, parts[q]);
    V u = ex.readout_map(h);
    mapped.push_back(u);
    logits.push_back(ex.elem0(u));
  }
  const auto gamma = softmax_scalars(ex, logits);
  return weighted_sum(ex, gamma, mapped);
}

template <class E>
typename E::S cosine_expr(E& ex, const typename E::V& a, const typename E::V& b) {
  const auto d = ex.dot(a, b);
  const auto na = ex.sqrt(ex.dot(a, a));
  const auto nb = ex.sqrt(ex.dot(b, b));
  return ex.div(d, ex.mul(na, nb));
}

/// Full matching forward: propagate both graphs, read out, cosine.
template <class E>
typename E::S pair_similarity_expr(E& ex, const ContextGraph& gs, const ContextGraph& gr,
                                   int rounds) {
  auto ss = lift_real_nodes(ex, gs);
  auto sr = lift_real_nodes(ex, gr);
  propagate_states(ex, ss, sr, rounds);
  return cosine_expr(ex, readout_state(ex, ss), readout_state(ex, sr));
}

inline void check_pair_config(const ContextGraph& a, const ContextGraph& b,
                              const MatchParams& p) {
  if (a.real_count < 1 || b.real_count < 1) {
    throw ConfigError("matching: both graphs need at least one real node");
  }
  if (a.part_count != b.part_count || a.part_dim != b.part_dim) {
    throw ConfigError("matching: graphs built with different part configs");
  }
  if (a.part_count != p.part_count() || a.part_dim != p.part_dim()) {
    throw ConfigError("matching: graph part config does not match params");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public matching operations
// ---------------------------------------------------------------------------

/// Runs T rounds of cross-graph message passing and returns the two updated
/// graphs. Dummy nodes keep their zero features.
inline std::pair<ContextGraph, ContextGraph> propagate(const ContextGraph& gs,
                                                       const ContextGraph& gr,
                                                       const MatchParams& p) {
  p.validate();
  detail::check_pair_config(gs, gr, p);
  ValueExec ex(p);
  auto ss = detail::lift_real_nodes(ex, gs);
  auto sr = detail::lift_real_nodes(ex, gr);
  detail::propagate_states(ex, ss, sr, p.rounds);

  std::pair<ContextGraph, ContextGraph> out{gs, gr};
  for (int i = 0; i < gs.real_count; ++i) {
    out.first.nodes[static_cast<std::size_t>(i)].part_features =
        ss[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < gr.real_count; ++j) {
    out.second.nodes[static_cast<std::size_t>(j)].part_features =
        sr[static_cast<std::size_t>(j)];
  }
  return out;
}

struct GraphEmbedding {
  Vec vector;
};

/// Readout of the graph's current part features (no propagation).
inline GraphEmbedding readout(const ContextGraph& g, const MatchParams& p) {
  p.validate();
  if (g.real_count < 1) throw ConfigError("readout: graph has no real nodes");
  if (g.part_count != p.part_count() || g.part_dim != p.part_dim()) {
    throw ConfigError("readout: graph part config does not match params");
  }
  ValueExec ex(p);
  const auto st = detail::lift_real_nodes(ex, g);
  return GraphEmbedding{detail::readout_state(ex, st)};
}

inline double group_similarity(const GraphEmbedding& a, const GraphEmbedding& b) {
  if (a.vector.size() != b.vector.size()) {
    throw ConfigError("group_similarity: embedding dimensions differ");
  }
  const double na = a.vector.norm();
  const double nb = b.vector.norm();
  if (na < 1e-300 || nb < 1e-300) {
    throw NumericError("group_similarity: zero embedding vector");
  }
  return a.vector.dot(b.vector) / (na * nb);
}

/// propagate + readout + cosine in one pass.
inline double match_similarity(const ContextGraph& gs, const ContextGraph& gr,
                               const MatchParams& p) {
  p.validate();
  detail::check_pair_config(gs, gr, p);
  ValueExec ex(p);
  return detail::pair_similarity_expr(ex, gs, gr, p.rounds);
}

// ---------------------------------------------------------------------------
// Circle loss
// ---------------------------------------------------------------------------

struct CircleLossGrads {
  double value = 0.0;
  std::vector<double> d_pos;
  std::vector<double> d_neg;
};

/// log(1 + sum_n sum_p exp(gamma * (w_neg * s_neg - w_pos * s_pos))) with
/// log-sum-exp stabilization, plus the similarity gradients. Either list may
/// be empty, in which case the loss is exactly 0.
inline CircleLossGrads circle_loss_with_grads(std::span<const double> pos,
                                              std::span<const double> neg, double gamma,
                                              double weight_pos, double weight_neg) {
  CircleLossGrads out;
  out.d_pos.assign(pos.size(), 0.0);
  out.d_neg.assign(neg.size(), 0.0);
  if (pos.empty() || neg.empty()) return out;

  for (double s : pos) {
    if (!std::isfinite(s)) throw NumericError("circle_loss: non-finite positive similarity");
  }
  for (double s : neg) {
    if (!std::isfinite(s)) throw NumericError("circle_loss: non-finite negative similarity");
  }

  double m = 0.0;
  for (double sn : neg) {
    for (double sp : pos) {
      m = std::max(m, gamma * (weight_neg * sn - weight_pos * sp));
    }
  }
  double sum_shift = 0.0;
  for (std::size_t n = 0; n < neg.size(); ++n) {
    for (std::size_t p = 0; p < pos.size(); ++p) {
      sum_shift += std::exp(gamma * (weight_neg * neg[n] - weight_pos * pos[p]) - m);
    }
  }
  const double denom = std::exp(-m) + sum_shift;
  out.value = m == 0.0 ? std::log1p(sum_shift) : m + std::log(denom);

  for (std::size_t n = 0; n < neg.size(); ++n) {
    for (std::size_t p = 0; p < pos.size(); ++p) {
      const double w =
          std::exp(gamma * (weight_neg * neg[n] - weight_pos * pos[p]) - m) / denom;
      out.d_neg[n] += gamma * weight_neg * w;
      out.d_pos[p] -= gamma * weight_pos * w;
    }
  }
  return out;
}

inline double circle_loss(std::span<const double> pos, std::span<const double> neg,
                          const MatchParams& p) {
  return circle_loss_with_grads(pos, neg, p.gamma, p.weight_pos, p.weight_neg).value;
}

}  // namespace greid
