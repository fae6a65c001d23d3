#pragma once

#include "greid/common.hpp"

namespace greid {

/// Reverse-mode tape over small dense values. Vectors are stored as n x 1
/// matrices and scalars as 1 x 1, so every node carries one MatrixXd value.
/// Forward values are computed eagerly as nodes are pushed; backward() then
/// accumulates adjoints in reverse node order.
class Tape {
 public:
  enum class Op : std::uint8_t {
    leaf,      // parameter or constant
    matvec,    // a * b, a matrix node, b vector node
    add_v,     // a + b (vectors)
    relu_v,    // max(a, 0) elementwise
    concat2,   // [a; b]
    scale_v,   // a * s, a vector node, b scalar node
    dot,       // a . b
    elem0,     // a(0)
    add_s,
    sub_s,
    mul_s,
    div_s,
    sqrt_s,
    exp_s,
    max_s,     // ties go to the first argument
  };

  int leaf(const Mat& value) { return push(Op::leaf, -1, -1, value); }
  int leaf(const Vec& value) { return push(Op::leaf, -1, -1, value); }
  int constant_scalar(double c) { return push(Op::leaf, -1, -1, scalar(c)); }

  int matvec(int m, int v) { return push(Op::matvec, m, v, val(m) * val(v)); }
  int add_v(int a, int b) { return push(Op::add_v, a, b, val(a) + val(b)); }
  int relu_v(int a) { return push(Op::relu_v, a, -1, val(a).cwiseMax(0.0)); }
  int concat2(int a, int b) {
    Mat out(val(a).rows() + val(b).rows(), 1);
    out << val(a), val(b);
    return push(Op::concat2, a, b, out);
  }
  int scale_v(int v, int s) { return push(Op::scale_v, v, s, val(v) * sval(s)); }
  int dot(int a, int b) { return push(Op::dot, a, b, scalar(val(a).col(0).dot(val(b).col(0)))); }
  int elem0(int a) { return push(Op::elem0, a, -1, scalar(val(a)(0, 0))); }
  int add_s(int a, int b) { return push(Op::add_s, a, b, scalar(sval(a) + sval(b))); }
  int sub_s(int a, int b) { return push(Op::sub_s, a, b, scalar(sval(a) - sval(b))); }
  int mul_s(int a, int b) { return push(Op::mul_s, a, b, scalar(sval(a) * sval(b))); }
  int div_s(int a, int b) { return push(Op::div_s, a, b, scalar(sval(a) / sval(b))); }
  int sqrt_s(int a) { return push(Op::sqrt_s, a, -1, scalar(std::sqrt(sval(a)))); }
  int exp_s(int a) { return push(Op::exp_s, a, -1, scalar(std::exp(sval(a)))); }
  int max_s(int a, int b) {
    return push(Op::max_s, a, b, scalar(sval(a) >= sval(b) ? sval(a) : sval(b)));
  }

  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  double scalar_value(int id) const { return sval(id); }

  /// Adjoint of a node after backward(); zero-sized if never touched.
  const Mat& adjoint(int id) const { return nodes_[static_cast<std::size_t>(id)].adjoint; }

  /// Seeds d(root)/d(root) = seed and propagates adjoints to every input.
  /// The root must be a scalar node.
  void backward(int root, double seed = 1.0) {
    for (auto& n : nodes_) n.adjoint.resize(0, 0);
    acc(root, scalar(seed));
    for (int id = root; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.adjoint.size() == 0) continue;
      const Mat& g = n.adjoint;
      switch (n.op) {
        case Op::leaf:
          break;
        case Op::matvec:
          acc(n.a, g * val(n.b).transpose());
          acc(n.b, val(n.a).transpose() * g);
          break;
        case Op::add_v:
          acc(n.a, g);
          acc(n.b, g);
          break;
        case Op::relu_v:
          acc(n.a, (val(n.a).array() > 0.0).select(g.array(), 0.0).matrix());
          break;
        case Op::concat2:
          acc(n.a, g.topRows(val(n.a).rows()));
          acc(n.b, g.bottomRows(val(n.b).rows()));
          break;
        case Op::scale_v:
          acc(n.a, g * sval(n.b));
          acc(n.b, scalar(val(n.a).col(0).dot(g.col(0))));
          break;
        case Op::dot:
          acc(n.a, val(n.b) * g(0, 0));
          acc(n.b, val(n.a) * g(0, 0));
          break;
        case Op::elem0: {
          Mat d = Mat::Zero(val(n.a).rows(), 1);
          d(0, 0) = g(0, 0);
          acc(n.a, d);
          break;
        }
        case Op::add_s:
          acc(n.a, g);
          acc(n.b, g);
          break;
        case Op::sub_s:
          acc(n.a, g);
          acc(n.b, -g);
          break;
        case Op::mul_s:
          acc(n.a, scalar(g(0, 0) * sval(n.b)));
          acc(n.b, scalar(g(0, 0) * sval(n.a)));
          break;
        case Op::div_s:
          acc(n.a, scalar(g(0, 0) / sval(n.b)));
          acc(n.b, scalar(-g(0, 0) * sval(n.a) / (sval(n.b) * sval(n.b))));
          break;
        case Op::sqrt_s:
          acc(n.a, scalar(g(0, 0) / (2.0 * n.value(0, 0))));
          break;
        case Op::exp_s:
          acc(n.a, scalar(g(0, 0) * n.value(0, 0)));
          break;
        case Op::max_s:
          acc(sval(n.a) >= sval(n.b) ? n.a : n.b, g);
          break;
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    int a;
    int b;
    Mat value;
    Mat adjoint;
  };

  static Mat scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
  }

  const Mat& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  double sval(int id) const { return nodes_[static_cast<std::size_t>(id)].value(0, 0); }

  int push(Op op, int a, int b, Mat value) {
    nodes_.push_back(Node{op, a, b, std::move(value), Mat()});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void acc(int id, const Mat& g) {
    Mat& adj = nodes_[static_cast<std::size_t>(id)].adjoint;
    if (adj.size() == 0) {
      adj = g;
    } else {
      adj += g;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace greid
