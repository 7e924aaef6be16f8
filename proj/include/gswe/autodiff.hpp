#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gswe/errors.hpp"
#include "gswe/tensor.hpp"

namespace gswe {

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

/// Gradients of one backward pass, indexed by node handle. Nodes the root
/// does not reach report a zero tensor of their value's shape.
class Gradients {
 public:
  Tensor grad(Var v) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<std::optional<Tensor>> g_;
};

/// Reverse-mode differentiation tape over dense real tensors. Forward values
/// are computed eagerly as nodes are recorded; node inputs always reference
/// strictly earlier nodes, so one reverse sweep visits each node once.
///
/// A Tape is single-threaded. Distinct tapes may run on distinct threads.
class Tape {
  enum class Op {
    leaf,
    add,
    mul,
    div,
    neg,
    matmul,
    relu,
    exp,
    log,
    power,
    sum,
    mean,
    gather,
    concat,
    broadcast,
    stopgrad,
  };

  struct Node {
    Node(Op o, Tensor v, int in_a = -1, int in_b = -1)
        : op(o), value(std::move(v)), a(in_a), b(in_b) {}

    Op op;
    Tensor value;
    int a = -1, b = -1;                  // unary/binary inputs
    std::vector<int> parts;              // concat inputs
    std::vector<std::size_t> indices;    // gather source indices (flat)
    double exponent = 0.0;               // power
  };

 public:
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(Var v) const { return node(v).value; }

  Var leaf(Tensor t) { return push({Op::leaf, std::move(t)}); }

  Var scalar(double v) { return leaf(Tensor::scalar(v)); }

  Var add(Var x, Var y) {
    require_same_shape("add", x, y);
    Tensor out = node(x).value;
    const Tensor& b = node(y).value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return push({Op::add, reval(std::move(out)), x.id, y.id});
  }

  Var mul(Var x, Var y) {
    require_same_shape("mul", x, y);
    Tensor out = node(x).value;
    const Tensor& b = node(y).value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return push({Op::mul, reval(std::move(out)), x.id, y.id});
  }

  Var div(Var x, Var y) {
    require_same_shape("div", x, y);
    Tensor out = node(x).value;
    const Tensor& b = node(y).value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= b[i];
    return push({Op::div, reval(std::move(out)), x.id, y.id});
  }

  Var neg(Var x) {
    Tensor out = node(x).value;
    for (auto& v : out.data()) v = -v;
    return push({Op::neg, std::move(out), x.id});
  }

  Var matmul(Var x, Var y) {
    const Tensor& a = node(x).value;
    const Tensor& b = node(y).value;
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
      throw std::invalid_argument("matmul: incompatible shapes " +
                                  Tensor::shape_str(a.shape()) + " and " +
                                  Tensor::shape_str(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t t = 0; t < k; ++t) {
        const double av = a.at(i, t);
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(t, j);
      }
    }
    return push({Op::matmul, reval(std::move(out)), x.id, y.id});
  }

  Var relu(Var x) {
    Tensor out = node(x).value;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return push({Op::relu, std::move(out), x.id});
  }

  Var exp(Var x) {
    Tensor out = node(x).value;
    for (auto& v : out.data()) v = std::exp(v);
    return push({Op::exp, reval(std::move(out)), x.id});
  }

  Var log(Var x) {
    Tensor out = node(x).value;
    for (auto& v : out.data()) v = std::log(v);
    return push({Op::log, reval(std::move(out)), x.id});
  }

  /// Elementwise x^e for a fixed real exponent.
  Var power(Var x, double e) {
    Tensor out = node(x).value;
    for (auto& v : out.data()) v = std::pow(v, e);
    Node n{Op::power, reval(std::move(out)), x.id};
    n.exponent = e;
    return push(std::move(n));
  }

  /// Sum of all entries; yields a rank-0 scalar.
  Var sum(Var x) {
    const auto& d = node(x).value.data();
    double acc = 0.0;
    for (double v : d) acc += v;
    return push({Op::sum, Tensor::scalar(acc), x.id});
  }

  Var mean(Var x) {
    const auto& d = node(x).value.data();
    double acc = 0.0;
    for (double v : d) acc += v;
    return push({Op::mean, Tensor::scalar(acc / static_cast<double>(d.size())),
                 x.id});
  }

  /// Gathers flat source positions into a vector of indices.size().
  /// The backward pass scatter-adds cotangents back to the source positions.
  Var gather(Var x, std::vector<std::size_t> indices) {
    std::vector<std::size_t> shape{indices.size()};
    return gather(x, std::move(indices), std::move(shape));
  }

  /// Gather with an explicit output shape (numel must match the index
  /// count); shape {} yields a rank-0 scalar.
  Var gather(Var x, std::vector<std::size_t> indices,
             std::vector<std::size_t> out_shape) {
    const Tensor& src = node(x).value;
    if (Tensor::numel_of(out_shape) != indices.size()) {
      throw std::invalid_argument(
          "gather: output shape " + Tensor::shape_str(out_shape) +
          " does not hold " + std::to_string(indices.size()) + " indices");
    }
    std::vector<double> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= src.size()) {
        throw std::invalid_argument(
            "gather: index " + std::to_string(indices[i]) +
            " out of range for source of size " + std::to_string(src.size()));
      }
      out[i] = src[indices[i]];
    }
    Node n{Op::gather, Tensor(std::move(out_shape), std::move(out)), x.id};
    n.indices = std::move(indices);
    return push(std::move(n));
  }

  /// Concatenates the flattened inputs into one vector.
  Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    std::vector<double> out;
    Node n{Op::concat, Tensor{}};
    for (Var p : parts) {
      const auto& d = node(p).value.data();
      out.insert(out.end(), d.begin(), d.end());
      n.parts.push_back(p.id);
    }
    n.value = Tensor::vector(std::move(out));
    return push(std::move(n));
  }

  /// Replicates x over leading dimensions; x's shape must be a suffix of the
  /// target shape (a scalar broadcasts to anything).
  Var broadcast(Var x, std::vector<std::size_t> target) {
    const Tensor& src = node(x).value;
    const auto& ss = src.shape();
    if (ss.size() > target.size() ||
        !std::equal(ss.rbegin(), ss.rend(), target.rbegin())) {
      throw std::invalid_argument("broadcast: source shape " +
                                  Tensor::shape_str(ss) +
                                  " is not a suffix of target " +
                                  Tensor::shape_str(target));
    }
    const std::size_t n = src.size();
    const std::size_t reps = Tensor::numel_of(target) / n;
    std::vector<double> out;
    out.reserve(n * reps);
    for (std::size_t r = 0; r < reps; ++r) {
      out.insert(out.end(), src.data().begin(), src.data().end());
    }
    return push({Op::broadcast, Tensor(std::move(target), std::move(out)),
                 x.id});
  }

  /// Identity forward; contributes zero to every ancestor in backward.
  Var stop_gradient(Var x) {
    return push({Op::stopgrad, node(x).value, x.id});
  }

  /// Gradients of a scalar root with respect to every node on the tape.
  /// Visits nodes in reverse insertion order exactly once.
  Gradients backward(Var root) const {
    const Node& r = node(root);
    if (r.value.size() != 1) {
      throw std::invalid_argument(
          "backward: root must be scalar-shaped, got " +
          Tensor::shape_str(r.value.shape()));
    }
    Gradients out;
    out.tape_ = this;
    out.g_.resize(nodes_.size());
    out.g_[root.id] = Tensor(r.value.shape(), {1.0});
    for (int i = root.id; i >= 0; --i) {
      if (!out.g_[i].has_value()) continue;
      accumulate(nodes_[i], *out.g_[i], out.g_);
    }
    return out;
  }

 private:
  friend class Gradients;

  const Node& node(Var v) const {
    if (v.tape != this || v.id < 0 ||
        static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw std::invalid_argument("Var does not belong to this tape");
    }
    return nodes_[v.id];
  }

  void require_same_shape(const char* op, Var x, Var y) const {
    const Tensor& a = node(x).value;
    const Tensor& b = node(y).value;
    if (!a.same_shape(b)) {
      throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                  Tensor::shape_str(a.shape()) + " vs " +
                                  Tensor::shape_str(b.shape()));
    }
  }

  // Re-validates finiteness for ops whose result can overflow even on
  // finite inputs.
  static Tensor reval(Tensor t) {
    t.check_finite();
    return t;
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  static void acc(std::optional<Tensor>& slot, const Tensor& contribution) {
    if (!slot.has_value()) {
      slot = contribution;
      return;
    }
    for (std::size_t i = 0; i < slot->size(); ++i) {
      (*slot)[i] += contribution[i];
    }
  }

  void accumulate(const Node& n, const Tensor& cot,
                  std::vector<std::optional<Tensor>>& g) const {
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add:
        acc(g[n.a], cot);
        acc(g[n.b], cot);
        break;
      case Op::mul: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        Tensor da(a.shape()), db(b.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) {
          da[i] = cot[i] * b[i];
          db[i] = cot[i] * a[i];
        }
        acc(g[n.a], da);
        acc(g[n.b], db);
        break;
      }
      case Op::div: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        Tensor da(a.shape()), db(b.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) {
          da[i] = cot[i] / b[i];
          db[i] = -cot[i] * a[i] / (b[i] * b[i]);
        }
        acc(g[n.a], da);
        acc(g[n.b], db);
        break;
      }
      case Op::neg: {
        Tensor da(cot.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) da[i] = -cot[i];
        acc(g[n.a], da);
        break;
      }
      case Op::matmul: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        const std::size_t m = a.extent(0), k = a.extent(1), c = b.extent(1);
        Tensor da(a.shape()), db(b.shape());
        // da = cot * b^T ; db = a^T * cot
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const double cv = cot.at(i, j);
            for (std::size_t t = 0; t < k; ++t) {
              da.at(i, t) += cv * b.at(t, j);
              db.at(t, j) += a.at(i, t) * cv;
            }
          }
        }
        acc(g[n.a], da);
        acc(g[n.b], db);
        break;
      }
      case Op::relu: {
        const Tensor& a = nodes_[n.a].value;
        Tensor da(a.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) {
          da[i] = a[i] > 0.0 ? cot[i] : 0.0;
        }
        acc(g[n.a], da);
        break;
      }
      case Op::exp: {
        Tensor da(cot.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) {
          da[i] = cot[i] * n.value[i];
        }
        acc(g[n.a], da);
        break;
      }
      case Op::log: {
        const Tensor& a = nodes_[n.a].value;
        Tensor da(a.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) da[i] = cot[i] / a[i];
        acc(g[n.a], da);
        break;
      }
      case Op::power: {
        const Tensor& a = nodes_[n.a].value;
        Tensor da(a.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) {
          da[i] = cot[i] * n.exponent * std::pow(a[i], n.exponent - 1.0);
        }
        acc(g[n.a], da);
        break;
      }
      case Op::sum: {
        const Tensor& a = nodes_[n.a].value;
        acc(g[n.a], Tensor::full(a.shape(), cot[0]));
        break;
      }
      case Op::mean: {
        const Tensor& a = nodes_[n.a].value;
        acc(g[n.a],
            Tensor::full(a.shape(), cot[0] / static_cast<double>(a.size())));
        break;
      }
      case Op::gather: {
        const Tensor& a = nodes_[n.a].value;
        Tensor da(a.shape());
        for (std::size_t i = 0; i < n.indices.size(); ++i) {
          da[n.indices[i]] += cot[i];
        }
        acc(g[n.a], da);
        break;
      }
      case Op::concat: {
        std::size_t off = 0;
        for (int pid : n.parts) {
          const Tensor& p = nodes_[pid].value;
          Tensor dp(p.shape());
          for (std::size_t i = 0; i < p.size(); ++i) dp[i] = cot[off + i];
          off += p.size();
          acc(g[pid], dp);
        }
        break;
      }
      case Op::broadcast: {
        const Tensor& a = nodes_[n.a].value;
        const std::size_t sn = a.size();
        Tensor da(a.shape());
        for (std::size_t i = 0; i < cot.size(); ++i) da[i % sn] += cot[i];
        acc(g[n.a], da);
        break;
      }
      case Op::stopgrad:
        break;
    }
  }

  std::vector<Node> nodes_;
};

inline Tensor Gradients::grad(Var v) const {
  if (v.tape != tape_ || v.id < 0 ||
      static_cast<std::size_t>(v.id) >= g_.size()) {
    throw std::invalid_argument("grad: Var does not belong to this tape");
  }
  if (g_[v.id].has_value()) return *g_[v.id];
  return Tensor(tape_->nodes_[v.id].value.shape());
}

// Operator sugar; both operands must live on the same tape.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator-(Var a, Var b) { return a.tape->add(a, a.tape->neg(b)); }

/// |x| assembled from the primitive set; the subgradient at 0 is 0.
inline Var abs_value(Var x) {
  Tape& t = *x.tape;
  return t.add(t.relu(x), t.relu(t.neg(x)));
}

}  // namespace gswe
