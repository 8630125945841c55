#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "addsep/core_math.hpp"
#include "addsep/errors.hpp"
#include "addsep/mlp.hpp"

namespace addsep {

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

enum class Op : std::uint8_t {
  Const,
  Input,
  Add,
  Sub,
  Mul,
  Neg,
  Softplus,
  SoftplusPrime,
  SoftplusDoublePrime,
};

class Tape;

/// Handle to one node on a tape. Arithmetic between handles from different
/// tapes throws TapeMismatch.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  double value() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Append-only record of scalar operations. Parent indices always reference
/// earlier nodes, so one reverse pass visits each node exactly once.
///
/// Two sweeps are provided: `adjoints` is the plain numeric reverse sweep;
/// `adjoint_vars` replays the reverse sweep as recorded operations, so the
/// derivative it produces is itself a tape node that can be differentiated
/// again (reverse-over-reverse).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }
  double value(std::size_t i) const { return values_[i]; }

  Var input(double v) { return push(Op::Input, 0, 0, v); }
  Var constant(double v) { return push(Op::Const, 0, 0, v); }

  Var binary(Op op, Var a, Var b) {
    check_owned(a);
    check_owned(b);
    double v = 0.0;
    switch (op) {
      case Op::Add: v = values_[a.index_] + values_[b.index_]; break;
      case Op::Sub: v = values_[a.index_] - values_[b.index_]; break;
      case Op::Mul: v = values_[a.index_] * values_[b.index_]; break;
      default: throw Error("binary: not a binary op");
    }
    return push(op, a.index_, b.index_, v);
  }

  Var unary(Op op, Var a) {
    check_owned(a);
    const double x = values_[a.index_];
    double v = 0.0;
    switch (op) {
      case Op::Neg: v = -x; break;
      case Op::Softplus: v = softplus(x); break;
      case Op::SoftplusPrime: v = softplus_prime(x); break;
      case Op::SoftplusDoublePrime: v = softplus_double_prime(x); break;
      default: throw Error("unary: not a unary op");
    }
    return push(op, a.index_, 0, v);
  }

  /// Numeric reverse sweep seeded with d(root)/d(root) = 1. Returns the
  /// adjoint of every node up to and including root; the tape itself is not
  /// modified, so repeating the sweep gives identical results.
  std::vector<double> adjoints(std::size_t root) const {
    std::vector<double> adj(root + 1, 0.0);
    adj[root] = 1.0;
    for (std::size_t i = root + 1; i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& nd = nodes_[i];
      switch (nd.op) {
        case Op::Const:
        case Op::Input:
          break;
        case Op::Add:
          adj[nd.a] += a;
          adj[nd.b] += a;
          break;
        case Op::Sub:
          adj[nd.a] += a;
          adj[nd.b] -= a;
          break;
        case Op::Mul:
          adj[nd.a] += a * values_[nd.b];
          adj[nd.b] += a * values_[nd.a];
          break;
        case Op::Neg:
          adj[nd.a] -= a;
          break;
        case Op::Softplus:
          adj[nd.a] += a * softplus_prime(values_[nd.a]);
          break;
        case Op::SoftplusPrime:
          adj[nd.a] += a * softplus_double_prime(values_[nd.a]);
          break;
        case Op::SoftplusDoublePrime:
          adj[nd.a] += a * softplus_triple_prime(values_[nd.a]);
          break;
      }
    }
    return adj;
  }

  /// Recorded reverse sweep: computes the adjoint of every node up to root
  /// as new nodes on this same tape. Entry k of the result is the node
  /// holding d(root)/d(node k); an invalid Var marks a structurally zero
  /// adjoint. Appends nodes, so record-phase only.
  std::vector<Var> adjoint_vars(std::size_t root) {
    std::vector<Var> adj(root + 1);
    adj[root] = constant(1.0);
    for (std::size_t i = root + 1; i-- > 0;) {
      const Var a = adj[i];
      if (!a.valid()) continue;
      const Node nd = nodes_[i];  // copy: appends may reallocate nodes_
      const Var va(this, nd.a);
      const Var vb(this, nd.b);
      switch (nd.op) {
        case Op::Const:
        case Op::Input:
          break;
        case Op::Add:
          accumulate(adj, nd.a, a);
          accumulate(adj, nd.b, a);
          break;
        case Op::Sub:
          accumulate(adj, nd.a, a);
          accumulate(adj, nd.b, unary(Op::Neg, a));
          break;
        case Op::Mul:
          accumulate(adj, nd.a, binary(Op::Mul, a, vb));
          accumulate(adj, nd.b, binary(Op::Mul, a, va));
          break;
        case Op::Neg:
          accumulate(adj, nd.a, unary(Op::Neg, a));
          break;
        case Op::Softplus:
          accumulate(adj, nd.a, binary(Op::Mul, a, unary(Op::SoftplusPrime, va)));
          break;
        case Op::SoftplusPrime:
          accumulate(adj, nd.a, binary(Op::Mul, a, unary(Op::SoftplusDoublePrime, va)));
          break;
        case Op::SoftplusDoublePrime:
          throw Error("adjoint_vars: third-order differentiation is not supported");
      }
    }
    return adj;
  }

 private:
  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
  };

  Var push(Op op, std::size_t a, std::size_t b, double v) {
    nodes_.push_back({op, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
    values_.push_back(v);
    return Var(this, nodes_.size() - 1);
  }

  void check_owned(Var v) const {
    if (v.tape_ != this) {
      throw TapeMismatch("operands recorded on different tapes");
    }
  }

  void accumulate(std::vector<Var>& adj, std::size_t idx, Var contribution) {
    adj[idx] = adj[idx].valid() ? binary(Op::Add, adj[idx], contribution) : contribution;
  }

  std::vector<Node> nodes_;
  std::vector<double> values_;
};

inline double Var::value() const { return tape_->value(index_); }

inline Var operator+(Var a, Var b) { return a.tape()->binary(Op::Add, a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->binary(Op::Sub, a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->binary(Op::Mul, a, b); }
inline Var operator-(Var a) { return a.tape()->unary(Op::Neg, a); }
inline Var operator+(Var a, double c) { return a + a.tape()->constant(c); }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator*(Var a, double c) { return a * a.tape()->constant(c); }
inline Var operator*(double c, Var a) { return a * c; }
inline Var softplus(Var a) { return a.tape()->unary(Op::Softplus, a); }
inline Var softplus_prime(Var a) { return a.tape()->unary(Op::SoftplusPrime, a); }
inline Var softplus_double_prime(Var a) { return a.tape()->unary(Op::SoftplusDoublePrime, a); }

// ---------------------------------------------------------------------------
// Differentiating an Mlp
// ---------------------------------------------------------------------------

struct Recording {
  std::vector<Var> inputs;
  Var output;
};

/// Replays the network's forward pass as tape operations.
inline Recording record_forward(const Mlp& net, Tape& tape, const Vector& point) {
  if (point.size() != net.input_dim()) {
    throw DimensionMismatch("record_forward: point dimension " + std::to_string(point.size()) +
                            ", network expects " + std::to_string(net.input_dim()));
  }
  Recording rec;
  rec.inputs.reserve(point.size());
  for (double x : point) rec.inputs.push_back(tape.input(x));

  std::vector<Var> a = rec.inputs;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& w = layers[l].weights;
    std::vector<Var> z;
    z.reserve(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      Var acc = tape.constant(layers[l].bias[i]);
      for (std::size_t j = 0; j < w.cols(); ++j) {
        acc = acc + tape.constant(w(i, j)) * a[j];
      }
      if (l + 1 < layers.size()) acc = softplus(acc);
      z.push_back(acc);
    }
    a = std::move(z);
  }
  rec.output = a[0];
  return rec;
}

/// Gradient of f-hat at `point` by one reverse sweep.
inline Vector gradient(const Mlp& net, const Vector& point) {
  Tape tape;
  const Recording rec = record_forward(net, tape, point);
  const std::vector<double> adj = tape.adjoints(rec.output.index());
  Vector out(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) out[i] = adj[rec.inputs[i].index()];
  return out;
}

/// Mixed partial d2 f-hat / d x_first d x_second by reverse-over-reverse:
/// the first reverse sweep is recorded on the tape and the node holding
/// d f / d x_first is then differentiated with respect to x_second.
inline double mixed_partial_nested(const Mlp& net, const Vector& point, std::size_t first,
                                   std::size_t second) {
  if (first == second) {
    throw SameVariable("mixed partial requires two distinct variables, got index " +
                       std::to_string(first) + " twice");
  }
  if (first >= point.size() || second >= point.size()) {
    throw DimensionMismatch("mixed_partial_nested: variable index out of range");
  }
  Tape tape;
  const Recording rec = record_forward(net, tape, point);
  const std::vector<Var> grad = tape.adjoint_vars(rec.output.index());
  const Var gi = grad[rec.inputs[first].index()];
  if (!gi.valid()) return 0.0;  // output does not depend on x_first at all
  const std::vector<double> adj = tape.adjoints(gi.index());
  return adj[rec.inputs[second].index()];
}

/// Full d x d matrix of second partials. Deliberately computes every row —
/// one numeric sweep per input — rather than extracting a single entry.
inline Matrix hessian(const Mlp& net, const Vector& point) {
  const std::size_t d = point.size();
  Tape tape;
  const Recording rec = record_forward(net, tape, point);
  const std::vector<Var> grad = tape.adjoint_vars(rec.output.index());
  Matrix h(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    const Var gr = grad[rec.inputs[r].index()];
    if (!gr.valid()) continue;
    const std::vector<double> adj = tape.adjoints(gr.index());
    for (std::size_t c = 0; c < d; ++c) h(r, c) = adj[rec.inputs[c].index()];
  }
  return h;
}

}  // namespace addsep
