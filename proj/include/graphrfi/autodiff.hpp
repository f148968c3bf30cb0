#pragma once

// Reverse-mode differentiation over vector-valued nodes, sized for the fixed
// architectures in this project rather than general tensor programs. A Tape
// owns all nodes of one forward pass; backward() walks the nodes in reverse
// creation order, which fixes the gradient accumulation order and keeps runs
// bit-reproducible.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "graphrfi/tensor.hpp"

namespace graphrfi::ad {

using NodeId = std::int32_t;

enum class Op : std::uint8_t {
  kConst,        // no inputs
  kLeaf,         // parameter slice; gradient read back by the binding owner
  kMatVec,       // a = flattened matrix, b = vector
  kAdd,          // a + b elementwise
  kSub,          // a - b elementwise
  kMul,          // a * b elementwise
  kRelu,         // max(a, 0)
  kSigmoid,      // 1 / (1 + exp(-a))
  kOneMinus,     // 1 - a
  kConcat,       // a then b
  kDot,          // scalar <a, b>
  kScale,        // auxd * a
  kPick,         // [a[aux]]
  kLogClamped,   // ln(max(a, 1e-12)) elementwise
  kSoftmax,      // softmax(a)
  kGather,       // variadic: scalar args packed into one vector
  kAddN,         // variadic: elementwise sum of same-sized args
  kWeightedSum,  // a = weight vector; variadic args are the summed vectors
};

inline constexpr double kLogFloor = 1e-12;

struct Node {
  std::vector<double> val;
  std::vector<double> grad;
  Op op = Op::kConst;
  NodeId a = -1;
  NodeId b = -1;
  std::int32_t arg_off = 0;
  std::int32_t arg_cnt = 0;
  std::int32_t aux = 0;
  double auxd = 0.0;
};

class Tape {
 public:
  std::vector<Node> nodes;
  std::vector<NodeId> arg_pool;

  const std::vector<double>& val(NodeId id) const { return nodes[static_cast<std::size_t>(id)].val; }
  const std::vector<double>& grad(NodeId id) const { return nodes[static_cast<std::size_t>(id)].grad; }
  double scalar(NodeId id) const { return nodes[static_cast<std::size_t>(id)].val[0]; }
  std::size_t size() const { return nodes.size(); }

  NodeId constant(std::vector<double> v) { return push(Op::kConst, std::move(v)); }
  NodeId constant(double x) { return push(Op::kConst, {x}); }

  NodeId leaf(std::vector<double> v) { return push(Op::kLeaf, std::move(v)); }

  // y[r] = sum_c W[r*C + c] * x[c]; W is a kLeaf/any node holding R*C values.
  NodeId matvec(NodeId W, NodeId x) {
    const auto& w = val(W);
    const auto& xv = val(x);
    const std::size_t c = xv.size();
    assert(c > 0 && w.size() % c == 0);
    const std::size_t r = w.size() / c;
    std::vector<double> y(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
      const double* wr = w.data() + i * c;
      double acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) acc += wr[j] * xv[j];
      y[i] = acc;
    }
    NodeId id = push(Op::kMatVec, std::move(y));
    nodes.back().a = W;
    nodes.back().b = x;
    return id;
  }

  NodeId add(NodeId a, NodeId b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    assert(av.size() == bv.size());
    std::vector<double> y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    return push2(Op::kAdd, std::move(y), a, b);
  }

  NodeId sub(NodeId a, NodeId b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    assert(av.size() == bv.size());
    std::vector<double> y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] - bv[i];
    return push2(Op::kSub, std::move(y), a, b);
  }

  NodeId mul(NodeId a, NodeId b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    assert(av.size() == bv.size());
    std::vector<double> y(av.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    return push2(Op::kMul, std::move(y), a, b);
  }

  NodeId relu(NodeId a) {
    std::vector<double> y = val(a);
    for (auto& x : y) x = x > 0.0 ? x : 0.0;
    return push2(Op::kRelu, std::move(y), a, -1);
  }

  NodeId sigmoid(NodeId a) {
    std::vector<double> y = val(a);
    for (auto& x : y) x = 1.0 / (1.0 + std::exp(-x));
    return push2(Op::kSigmoid, std::move(y), a, -1);
  }

  NodeId one_minus(NodeId a) {
    std::vector<double> y = val(a);
    for (auto& x : y) x = 1.0 - x;
    return push2(Op::kOneMinus, std::move(y), a, -1);
  }

  NodeId concat(NodeId a, NodeId b) {
    std::vector<double> y = val(a);
    y.insert(y.end(), val(b).begin(), val(b).end());
    return push2(Op::kConcat, std::move(y), a, b);
  }

  NodeId dot(NodeId a, NodeId b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    assert(av.size() == bv.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
    return push2(Op::kDot, {acc}, a, b);
  }

  NodeId scale(NodeId a, double factor) {
    std::vector<double> y = val(a);
    for (auto& x : y) x *= factor;
    NodeId id = push2(Op::kScale, std::move(y), a, -1);
    nodes.back().auxd = factor;
    return id;
  }

  NodeId pick(NodeId a, int index) {
    NodeId id = push2(Op::kPick, {val(a)[static_cast<std::size_t>(index)]}, a, -1);
    nodes.back().aux = index;
    return id;
  }

  NodeId log_clamped(NodeId a) {
    std::vector<double> y = val(a);
    for (auto& x : y) x = std::log(x > kLogFloor ? x : kLogFloor);
    return push2(Op::kLogClamped, std::move(y), a, -1);
  }

  // Max-shifted softmax; the shift cancels in the value and the gradient.
  NodeId softmax(NodeId a) {
    const auto& av = val(a);
    assert(!av.empty());
    double mx = av[0];
    for (double x : av) mx = x > mx ? x : mx;
    std::vector<double> y(av.size());
    double z = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      y[i] = std::exp(av[i] - mx);
      z += y[i];
    }
    for (auto& x : y) x /= z;
    return push2(Op::kSoftmax, std::move(y), a, -1);
  }

  // Packs scalar nodes into one vector node.
  NodeId gather(const std::vector<NodeId>& scalars) {
    std::vector<double> y(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) y[i] = scalar(scalars[i]);
    return push_variadic(Op::kGather, std::move(y), scalars);
  }

  NodeId add_n(const std::vector<NodeId>& parts) {
    assert(!parts.empty());
    std::vector<double> y = val(parts[0]);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const auto& p = val(parts[k]);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += p[i];
    }
    return push_variadic(Op::kAddN, std::move(y), parts);
  }

  // y = sum_k w[k] * v_k, with w a vector node and v_k same-sized vectors.
  NodeId weighted_sum(NodeId weights, const std::vector<NodeId>& vecs) {
    const auto& w = val(weights);
    assert(w.size() == vecs.size() && !vecs.empty());
    std::vector<double> y(val(vecs[0]).size(), 0.0);
    for (std::size_t k = 0; k < vecs.size(); ++k) {
      const auto& v = val(vecs[k]);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += w[k] * v[i];
    }
    NodeId id = push_variadic(Op::kWeightedSum, std::move(y), vecs);
    nodes[static_cast<std::size_t>(id)].a = weights;
    return id;
  }

  // Seeds d(root)/d(root) = 1 and propagates to every earlier node.
  void backward(NodeId root) {
    assert(val(root).size() == 1);
    for (auto& n : nodes) n.grad.assign(n.val.size(), 0.0);
    nodes[static_cast<std::size_t>(root)].grad[0] = 1.0;
    for (NodeId id = root; id >= 0; --id) {
      step_back(nodes[static_cast<std::size_t>(id)]);
    }
  }

 private:
  NodeId push(Op op, std::vector<double> v) {
    nodes.push_back(Node{std::move(v), {}, op, -1, -1, 0, 0, 0, 0.0});
    return static_cast<NodeId>(nodes.size()) - 1;
  }
  NodeId push2(Op op, std::vector<double> v, NodeId a, NodeId b) {
    NodeId id = push(op, std::move(v));
    nodes.back().a = a;
    nodes.back().b = b;
    return id;
  }
  NodeId push_variadic(Op op, std::vector<double> v, const std::vector<NodeId>& args) {
    NodeId id = push(op, std::move(v));
    nodes.back().arg_off = static_cast<std::int32_t>(arg_pool.size());
    nodes.back().arg_cnt = static_cast<std::int32_t>(args.size());
    arg_pool.insert(arg_pool.end(), args.begin(), args.end());
    return id;
  }

  std::vector<double>& g(NodeId id) { return nodes[static_cast<std::size_t>(id)].grad; }
  const std::vector<double>& v(NodeId id) const { return nodes[static_cast<std::size_t>(id)].val; }

  void step_back(const Node& n) {
    switch (n.op) {
      case Op::kConst:
      case Op::kLeaf:
        return;
      case Op::kMatVec: {
        auto& gw = g(n.a);
        auto& gx = g(n.b);
        const auto& w = v(n.a);
        const auto& x = v(n.b);
        const std::size_t c = x.size();
        const std::size_t r = n.val.size();
        for (std::size_t i = 0; i < r; ++i) {
          const double gi = n.grad[i];
          if (gi == 0.0) continue;
          const double* wr = w.data() + i * c;
          double* gwr = gw.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) {
            gwr[j] += gi * x[j];
            gx[j] += gi * wr[j];
          }
        }
        return;
      }
      case Op::kAdd: {
        auto& ga = g(n.a);
        auto& gb = g(n.b);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          ga[i] += n.grad[i];
          gb[i] += n.grad[i];
        }
        return;
      }
      case Op::kSub: {
        auto& ga = g(n.a);
        auto& gb = g(n.b);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          ga[i] += n.grad[i];
          gb[i] -= n.grad[i];
        }
        return;
      }
      case Op::kMul: {
        auto& ga = g(n.a);
        auto& gb = g(n.b);
        const auto& av = v(n.a);
        const auto& bv = v(n.b);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          ga[i] += n.grad[i] * bv[i];
          gb[i] += n.grad[i] * av[i];
        }
        return;
      }
      case Op::kRelu: {
        auto& ga = g(n.a);
        const auto& av = v(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          if (av[i] > 0.0) ga[i] += n.grad[i];
        return;
      }
      case Op::kSigmoid: {
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          ga[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
        return;
      }
      case Op::kOneMinus: {
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] -= n.grad[i];
        return;
      }
      case Op::kConcat: {
        auto& ga = g(n.a);
        auto& gb = g(n.b);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += n.grad[ga.size() + i];
        return;
      }
      case Op::kDot: {
        auto& ga = g(n.a);
        auto& gb = g(n.b);
        const auto& av = v(n.a);
        const auto& bv = v(n.b);
        const double gy = n.grad[0];
        if (gy == 0.0) return;
        for (std::size_t i = 0; i < av.size(); ++i) {
          ga[i] += gy * bv[i];
          gb[i] += gy * av[i];
        }
        return;
      }
      case Op::kScale: {
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * n.auxd;
        return;
      }
      case Op::kPick: {
        g(n.a)[static_cast<std::size_t>(n.aux)] += n.grad[0];
        return;
      }
      case Op::kLogClamped: {
        auto& ga = g(n.a);
        const auto& av = v(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          if (av[i] > kLogFloor) ga[i] += n.grad[i] / av[i];
        return;
      }
      case Op::kSoftmax: {
        auto& ga = g(n.a);
        double dotg = 0.0;
        for (std::size_t i = 0; i < n.grad.size(); ++i) dotg += n.grad[i] * n.val[i];
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          ga[i] += n.val[i] * (n.grad[i] - dotg);
        return;
      }
      case Op::kGather: {
        for (std::int32_t k = 0; k < n.arg_cnt; ++k)
          g(arg_pool[static_cast<std::size_t>(n.arg_off + k)])[0] += n.grad[static_cast<std::size_t>(k)];
        return;
      }
      case Op::kAddN: {
        for (std::int32_t k = 0; k < n.arg_cnt; ++k) {
          auto& ga = g(arg_pool[static_cast<std::size_t>(n.arg_off + k)]);
          for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
        }
        return;
      }
      case Op::kWeightedSum: {
        auto& gw = g(n.a);
        const auto& w = v(n.a);
        for (std::int32_t k = 0; k < n.arg_cnt; ++k) {
          const NodeId vk = arg_pool[static_cast<std::size_t>(n.arg_off + k)];
          auto& gv = g(vk);
          const auto& vv = v(vk);
          double acc = 0.0;
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            acc += n.grad[i] * vv[i];
            gv[i] += n.grad[i] * w[static_cast<std::size_t>(k)];
          }
          gw[static_cast<std::size_t>(k)] += acc;
        }
        return;
      }
    }
  }
};

// A parameter slice bound onto a tape; gradients flow back into a Grads
// buffer aligned with the owning ParamStore.
struct ParamBinding {
  NodeId node = -1;
  int tensor = -1;
  std::size_t offset = 0;
};

class BoundTape {
 public:
  Tape tape;

  explicit BoundTape(const ParamStore& params) : params_(&params) {}

  // Binds rows [row, row + nrows) of a tensor as one leaf (whole tensor by
  // default). Bindings are cached so repeated use shares a node.
  NodeId bind(int tensor, int row = 0, int nrows = -1) {
    const Tensor& t = params_->tensors[static_cast<std::size_t>(tensor)];
    if (nrows < 0) nrows = t.rows - row;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(tensor) << 40) | (static_cast<std::uint64_t>(row) << 16) |
        static_cast<std::uint64_t>(nrows);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const std::size_t off = static_cast<std::size_t>(row) * static_cast<std::size_t>(t.cols);
    const std::size_t len = static_cast<std::size_t>(nrows) * static_cast<std::size_t>(t.cols);
    NodeId id = tape.leaf(std::vector<double>(t.v.begin() + static_cast<std::ptrdiff_t>(off),
                                              t.v.begin() + static_cast<std::ptrdiff_t>(off + len)));
    bindings_.push_back({id, tensor, off});
    cache_.emplace(key, id);
    return id;
  }

  // Accumulates leaf gradients into `out`; call after tape.backward().
  void collect(Grads& out) const {
    for (const auto& b : bindings_) {
      const auto& gsrc = tape.grad(b.node);
      auto& dst = out.tensors[static_cast<std::size_t>(b.tensor)].v;
      for (std::size_t i = 0; i < gsrc.size(); ++i) dst[b.offset + i] += gsrc[i];
    }
  }

 private:
  const ParamStore* params_;
  std::vector<ParamBinding> bindings_;
  std::unordered_map<std::uint64_t, NodeId> cache_;
};

}  // namespace graphrfi::ad
