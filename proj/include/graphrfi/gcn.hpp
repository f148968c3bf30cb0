#pragma once

// Rating-prediction representation learner: rating-conditioned messages,
// attention aggregation over the neighbor set I(.) = N(.) + self, one full
// graph convolution step, and the MLP rating regressor. This is the plain
// (tape-free) forward path; training builds the same math on the tape.

#include <cmath>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

#include "graphrfi/graph.hpp"
#include "graphrfi/model.hpp"
#include "graphrfi/parallel.hpp"
#include "graphrfi/tensor.hpp"

namespace graphrfi {

using Vec = std::vector<double>;

namespace detail {

inline Vec matvec(const Tensor& W, std::span<const double> x) {
  Vec y(static_cast<std::size_t>(W.rows), 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double* wr = W.row(r);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += wr[j] * x[j];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

inline void add_inplace(Vec& y, const Tensor& b) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.v[i];
}

inline void relu_inplace(Vec& y) {
  for (auto& x : y) x = x > 0.0 ? x : 0.0;
}

inline Vec concat(std::span<const double> a, std::span<const double> b) {
  Vec y(a.begin(), a.end());
  y.insert(y.end(), b.begin(), b.end());
  return y;
}

// Three affine layers with ReLU between them; the last layer is linear.
inline Vec mlp3(const Tensor& W0, const Tensor& b0, const Tensor& W1, const Tensor& b1,
                const Tensor& W2, const Tensor& b2, std::span<const double> in) {
  Vec h = matvec(W0, in);
  add_inplace(h, b0);
  relu_inplace(h);
  Vec h2 = matvec(W1, h);
  add_inplace(h2, b1);
  relu_inplace(h2);
  Vec out = matvec(W2, h2);
  add_inplace(out, b2);
  return out;
}

}  // namespace detail

// Read-only view of the rating-prediction parameters.
struct GcnView {
  const ModelDims* dims;
  const ParamStore* ps;

  const Tensor& t(int id) const { return ps->tensors[static_cast<std::size_t>(id)]; }
};

struct EmbeddingTables {
  Tensor Z_U_new;  // n x e
  Tensor Z_V_new;  // m x e
};

// z_u^0 = W_x x_u + b_x: lifts the 36-dim behavioral features into the shared
// embedding space so users and items can use the same message network.
inline Vec user_initial_embedding(const GcnView& m, std::span<const double> x_std) {
  Vec z = detail::matvec(m.t(pid::kWx), x_std);
  detail::add_inplace(z, m.t(pid::kBx));
  return z;
}

// h = g(z_neighbor concat e_rating) through the shared 3-layer message MLP.
inline Vec message(const GcnView& m, std::span<const double> z_neighbor, int rating) {
  if (rating < 1 || rating > 5) throw ValidationError("message: rating out of range");
  const Tensor& er = m.t(pid::kEr);
  const Vec in = detail::concat(z_neighbor,
                                std::span<const double>(er.row(rating - 1), static_cast<std::size_t>(er.cols)));
  return detail::mlp3(m.t(pid::kGW0), m.t(pid::kGb0), m.t(pid::kGW1), m.t(pid::kGb1),
                      m.t(pid::kGW2), m.t(pid::kGb2), in);
}

// Self node's message: no rating exists for the self loop, so g is applied to
// the node's own embedding paired with a dedicated learnable "self" row of E_r.
inline Vec message_self(const GcnView& m, std::span<const double> z_self) {
  const Tensor& er = m.t(pid::kEr);
  const Vec in = detail::concat(
      z_self, std::span<const double>(er.row(kSelfEmbeddingRow), static_cast<std::size_t>(er.cols)));
  return detail::mlp3(m.t(pid::kGW0), m.t(pid::kGb0), m.t(pid::kGW1), m.t(pid::kGb1),
                      m.t(pid::kGW2), m.t(pid::kGb2), in);
}

// a_k = w2 . ReLU(W1 [h_k concat z_target] + b1) + b2, then softmax over k.
inline Vec attention_weights(const GcnView& m, std::span<const double> z_target,
                             const std::vector<Vec>& messages) {
  if (messages.empty()) throw ValidationError("attention_weights: empty message list");
  Vec scores(messages.size());
  for (std::size_t k = 0; k < messages.size(); ++k) {
    const Vec in = detail::concat(messages[k], z_target);
    Vec hidden = detail::matvec(m.t(pid::kAttW1), in);
    detail::add_inplace(hidden, m.t(pid::kAttB1));
    detail::relu_inplace(hidden);
    const Tensor& w2 = m.t(pid::kAttW2);
    double s = m.t(pid::kAttB2).v[0];
    for (std::size_t i = 0; i < hidden.size(); ++i) s += w2.v[i] * hidden[i];
    scores[k] = s;
  }
  double mx = scores[0];
  for (double s : scores) mx = s > mx ? s : mx;
  double z = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - mx);
    z += s;
  }
  for (auto& s : scores) s /= z;
  return scores;
}

// z_new = ReLU(W_agg (sum_k alpha_k h_k) + b_agg).
inline Vec aggregate(const GcnView& m, const std::vector<Vec>& messages, const Vec& alpha) {
  if (messages.size() != alpha.size()) throw ValidationError("aggregate: size mismatch");
  Vec acc(messages[0].size(), 0.0);
  for (std::size_t k = 0; k < messages.size(); ++k) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += alpha[k] * messages[k][i];
  }
  Vec z = detail::matvec(m.t(pid::kWagg), acc);
  detail::add_inplace(z, m.t(pid::kBagg));
  detail::relu_inplace(z);
  return z;
}

// r_hat = w_project . g'(z_u_new concat z_v_new); unclamped (training uses the
// raw value, recommendation output clamps to [1,5]).
inline double predict_rating(const GcnView& m, std::span<const double> z_u_new,
                             std::span<const double> z_v_new) {
  const Vec in = detail::concat(z_u_new, z_v_new);
  const Vec out = detail::mlp3(m.t(pid::kRW0), m.t(pid::kRb0), m.t(pid::kRW1), m.t(pid::kRb1),
                               m.t(pid::kRW2), m.t(pid::kRb2), in);
  const Tensor& wp = m.t(pid::kWproj);
  double r = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) r += wp.v[i] * out[i];
  return r;
}

inline double clamp_rating(double r) { return r < 1.0 ? 1.0 : (r > 5.0 ? 5.0 : r); }

// One full graph convolution step over every user and item (first-order
// neighborhoods only). X_std rows are aligned to graph user indices.
// Messages depend only on (source node, rating), so they are computed once
// per distinct pair and shared across receivers. With threads > 1 the node
// ranges are chunked; every output row is an independent function of the
// parameters, so the result is identical for any thread count.
inline EmbeddingTables convolve_all(const GcnView& m, const RatingGraph& g,
                                    const std::vector<FeatureVector>& X_std, int threads = 1) {
  const int n = g.n_users(), mm = g.n_items();
  const int e = m.dims->e;
  EmbeddingTables out{Tensor(n, e), Tensor(mm, e)};

  std::vector<Vec> zu0(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t u) {
    zu0[u] = user_initial_embedding(m, X_std[u]);
  });
  const Tensor& zv0 = m.t(pid::kZV0);
  auto zv0_row = [&](int v) {
    return std::span<const double>(zv0.row(v), static_cast<std::size_t>(e));
  };

  auto user_chunk = [&](std::size_t lo, std::size_t hi) {
    std::unordered_map<std::int64_t, Vec> item_msg;  // keyed by item * 5 + (rating - 1)
    for (std::size_t u = lo; u < hi; ++u) {
      std::vector<Vec> msgs;
      msgs.reserve(g.user_adj[u].size() + 1);
      for (const auto& [v, r] : g.user_adj[u]) {
        auto [it, fresh] = item_msg.try_emplace(static_cast<std::int64_t>(v) * 5 + (r - 1));
        if (fresh) it->second = message(m, zv0_row(v), r);
        msgs.push_back(it->second);
      }
      msgs.push_back(message_self(m, zu0[u]));
      const Vec alpha = attention_weights(m, zu0[u], msgs);
      const Vec z = aggregate(m, msgs, alpha);
      std::copy(z.begin(), z.end(), out.Z_U_new.row(static_cast<int>(u)));
    }
  };
  auto item_chunk = [&](std::size_t lo, std::size_t hi) {
    std::unordered_map<std::int64_t, Vec> user_msg;
    for (std::size_t v = lo; v < hi; ++v) {
      std::vector<Vec> msgs;
      msgs.reserve(g.item_adj[v].size() + 1);
      for (const auto& [u, r] : g.item_adj[v]) {
        auto [it, fresh] = user_msg.try_emplace(static_cast<std::int64_t>(u) * 5 + (r - 1));
        if (fresh) it->second = message(m, zu0[static_cast<std::size_t>(u)], r);
        msgs.push_back(it->second);
      }
      msgs.push_back(message_self(m, zv0_row(static_cast<int>(v))));
      const Vec alpha = attention_weights(m, zv0_row(static_cast<int>(v)), msgs);
      const Vec z = aggregate(m, msgs, alpha);
      std::copy(z.begin(), z.end(), out.Z_V_new.row(static_cast<int>(v)));
    }
  };

  if (threads <= 1) {
    user_chunk(0, static_cast<std::size_t>(n));
    item_chunk(0, static_cast<std::size_t>(mm));
  } else {
    std::vector<std::thread> pool;
    auto spawn = [&](auto& body, std::size_t count) {
      const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1));
      const std::size_t chunk = (count + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
      }
    };
    spawn(user_chunk, static_cast<std::size_t>(n));
    for (auto& t : pool) t.join();
    pool.clear();
    spawn(item_chunk, static_cast<std::size_t>(mm));
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace graphrfi
