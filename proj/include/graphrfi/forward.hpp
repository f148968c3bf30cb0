#pragma once

// Tape-based forward pass: the same math as gcn.hpp / nrf.hpp built on the
// autodiff tape, restricted to the users, items, and edges a training step
// actually touches. Equivalence with the plain path is pinned by tests.

#include <cassert>
#include <unordered_map>
#include <vector>

#include "graphrfi/autodiff.hpp"
#include "graphrfi/features.hpp"
#include "graphrfi/graph.hpp"
#include "graphrfi/model.hpp"

namespace graphrfi {

struct EdgeRef {
  int user = 0;
  int item = 0;
  int rating = 0;
};

// z* = sigmoid(W_Z' z' + b_Z') on the tape.
inline ad::NodeId tape_dense_embed(ad::BoundTape& bt, ad::NodeId zprime) {
  auto& T = bt.tape;
  return T.sigmoid(T.add(T.matvec(bt.bind(pid::kWz), zprime), bt.bind(pid::kBz)));
}

// One soft decision tree on the tape: sigmoid routing products mixed with the
// leaf softmax distributions.
inline ad::NodeId tape_tree_distribution(ad::BoundTape& bt, const ModelDims& dims, int tree,
                                         ad::NodeId zstar) {
  auto& T = bt.tape;
  const int depth = dims.depth;
  const int dnodes = dims.decision_count();
  std::vector<ad::NodeId> f(static_cast<std::size_t>(dnodes)), fbar(static_cast<std::size_t>(dnodes));
  for (int d = 0; d < dnodes; ++d) {
    f[static_cast<std::size_t>(d)] = T.sigmoid(T.dot(bt.bind(tree_weights_id(tree), d, 1), zstar));
    fbar[static_cast<std::size_t>(d)] = T.one_minus(f[static_cast<std::size_t>(d)]);
  }
  const int leaves = dims.leaf_count();
  std::vector<ad::NodeId> mu(static_cast<std::size_t>(leaves));
  std::vector<ad::NodeId> pi(static_cast<std::size_t>(leaves));
  for (int p = 0; p < leaves; ++p) {
    ad::NodeId route = -1;
    int node = 0;
    for (int level = depth - 1; level >= 0; --level) {
      const int go_right = (p >> level) & 1;
      ad::NodeId factor = go_right ? fbar[static_cast<std::size_t>(node)] : f[static_cast<std::size_t>(node)];
      route = route < 0 ? factor : T.mul(route, factor);
      node = 2 * node + 1 + go_right;
    }
    mu[static_cast<std::size_t>(p)] = route;
    pi[static_cast<std::size_t>(p)] = T.softmax(bt.bind(tree_leaves_id(tree), p, 1));
  }
  return T.weighted_sum(T.gather(mu), pi);
}

inline ad::NodeId tape_forest_distribution(ad::BoundTape& bt, const ModelDims& dims,
                                           ad::NodeId zstar) {
  auto& T = bt.tape;
  std::vector<ad::NodeId> tree_dists;
  tree_dists.reserve(static_cast<std::size_t>(dims.trees));
  for (int o = 0; o < dims.trees; ++o) tree_dists.push_back(tape_tree_distribution(bt, dims, o, zstar));
  return T.scale(T.add_n(tree_dists), 1.0 / static_cast<double>(dims.trees));
}

class TapeForward {
 public:
  TapeForward(const ParamStore& ps, const ModelDims& dims, const RatingGraph& g,
              const std::vector<FeatureVector>& X_std)
      : bt(ps),
        dims_(&dims),
        g_(&g),
        X_(&X_std),
        zu0_(static_cast<std::size_t>(g.n_users()), -1),
        zv0_(static_cast<std::size_t>(g.n_items()), -1),
        zu_new_(static_cast<std::size_t>(g.n_users()), -1),
        zv_new_(static_cast<std::size_t>(g.n_items()), -1) {}

  ad::BoundTape bt;

  // z_u^0 = W_x x_u + b_x
  ad::NodeId user_initial(int u) {
    auto& id = zu0_[static_cast<std::size_t>(u)];
    if (id < 0) {
      const auto& x = (*X_)[static_cast<std::size_t>(u)];
      ad::NodeId xc = bt.tape.constant(std::vector<double>(x.begin(), x.end()));
      id = bt.tape.add(bt.tape.matvec(bt.bind(pid::kWx), xc), bt.bind(pid::kBx));
    }
    return id;
  }

  ad::NodeId item_initial(int v) {
    auto& id = zv0_[static_cast<std::size_t>(v)];
    if (id < 0) id = bt.bind(pid::kZV0, v, 1);
    return id;
  }

  // g(z concat e_row) through the shared message MLP; row 0..4 = stars 1..5,
  // row kSelfEmbeddingRow = self. Cached per (source node, row).
  ad::NodeId item_message(int v, int er_row) {
    const std::int64_t key = static_cast<std::int64_t>(v) * 6 + er_row;
    auto it = item_msg_.find(key);
    if (it != item_msg_.end()) return it->second;
    ad::NodeId msg = message_mlp(item_initial(v), er_row);
    item_msg_.emplace(key, msg);
    return msg;
  }

  ad::NodeId user_message(int u, int er_row) {
    const std::int64_t key = static_cast<std::int64_t>(u) * 6 + er_row;
    auto it = user_msg_.find(key);
    if (it != user_msg_.end()) return it->second;
    ad::NodeId msg = message_mlp(user_initial(u), er_row);
    user_msg_.emplace(key, msg);
    return msg;
  }

  ad::NodeId user_embedding(int u) {
    auto& id = zu_new_[static_cast<std::size_t>(u)];
    if (id >= 0) return id;
    std::vector<ad::NodeId> msgs;
    const auto& adj = g_->user_adj[static_cast<std::size_t>(u)];
    msgs.reserve(adj.size() + 1);
    for (const auto& [v, r] : adj) msgs.push_back(item_message(v, r - 1));
    msgs.push_back(user_message(u, kSelfEmbeddingRow));
    id = aggregate_node(user_initial(u), msgs);
    return id;
  }

  ad::NodeId item_embedding(int v) {
    auto& id = zv_new_[static_cast<std::size_t>(v)];
    if (id >= 0) return id;
    std::vector<ad::NodeId> msgs;
    const auto& adj = g_->item_adj[static_cast<std::size_t>(v)];
    msgs.reserve(adj.size() + 1);
    for (const auto& [u, r] : adj) msgs.push_back(user_message(u, r - 1));
    msgs.push_back(item_message(v, kSelfEmbeddingRow));
    id = aggregate_node(item_initial(v), msgs);
    return id;
  }

  // r_hat for one user-item pair.
  ad::NodeId prediction(int u, int v) {
    const std::int64_t key = static_cast<std::int64_t>(u) * static_cast<std::int64_t>(g_->n_items()) + v;
    auto it = pred_.find(key);
    if (it != pred_.end()) return it->second;
    auto& T = bt.tape;
    ad::NodeId in = T.concat(user_embedding(u), item_embedding(v));
    ad::NodeId out = mlp3(pid::kRW0, pid::kRb0, pid::kRW1, pid::kRb1, pid::kRW2, pid::kRb2, in);
    ad::NodeId r = T.dot(bt.bind(pid::kWproj), out);
    pred_.emplace(key, r);
    return r;
  }

  // (r_hat - r)^2 for one training edge, cached per pair.
  ad::NodeId squared_error(const EdgeRef& edge) {
    const std::int64_t key =
        static_cast<std::int64_t>(edge.user) * static_cast<std::int64_t>(g_->n_items()) + edge.item;
    auto it = sq_.find(key);
    if (it != sq_.end()) return it->second;
    auto& T = bt.tape;
    ad::NodeId d = T.sub(prediction(edge.user, edge.item), T.constant(static_cast<double>(edge.rating)));
    ad::NodeId sq = T.mul(d, d);
    sq_.emplace(key, sq);
    return sq;
  }

  // Forest class distribution for user u given its error-feature node.
  ad::NodeId forest_distribution(int u, ad::NodeId error_node) {
    ad::NodeId zprime = bt.tape.concat(user_embedding(u), error_node);
    return tape_forest_distribution(bt, *dims_, tape_dense_embed(bt, zprime));
  }

  const ModelDims& dims() const { return *dims_; }
  const RatingGraph& graph() const { return *g_; }

 private:
  ad::NodeId mlp3(int W0, int b0, int W1, int b1, int W2, int b2, ad::NodeId in) {
    auto& T = bt.tape;
    ad::NodeId h0 = T.relu(T.add(T.matvec(bt.bind(W0), in), bt.bind(b0)));
    ad::NodeId h1 = T.relu(T.add(T.matvec(bt.bind(W1), h0), bt.bind(b1)));
    return T.add(T.matvec(bt.bind(W2), h1), bt.bind(b2));
  }

  ad::NodeId message_mlp(ad::NodeId z_source, int er_row) {
    ad::NodeId in = bt.tape.concat(z_source, bt.bind(pid::kEr, er_row, 1));
    return mlp3(pid::kGW0, pid::kGb0, pid::kGW1, pid::kGb1, pid::kGW2, pid::kGb2, in);
  }

  // softmax-normalized attention over messages, then W_agg + ReLU.
  ad::NodeId aggregate_node(ad::NodeId z_target, const std::vector<ad::NodeId>& msgs) {
    auto& T = bt.tape;
    std::vector<ad::NodeId> scores;
    scores.reserve(msgs.size());
    for (ad::NodeId msg : msgs) {
      ad::NodeId in = T.concat(msg, z_target);
      ad::NodeId hidden = T.relu(T.add(T.matvec(bt.bind(pid::kAttW1), in), bt.bind(pid::kAttB1)));
      scores.push_back(T.add(T.dot(bt.bind(pid::kAttW2), hidden), bt.bind(pid::kAttB2)));
    }
    ad::NodeId alpha = T.softmax(T.gather(scores));
    ad::NodeId agg = T.weighted_sum(alpha, msgs);
    return T.relu(T.add(T.matvec(bt.bind(pid::kWagg), agg), bt.bind(pid::kBagg)));
  }

  const ModelDims* dims_;
  const RatingGraph* g_;
  const std::vector<FeatureVector>* X_;
  std::vector<ad::NodeId> zu0_, zv0_, zu_new_, zv_new_;
  std::unordered_map<std::int64_t, ad::NodeId> item_msg_, user_msg_, pred_, sq_;
};

// Per-user constants captured once per epoch from the plain forward pass;
// consumed by gradient steps when the corresponding stop-gradient flag is set.
struct SnapshotConstants {
  std::vector<double> weight;  // P[y = 0 | z*_u], or 1.0 in the ablation
  std::vector<double> error;   // error_u over the user's training edges
};

struct LossOptions {
  double lambda = 5.0;
  bool weight_stop_gradient = true;
  bool error_stop_gradient = true;
  bool force_unit_weights = false;
  std::vector<std::size_t> batch;  // indices into train_edges; empty = all
};

struct JointLoss {
  ad::NodeId total = -1;
  ad::NodeId rating = -1;
  ad::NodeId fraud = -1;  // -1 when lambda == 0
};

// Assembles L = L_rating + lambda * L_fraudster on the tape.
//   L_rating    = (1/|B|) sum_B weight(owner) * (r_hat - r)^2
//   L_fraudster = (1/|U_l|) sum_labeled -ln P[y = y_u | z*_u]
// With force_unit_weights the weight factor disappears entirely, which makes
// the lambda = 0 configuration bit-identical to a plain GCN regression.
inline JointLoss build_joint_loss(TapeForward& F, const std::vector<EdgeRef>& train_edges,
                                  const std::vector<int>& labeled_users,
                                  const std::vector<int>& labels, const SnapshotConstants& snap,
                                  const LossOptions& opt) {
  auto& T = F.bt.tape;
  std::vector<std::size_t> batch = opt.batch;
  if (batch.empty()) {
    batch.resize(train_edges.size());
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  }

  const bool live_weights = !opt.weight_stop_gradient && !opt.force_unit_weights;
  const bool live_error = !opt.error_stop_gradient;

  // Per-user training-edge lists, needed for live error features.
  std::unordered_map<int, std::vector<std::size_t>> edges_of_user;
  if (live_error) {
    for (std::size_t i = 0; i < train_edges.size(); ++i)
      edges_of_user[train_edges[i].user].push_back(i);
  }

  std::unordered_map<int, ad::NodeId> error_node, dist_node;
  auto error_of = [&](int u) -> ad::NodeId {
    auto it = error_node.find(u);
    if (it != error_node.end()) return it->second;
    ad::NodeId id;
    if (live_error) {
      const auto& es = edges_of_user[u];
      if (es.empty()) {
        id = T.constant(0.0);
      } else {
        std::vector<ad::NodeId> sq;
        sq.reserve(es.size());
        for (auto ei : es) sq.push_back(F.squared_error(train_edges[ei]));
        id = T.scale(T.add_n(sq), 1.0 / static_cast<double>(es.size()));
      }
    } else {
      id = T.constant(snap.error[static_cast<std::size_t>(u)]);
    }
    error_node.emplace(u, id);
    return id;
  };
  auto dist_of = [&](int u) -> ad::NodeId {
    auto it = dist_node.find(u);
    if (it != dist_node.end()) return it->second;
    ad::NodeId id = F.forest_distribution(u, error_of(u));
    dist_node.emplace(u, id);
    return id;
  };

  std::vector<ad::NodeId> terms;
  terms.reserve(batch.size());
  for (auto bi : batch) {
    const EdgeRef& edge = train_edges[bi];
    ad::NodeId sq = F.squared_error(edge);
    if (opt.force_unit_weights) {
      terms.push_back(sq);
    } else if (live_weights) {
      terms.push_back(T.mul(T.pick(dist_of(edge.user), 0), sq));
    } else {
      terms.push_back(T.scale(sq, snap.weight[static_cast<std::size_t>(edge.user)]));
    }
  }
  JointLoss out;
  out.rating = T.scale(T.add_n(terms), 1.0 / static_cast<double>(terms.size()));

  if (opt.lambda > 0.0) {
    assert(!labeled_users.empty());
    std::vector<ad::NodeId> nll;
    nll.reserve(labeled_users.size());
    for (std::size_t i = 0; i < labeled_users.size(); ++i) {
      ad::NodeId p = T.pick(dist_of(labeled_users[i]), labels[i]);
      nll.push_back(T.scale(T.log_clamped(p), -1.0));
    }
    out.fraud = T.scale(T.add_n(nll), 1.0 / static_cast<double>(nll.size()));
    out.total = T.add(out.rating, T.scale(out.fraud, opt.lambda));
  } else {
    out.total = out.rating;
  }
  return out;
}

}  // namespace graphrfi
