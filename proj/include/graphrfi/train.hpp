#pragma once

// Joint training: reliability-weighted rating regression plus forest
// cross-entropy, minimized with hand-collected reverse-mode gradients.
//
// Epoch structure: one full plain forward pass refreshes the per-user error
// feature and genuine-probability weight (both consumed as constants by the
// default stop-gradient flags), then gradient steps run over rating-edge
// minibatches, each carrying the full-batch classification term. The loss
// report for epoch k reflects the parameters before epoch k's updates.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"
#include "graphrfi/features.hpp"
#include "graphrfi/forward.hpp"
#include "graphrfi/gcn.hpp"
#include "graphrfi/graph.hpp"
#include "graphrfi/model.hpp"
#include "graphrfi/nrf.hpp"
#include "graphrfi/parallel.hpp"
#include "graphrfi/rng.hpp"

namespace graphrfi {

struct TrainConfig {
  double lambda = 5.0;
  int embedding_dim = 100;  // e
  int hidden = 100;         // h, also h_att
  int attention_hidden = 100;
  int dense_dim = 100;  // d_z
  int trees = 5;
  int tree_depth = 3;
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 0;  // edges per rating-loss minibatch; 0 = full batch
  std::uint64_t seed = 0;
  bool weight_stop_gradient = true;
  bool error_feature_stop_gradient = true;
  double init_std = 0.1;
  // Test/ablation hook: compute the forest as usual but apply weight 1 to
  // every rating term. lambda = 0 implies the same rating path.
  bool force_unit_weights = false;
  std::string optimizer = "adam";  // or "sgd"
  int threads = 1;

  void validate() const {
    if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
    if (embedding_dim <= 0 || hidden <= 0 || attention_hidden <= 0 || dense_dim <= 0)
      throw ValidationError("dimensions must be positive");
    if (trees <= 0 || tree_depth <= 0) throw ValidationError("forest shape must be positive");
    if (learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
    if (epochs < 0 || batch_size < 0) throw ValidationError("epochs/batch_size must be non-negative");
    if (init_std <= 0.0) throw ValidationError("init_std must be positive");
    if (optimizer != "adam" && optimizer != "sgd") throw ValidationError("optimizer must be adam or sgd");
    if (threads < 1) throw ValidationError("threads must be >= 1");
  }

  ModelDims dims(int n_items) const {
    ModelDims d;
    d.e = embedding_dim;
    d.h = hidden;
    d.h_att = attention_hidden;
    d.d_z = dense_dim;
    d.trees = trees;
    d.depth = tree_depth;
    d.n_items = n_items;
    return d;
  }
};

struct LossReport {
  int epoch = 0;
  double rating_loss = 0.0;
  double fraudster_loss = 0.0;
  double total = 0.0;
};

// --- loss primitives (plain path; the tape builds the same expressions) ---

// (1/|E|) sum w_u * (r_hat - r)^2
inline double rating_loss(const std::vector<std::pair<double, double>>& truth_pred,
                          const std::vector<double>& weights) {
  if (truth_pred.size() != weights.size()) throw ValidationError("rating_loss: size mismatch");
  if (truth_pred.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth_pred.size(); ++i) {
    const double d = truth_pred[i].second - truth_pred[i].first;
    acc += weights[i] * d * d;
  }
  return acc / static_cast<double>(truth_pred.size());
}

// (1/|U|) sum -ln P[y = y_u], with the documented 1e-12 floor before log.
inline double fraudster_loss(const std::vector<double>& prob_true_label) {
  if (prob_true_label.empty()) throw ValidationError("fraudster_loss: no labeled users");
  double acc = 0.0;
  for (double p : prob_true_label) acc -= std::log(p > ad::kLogFloor ? p : ad::kLogFloor);
  return acc / static_cast<double>(prob_true_label.size());
}

inline double total_loss(double rating, double fraudster, double lambda) {
  if (lambda < 0.0) throw ValidationError("total_loss: lambda must be >= 0");
  return rating + lambda * fraudster;
}

// --- pipeline: everything derived deterministically from the inputs ---

struct Pipeline {
  RatingGraph graph;
  std::vector<FeatureVector> X_std;  // by graph user index
  StandardizerStats stats;
  std::vector<EdgeRef> train_edges;       // train_events order
  std::vector<int> labeled_train_users;   // graph user indices, ascending
  std::vector<int> labeled_train_labels;  // 0 genuine, 1 fraudster
};

// Features are computed from training events only and standardized with
// statistics fit on users outside the held-out user split.
inline Pipeline make_pipeline(const Dataset& ds, const std::vector<RatingEvent>& train_events,
                              const UserSplit* user_split,
                              const StandardizerStats* fixed_stats = nullptr) {
  Pipeline p;
  std::vector<std::string> item_universe;
  item_universe.reserve(ds.events.size());
  for (const auto& e : ds.events) item_universe.push_back(e.item_id);
  p.graph = build_graph(ds.users, train_events, item_universe);

  std::unordered_map<std::string, std::vector<RatingEvent>> by_user;
  for (const auto& e : train_events) by_user[e.user_id].push_back(e);
  std::unordered_map<std::string, const UserRecord*> record;
  for (const auto& u : ds.users) record.emplace(u.user_id, &u);

  FeatureMatrix X;
  X.rows.resize(static_cast<std::size_t>(p.graph.n_users()));
  static const std::vector<RatingEvent> kNone;
  for (int u = 0; u < p.graph.n_users(); ++u) {
    const auto& id = p.graph.user_ids[static_cast<std::size_t>(u)];
    auto it = by_user.find(id);
    X.rows[static_cast<std::size_t>(u)] =
        extract_user_features(*record.at(id), it == by_user.end() ? kNone : it->second);
  }

  if (fixed_stats != nullptr) {
    p.stats = *fixed_stats;
  } else {
    std::unordered_set<std::string> held_out;
    if (user_split != nullptr)
      for (const auto& u : user_split->test) held_out.insert(u.user_id);
    std::vector<std::size_t> fit_rows;
    for (int u = 0; u < p.graph.n_users(); ++u)
      if (!held_out.count(p.graph.user_ids[static_cast<std::size_t>(u)]))
        fit_rows.push_back(static_cast<std::size_t>(u));
    p.stats = fit_standardizer(X, fit_rows);
  }
  p.X_std.reserve(X.rows.size());
  for (const auto& row : X.rows) p.X_std.push_back(standardize(row, p.stats));

  p.train_edges.reserve(train_events.size());
  for (const auto& e : train_events) {
    p.train_edges.push_back(EdgeRef{p.graph.user_index.at(e.user_id),
                                    p.graph.item_index.at(e.item_id), e.rating});
  }

  if (user_split != nullptr) {
    std::vector<std::pair<int, int>> labeled;
    for (const auto& u : user_split->train) {
      labeled.emplace_back(p.graph.user_index.at(u.user_id),
                           u.label == UserLabel::fraudster ? 1 : 0);
    }
    std::sort(labeled.begin(), labeled.end());
    for (const auto& [idx, y] : labeled) {
      p.labeled_train_users.push_back(idx);
      p.labeled_train_labels.push_back(y);
    }
  }
  return p;
}

// --- per-epoch snapshot over the plain forward path ---

struct EpochSnapshot {
  EmbeddingTables emb;
  std::vector<double> predictions;  // per train edge
  SnapshotConstants constants;      // per graph user index
  std::vector<std::array<double, 2>> forest;  // per graph user index; {1,0} when unused
  LossReport losses;
};

inline EpochSnapshot compute_snapshot(const ParamStore& params, const ModelDims& dims,
                                      const Pipeline& p, const TrainConfig& cfg, int epoch) {
  GcnView gv{&dims, &params};
  ForestView fv{&dims, &params};
  EpochSnapshot s;
  s.emb = convolve_all(gv, p.graph, p.X_std, cfg.threads);

  const auto n_users = static_cast<std::size_t>(p.graph.n_users());
  s.predictions.resize(p.train_edges.size());
  parallel_for(p.train_edges.size(), cfg.threads, [&](std::size_t i) {
    const auto& e = p.train_edges[i];
    s.predictions[i] = predict_rating(
        gv, std::span<const double>(s.emb.Z_U_new.row(e.user), static_cast<std::size_t>(dims.e)),
        std::span<const double>(s.emb.Z_V_new.row(e.item), static_cast<std::size_t>(dims.e)));
  });

  // error_u over the user's training edges; 0 for edgeless users
  std::vector<double> sq_sum(n_users, 0.0);
  std::vector<int> cnt(n_users, 0);
  for (std::size_t i = 0; i < p.train_edges.size(); ++i) {
    const auto& e = p.train_edges[i];
    const double d = s.predictions[i] - static_cast<double>(e.rating);
    sq_sum[static_cast<std::size_t>(e.user)] += d * d;
    cnt[static_cast<std::size_t>(e.user)] += 1;
  }
  s.constants.error.resize(n_users, 0.0);
  for (std::size_t u = 0; u < n_users; ++u)
    s.constants.error[u] = cnt[u] > 0 ? sq_sum[u] / static_cast<double>(cnt[u]) : 0.0;

  const bool unit_weights = cfg.force_unit_weights || cfg.lambda == 0.0;
  const bool needs_forest = cfg.lambda > 0.0 || cfg.force_unit_weights;
  s.forest.assign(n_users, {1.0, 0.0});
  if (needs_forest) {
    parallel_for(n_users, cfg.threads, [&](std::size_t u) {
      std::vector<double> zprime(s.emb.Z_U_new.row(static_cast<int>(u)),
                                 s.emb.Z_U_new.row(static_cast<int>(u)) + dims.e);
      zprime.push_back(s.constants.error[u]);
      const auto zstar = dense_embed(fv, zprime);
      s.forest[u] = forest_prob(fv, zstar);
    });
  }
  s.constants.weight.resize(n_users, 1.0);
  if (!unit_weights)
    for (std::size_t u = 0; u < n_users; ++u) s.constants.weight[u] = s.forest[u][0];

  std::vector<std::pair<double, double>> pairs(p.train_edges.size());
  std::vector<double> weights(p.train_edges.size());
  for (std::size_t i = 0; i < p.train_edges.size(); ++i) {
    pairs[i] = {static_cast<double>(p.train_edges[i].rating), s.predictions[i]};
    weights[i] = s.constants.weight[static_cast<std::size_t>(p.train_edges[i].user)];
  }
  s.losses.epoch = epoch;
  s.losses.rating_loss = rating_loss(pairs, weights);
  if (cfg.lambda > 0.0) {
    std::vector<double> p_true(p.labeled_train_users.size());
    for (std::size_t i = 0; i < p.labeled_train_users.size(); ++i) {
      const auto u = static_cast<std::size_t>(p.labeled_train_users[i]);
      p_true[i] = s.forest[u][static_cast<std::size_t>(p.labeled_train_labels[i])];
    }
    s.losses.fraudster_loss = fraudster_loss(p_true);
  }
  s.losses.total = total_loss(s.losses.rating_loss, s.losses.fraudster_loss, cfg.lambda);
  return s;
}

// --- optimizers ---

struct AdamState {
  std::vector<Tensor> m, v;
  std::int64_t t = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit AdamState(const ParamStore& ps) {
    for (const auto& tn : ps.tensors) {
      m.emplace_back(tn.rows, tn.cols);
      v.emplace_back(tn.rows, tn.cols);
    }
  }

  void step(ParamStore& ps, const Grads& g, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < ps.tensors.size(); ++i) {
      auto& pv = ps.tensors[i].v;
      const auto& gv = g.tensors[i].v;
      auto& mv = m[i].v;
      auto& vv = v[i].v;
      for (std::size_t j = 0; j < pv.size(); ++j) {
        mv[j] = kBeta1 * mv[j] + (1.0 - kBeta1) * gv[j];
        vv[j] = kBeta2 * vv[j] + (1.0 - kBeta2) * gv[j] * gv[j];
        pv[j] -= lr * (mv[j] / c1) / (std::sqrt(vv[j] / c2) + kEps);
      }
    }
  }
};

inline void sgd_step(ParamStore& ps, const Grads& g, double lr) {
  for (std::size_t i = 0; i < ps.tensors.size(); ++i) {
    auto& pv = ps.tensors[i].v;
    const auto& gv = g.tensors[i].v;
    for (std::size_t j = 0; j < pv.size(); ++j) pv[j] -= lr * gv[j];
  }
}

// --- training driver ---

struct TrainResult {
  ModelDims dims;
  ParamStore params;
  StandardizerStats stats;
  std::vector<LossReport> reports;
};

inline void check_finite_grads(const ParamStore& ps, const Grads& g) {
  for (std::size_t i = 0; i < g.tensors.size(); ++i) {
    if (!g.tensors[i].all_finite())
      throw RuntimeFailure("non-finite gradient in parameter group " + ps.names[i]);
  }
}

inline TrainResult fit(const Dataset& ds, const std::vector<RatingEvent>& train_events,
                       const UserSplit* user_split, const TrainConfig& cfg,
                       const std::function<void(const LossReport&)>& on_epoch = nullptr) {
  cfg.validate();
  if (train_events.empty()) throw ValidationError("fit: no training events");
  if (cfg.lambda > 0.0 && (user_split == nullptr || user_split->train.empty()))
    throw ValidationError("fit: lambda > 0 requires a labeled user split");

  Pipeline p = make_pipeline(ds, train_events, user_split);
  TrainResult out;
  out.dims = cfg.dims(p.graph.n_items());
  out.params = make_param_store(out.dims);
  init_params(out.params, cfg.init_std, cfg.seed);
  out.stats = p.stats;

  AdamState adam(out.params);
  const bool use_adam = cfg.optimizer == "adam";

  LossOptions opt;
  opt.lambda = cfg.lambda;
  opt.weight_stop_gradient = cfg.weight_stop_gradient;
  opt.error_stop_gradient = cfg.error_feature_stop_gradient;
  opt.force_unit_weights = cfg.force_unit_weights || cfg.lambda == 0.0;

  const std::size_t n_edges = p.train_edges.size();
  std::vector<std::size_t> order(n_edges);
  for (std::size_t i = 0; i < n_edges; ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochSnapshot snap = compute_snapshot(out.params, out.dims, p, cfg, epoch);
    if (!std::isfinite(snap.losses.total))
      throw RuntimeFailure("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
    out.reports.push_back(snap.losses);
    if (on_epoch) on_epoch(snap.losses);

    auto rng = Rng::derive(cfg.seed, "batch-order", static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    const std::size_t bs = cfg.batch_size == 0 ? n_edges : static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t lo = 0; lo < n_edges; lo += bs) {
      const std::size_t hi = std::min(n_edges, lo + bs);
      opt.batch.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                       order.begin() + static_cast<std::ptrdiff_t>(hi));

      TapeForward F(out.params, out.dims, p.graph, p.X_std);
      JointLoss loss = build_joint_loss(F, p.train_edges, p.labeled_train_users,
                                        p.labeled_train_labels, snap.constants, opt);
      F.bt.tape.backward(loss.total);
      Grads grads(out.params);
      F.bt.collect(grads);
      check_finite_grads(out.params, grads);
      if (use_adam) {
        adam.step(out.params, grads, cfg.learning_rate);
      } else {
        sgd_step(out.params, grads, cfg.learning_rate);
      }
    }
  }
  return out;
}

}  // namespace graphrfi
