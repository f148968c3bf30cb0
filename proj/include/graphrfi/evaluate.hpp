#pragma once

// Test-set evaluation of a trained model: RMSE/MAE over held-out genuine
// ratings (predictions clamped to [1,5] before scoring) and detection
// metrics over the held-out labeled users.

#include <span>
#include <vector>

#include "graphrfi/gcn.hpp"
#include "graphrfi/metrics.hpp"
#include "graphrfi/nrf.hpp"
#include "graphrfi/train.hpp"

namespace graphrfi {

// error_u for every user from the training-edge predictions; test edges never
// feed the error feature.
inline std::vector<double> training_error_features(const GcnView& gv, const Pipeline& p,
                                                   const EmbeddingTables& emb, int threads = 1) {
  const int e = gv.dims->e;
  std::vector<double> preds(p.train_edges.size());
  parallel_for(p.train_edges.size(), threads, [&](std::size_t i) {
    const auto& edge = p.train_edges[i];
    preds[i] = predict_rating(
        gv, std::span<const double>(emb.Z_U_new.row(edge.user), static_cast<std::size_t>(e)),
        std::span<const double>(emb.Z_V_new.row(edge.item), static_cast<std::size_t>(e)));
  });
  std::vector<double> sq_sum(static_cast<std::size_t>(p.graph.n_users()), 0.0);
  std::vector<int> cnt(static_cast<std::size_t>(p.graph.n_users()), 0);
  for (std::size_t i = 0; i < p.train_edges.size(); ++i) {
    const auto u = static_cast<std::size_t>(p.train_edges[i].user);
    const double d = preds[i] - static_cast<double>(p.train_edges[i].rating);
    sq_sum[u] += d * d;
    cnt[u] += 1;
  }
  std::vector<double> err(sq_sum.size(), 0.0);
  for (std::size_t u = 0; u < err.size(); ++u)
    err[u] = cnt[u] > 0 ? sq_sum[u] / static_cast<double>(cnt[u]) : 0.0;
  return err;
}

inline MetricsReport evaluate_model(const Dataset& ds, const std::vector<RatingEvent>& train_events,
                                    const std::vector<RatingEvent>& test_events,
                                    const UserSplit* user_split, const ParamStore& params,
                                    const ModelDims& dims, const StandardizerStats& stats,
                                    int threads = 1) {
  Pipeline p = make_pipeline(ds, train_events, user_split, &stats);
  GcnView gv{&dims, &params};
  ForestView fv{&dims, &params};
  const auto emb = convolve_all(gv, p.graph, p.X_std, threads);
  const int e = dims.e;

  MetricsReport rep;
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(test_events.size());
  for (const auto& ev : test_events) {
    const int u = p.graph.user_index.at(ev.user_id);
    const int v = p.graph.item_index.at(ev.item_id);
    const double rhat = clamp_rating(predict_rating(
        gv, std::span<const double>(emb.Z_U_new.row(u), static_cast<std::size_t>(e)),
        std::span<const double>(emb.Z_V_new.row(v), static_cast<std::size_t>(e))));
    pairs.emplace_back(static_cast<double>(ev.rating), rhat);
  }
  if (!pairs.empty()) {
    rep.rmse = rmse(pairs);
    rep.mae = mae(pairs);
  }

  if (user_split != nullptr && !user_split->test.empty()) {
    const auto errors = training_error_features(gv, p, emb, threads);
    std::vector<int> labels, predicted;
    labels.reserve(user_split->test.size());
    for (const auto& u : user_split->test) {
      const int idx = p.graph.user_index.at(u.user_id);
      std::vector<double> zprime(emb.Z_U_new.row(idx), emb.Z_U_new.row(idx) + e);
      zprime.push_back(errors[static_cast<std::size_t>(idx)]);
      const auto zstar = dense_embed(fv, zprime);
      predicted.push_back(classify(fv, zstar));
      labels.push_back(u.label == UserLabel::fraudster ? 1 : 0);
    }
    rep.cls = precision_recall_f1(labels, predicted);
    rep.has_classification = true;
  }
  return rep;
}

}  // namespace graphrfi
