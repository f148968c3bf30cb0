#pragma once

// Central finite-difference verification of the analytic gradients, over a
// small fixture graph covering every parameter group. The snapshot constants
// (per-user weight and error feature) are captured once from the unperturbed
// parameters and held fixed, matching the stop-gradient semantics of the
// loss; when the stop flags are off, the loss recomputes both on the tape and
// the finite differences probe straight through them.

#include <cmath>
#include <string>
#include <vector>

#include "graphrfi/forward.hpp"
#include "graphrfi/synth.hpp"
#include "graphrfi/train.hpp"

namespace graphrfi {

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
  double loss = 0.0;
};

// Fixture: 6 users (4 genuine / 2 fraudsters), 4 items, 12 edges.
inline Dataset grad_check_dataset(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_genuine = 4;
  cfg.n_fraudsters = 2;
  cfg.n_items = 4;
  cfg.ratings_per_user = 2;
  cfg.latent_rank = 1;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

inline TrainConfig grad_check_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.embedding_dim = 8;
  cfg.hidden = 8;
  cfg.attention_hidden = 8;
  cfg.dense_dim = 8;
  cfg.trees = 2;
  cfg.tree_depth = 2;
  cfg.lambda = 5.0;
  cfg.seed = seed;
  return cfg;
}

// Relative error with a small floor so that near-zero coordinates compare on
// an absolute scale.
inline double relative_error(double a, double b, double floor = 1e-6) {
  const double scale = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / scale;
}

inline GradCheckReport run_grad_check(const TrainConfig& cfg, const Dataset& ds, double step = 1e-4) {
  // All events train and all labeled users classify: the check needs every
  // parameter group on the tape, not an evaluation protocol.
  UserSplit users;
  for (const auto& u : ds.users)
    if (u.label != UserLabel::unlabeled) users.train.push_back(u);
  Pipeline p = make_pipeline(ds, ds.events, &users);

  ModelDims dims = cfg.dims(p.graph.n_items());
  ParamStore params = make_param_store(dims);
  init_params(params, cfg.init_std, cfg.seed);

  const EpochSnapshot snap = compute_snapshot(params, dims, p, cfg, 1);

  LossOptions opt;
  opt.lambda = cfg.lambda;
  opt.weight_stop_gradient = cfg.weight_stop_gradient;
  opt.error_stop_gradient = cfg.error_feature_stop_gradient;
  opt.force_unit_weights = cfg.force_unit_weights || cfg.lambda == 0.0;

  auto loss_value = [&](const ParamStore& ps) {
    TapeForward F(ps, dims, p.graph, p.X_std);
    JointLoss loss = build_joint_loss(F, p.train_edges, p.labeled_train_users,
                                      p.labeled_train_labels, snap.constants, opt);
    return F.bt.tape.scalar(loss.total);
  };

  GradCheckReport report;
  Grads analytic(params);
  {
    TapeForward F(params, dims, p.graph, p.X_std);
    JointLoss loss = build_joint_loss(F, p.train_edges, p.labeled_train_users,
                                      p.labeled_train_labels, snap.constants, opt);
    report.loss = F.bt.tape.scalar(loss.total);
    F.bt.tape.backward(loss.total);
    F.bt.collect(analytic);
  }

  ParamStore probe = params;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    GradCheckGroup group{params.names[t], 0.0};
    for (std::size_t j = 0; j < params.tensors[t].v.size(); ++j) {
      const double saved = probe.tensors[t].v[j];
      probe.tensors[t].v[j] = saved + step;
      const double up = loss_value(probe);
      probe.tensors[t].v[j] = saved - step;
      const double down = loss_value(probe);
      probe.tensors[t].v[j] = saved;
      const double fd = (up - down) / (2.0 * step);
      group.max_rel_error =
          std::max(group.max_rel_error, relative_error(analytic.tensors[t].v[j], fd));
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

inline GradCheckReport run_grad_check(std::uint64_t seed, double step = 1e-4) {
  return run_grad_check(grad_check_config(seed), grad_check_dataset(seed), step);
}

}  // namespace graphrfi
