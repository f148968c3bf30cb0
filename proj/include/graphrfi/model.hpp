#pragma once

// Parameter schema shared by the rating-prediction and fraudster-detection
// components. Tensor order is frozen: checkpoints, optimizer state, and
// gradient buffers all align to it.

#include <string>
#include <vector>

#include "graphrfi/features.hpp"
#include "graphrfi/rng.hpp"
#include "graphrfi/tensor.hpp"

namespace graphrfi {

struct ModelDims {
  int feature_dim = kFeatureDim;
  int e = 100;      // embedding size
  int h = 100;      // MLP hidden / message size
  int h_att = 100;  // attention hidden size
  int d_z = 100;    // dense classifier embedding size
  int trees = 5;
  int depth = 3;
  int n_items = 0;

  int decision_count() const { return (1 << depth) - 1; }
  int leaf_count() const { return 1 << depth; }
};

// Fixed tensor indices; per-tree tensors follow the fixed block.
namespace pid {
enum : int {
  kWx, kBx,          // user feature projection, e x 36 and e
  kEr,               // rating embeddings, 6 x e (rows 0..4 = stars 1..5, row 5 = self)
  kZV0,              // item initial embeddings, m x e
  kGW0, kGb0, kGW1, kGb1, kGW2, kGb2,          // message MLP g
  kWagg, kBagg,                                // aggregation
  kAttW1, kAttB1, kAttW2, kAttB2,              // attention scorer
  kRW0, kRb0, kRW1, kRb1, kRW2, kRb2,          // rating regressor MLP
  kWproj,                                      // projection, h
  kWz, kBz,                                    // dense classifier layer
  kFixedCount
};
}  // namespace pid

inline constexpr int kSelfEmbeddingRow = 5;

inline int tree_weights_id(int tree) { return pid::kFixedCount + 2 * tree; }
inline int tree_leaves_id(int tree) { return pid::kFixedCount + 2 * tree + 1; }

inline ParamStore make_param_store(const ModelDims& d) {
  ParamStore ps;
  ps.add("W_x", d.e, d.feature_dim);
  ps.add("b_x", d.e, 1);
  ps.add("E_r", 6, d.e);
  ps.add("Z_V0", d.n_items, d.e);
  ps.add("g.W0", d.h, 2 * d.e);
  ps.add("g.b0", d.h, 1);
  ps.add("g.W1", d.h, d.h);
  ps.add("g.b1", d.h, 1);
  ps.add("g.W2", d.h, d.h);
  ps.add("g.b2", d.h, 1);
  ps.add("W_agg", d.e, d.h);
  ps.add("b_agg", d.e, 1);
  ps.add("att.W1", d.h_att, d.h + d.e);
  ps.add("att.b1", d.h_att, 1);
  ps.add("att.w2", d.h_att, 1);
  ps.add("att.b2", 1, 1);
  ps.add("reg.W0", d.h, 2 * d.e);
  ps.add("reg.b0", d.h, 1);
  ps.add("reg.W1", d.h, d.h);
  ps.add("reg.b1", d.h, 1);
  ps.add("reg.W2", d.h, d.h);
  ps.add("reg.b2", d.h, 1);
  ps.add("w_project", d.h, 1);
  ps.add("W_Z", d.d_z, d.e + 1);
  ps.add("b_Z", d.d_z, 1);
  for (int o = 0; o < d.trees; ++o) {
    ps.add("tree" + std::to_string(o) + ".w_d", d.decision_count(), d.d_z);
    ps.add("tree" + std::to_string(o) + ".leaf_logits", d.leaf_count(), 2);
  }
  return ps;
}

// Gaussian(0, init_std) for every tensor, in schema order, from one stream.
inline void init_params(ParamStore& ps, double init_std, std::uint64_t seed) {
  auto rng = Rng::derive(seed, "param-init");
  for (auto& t : ps.tensors) t.fill_gaussian(rng, init_std);
}

}  // namespace graphrfi
