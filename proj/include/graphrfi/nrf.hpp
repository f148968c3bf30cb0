#pragma once

// Neural random forest fraudster classifier: prediction-error feature, dense
// re-embedding, sigmoid decision routing through fixed full binary trees, and
// forest-averaged class probabilities. Plain forward path.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "graphrfi/model.hpp"
#include "graphrfi/tensor.hpp"

namespace graphrfi {

// Mean square of a user's rating prediction errors; 0 for users with no
// interactions. Computed over training edges only.
inline double prediction_error_feature(const std::vector<std::pair<double, double>>& truth_pred) {
  if (truth_pred.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& [r, rhat] : truth_pred) {
    const double d = r - rhat;
    acc += d * d;
  }
  return acc / static_cast<double>(truth_pred.size());
}

struct ForestView {
  const ModelDims* dims;
  const ParamStore* ps;

  const Tensor& t(int id) const { return ps->tensors[static_cast<std::size_t>(id)]; }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// z* = sigmoid(W_Z' z' + b_Z'), entrywise in (0,1).
inline std::vector<double> dense_embed(const ForestView& f, std::span<const double> z_prime) {
  const Tensor& W = f.t(pid::kWz);
  const Tensor& b = f.t(pid::kBz);
  std::vector<double> z(static_cast<std::size_t>(W.rows));
  for (int r = 0; r < W.rows; ++r) {
    const double* wr = W.row(r);
    double acc = b.v[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < z_prime.size(); ++j) acc += wr[j] * z_prime[j];
    z[static_cast<std::size_t>(r)] = sigmoid(acc);
  }
  return z;
}

// f_d = sigmoid(w_d . z*): probability of routing the input left.
inline double decision(std::span<const double> w_d, std::span<const double> z_star) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w_d.size(); ++i) acc += w_d[i] * z_star[i];
  return sigmoid(acc);
}

// Decision values for every node of one tree, breadth-first order.
inline std::vector<double> tree_decisions(const ForestView& f, int tree,
                                          std::span<const double> z_star) {
  const Tensor& wd = f.t(tree_weights_id(tree));
  std::vector<double> d(static_cast<std::size_t>(wd.rows));
  for (int i = 0; i < wd.rows; ++i)
    d[static_cast<std::size_t>(i)] =
        decision(std::span<const double>(wd.row(i), static_cast<std::size_t>(wd.cols)), z_star);
  return d;
}

// Probability of reaching each leaf: the product along its root path of f_d
// for left branches and 1 - f_d for right branches. Leaves are indexed left
// to right; the sums to 1 by construction.
inline std::vector<double> leaf_routing_from_decisions(int depth, const std::vector<double>& f) {
  const int leaves = 1 << depth;
  std::vector<double> mu(static_cast<std::size_t>(leaves));
  for (int p = 0; p < leaves; ++p) {
    double prob = 1.0;
    int node = 0;
    for (int level = depth - 1; level >= 0; --level) {
      const int go_right = (p >> level) & 1;
      prob *= go_right ? 1.0 - f[static_cast<std::size_t>(node)] : f[static_cast<std::size_t>(node)];
      node = 2 * node + 1 + go_right;
    }
    mu[static_cast<std::size_t>(p)] = prob;
  }
  return mu;
}

inline std::vector<double> leaf_routing(const ForestView& f, int tree, std::span<const double> z_star) {
  return leaf_routing_from_decisions(f.dims->depth, tree_decisions(f, tree, z_star));
}

// Leaf class distribution pi_p = softmax of its two free logits.
inline std::array<double, 2> leaf_distribution(const ForestView& f, int tree, int leaf) {
  const Tensor& logits = f.t(tree_leaves_id(tree));
  const double a = logits.at(leaf, 0), b = logits.at(leaf, 1);
  const double mx = a > b ? a : b;
  const double ea = std::exp(a - mx), eb = std::exp(b - mx);
  return {ea / (ea + eb), eb / (ea + eb)};
}

// P_tree[y] = sum_p pi_{p,y} * routing(p).
inline std::array<double, 2> tree_prob(const ForestView& f, int tree, std::span<const double> z_star) {
  const auto mu = leaf_routing(f, tree, z_star);
  std::array<double, 2> p{0.0, 0.0};
  for (int leaf = 0; leaf < f.dims->leaf_count(); ++leaf) {
    const auto pi = leaf_distribution(f, tree, leaf);
    p[0] += pi[0] * mu[static_cast<std::size_t>(leaf)];
    p[1] += pi[1] * mu[static_cast<std::size_t>(leaf)];
  }
  return p;
}

// Arithmetic mean over the ensemble.
inline std::array<double, 2> forest_prob(const ForestView& f, std::span<const double> z_star) {
  std::array<double, 2> p{0.0, 0.0};
  for (int o = 0; o < f.dims->trees; ++o) {
    const auto tp = tree_prob(f, o, z_star);
    p[0] += tp[0];
    p[1] += tp[1];
  }
  p[0] /= static_cast<double>(f.dims->trees);
  p[1] /= static_cast<double>(f.dims->trees);
  return p;
}

// argmax label; the exact tie resolves to genuine, the costlier mistake being
// a false fraudster accusation.
inline int classify(const ForestView& f, std::span<const double> z_star) {
  const auto p = forest_prob(f, z_star);
  return p[1] > p[0] ? 1 : 0;
}

}  // namespace graphrfi
