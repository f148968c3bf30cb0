#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "graphrfi/errors.hpp"
#include "graphrfi/rng.hpp"

namespace graphrfi {

// Dense row-major matrix of doubles; vectors are cols == 1.
struct Tensor {
  std::vector<double> v;
  int rows = 0;
  int cols = 1;

  Tensor() = default;
  Tensor(int r, int c) : v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0), rows(r), cols(c) {}

  std::size_t size() const { return v.size(); }
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }

  void fill_gaussian(Rng& rng, double stddev) {
    for (auto& x : v) x = rng.normal(0.0, stddev);
  }
  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// Named tensors in a fixed order; the order defines checkpoint layout,
// gradient layout, and optimizer state alignment.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  int add(const std::string& name, int rows, int cols) {
    names.push_back(name);
    tensors.emplace_back(rows, cols);
    return static_cast<int>(tensors.size()) - 1;
  }
  int find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw ValidationError("unknown tensor name: " + name);
  }
  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

// Gradient buffers aligned with a ParamStore.
struct Grads {
  std::vector<Tensor> tensors;

  explicit Grads(const ParamStore& ps) {
    tensors.reserve(ps.tensors.size());
    for (const auto& t : ps.tensors) tensors.emplace_back(t.rows, t.cols);
  }
  void zero() {
    for (auto& t : tensors) std::fill(t.v.begin(), t.v.end(), 0.0);
  }
};

}  // namespace graphrfi
