#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geocond/rng.hpp"

namespace geocond {

/// Dense row-major float32 tensor with an optional same-shape gradient
/// buffer. 4-D tensors are (batch, channels, height, width); 2-D are
/// (batch, features).
struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;  // values
  std::vector<float> g;  // gradient, empty until ensure_grad()

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, float value);
  static Tensor randn(std::vector<int> s, Rng& rng, float stddev = 1.0f);

  std::size_t size() const { return v.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  void ensure_grad();
  void zero_grad();
  bool has_grad() const { return !g.empty(); }

  std::string shape_str() const;
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::size_t shape_size(const std::vector<int>& shape);

}  // namespace geocond
