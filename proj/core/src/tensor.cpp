#include "geocond/tensor.hpp"

#include <algorithm>

#include "geocond/errors.hpp"

namespace geocond {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw ValidationError("tensor extents must be positive");
    n *= static_cast<std::size_t>(e);
  }
  return shape.empty() ? 0 : n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  v.assign(shape_size(shape), 0.0f);
}

Tensor Tensor::full(std::vector<int> s, float value) {
  Tensor t(std::move(s));
  std::fill(t.v.begin(), t.v.end(), value);
  return t;
}

Tensor Tensor::randn(std::vector<int> s, Rng& rng, float stddev) {
  Tensor t(std::move(s));
  for (float& x : t.v) x = static_cast<float>(rng.normal()) * stddev;
  return t;
}

void Tensor::ensure_grad() {
  if (g.size() != v.size()) g.assign(v.size(), 0.0f);
}

void Tensor::zero_grad() {
  if (!g.empty()) std::fill(g.begin(), g.end(), 0.0f);
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace geocond
