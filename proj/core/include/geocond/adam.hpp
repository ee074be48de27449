#pragma once

#include <span>
#include <vector>

#include "geocond/layers.hpp"

namespace geocond {

struct AdamHyper {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Per-parameter-buffer Adam state (step count and moment buffers).
struct AdamState {
  AdamHyper hyper;
  long t = 0;
  std::vector<float> m, v;

  explicit AdamState(AdamHyper h = {}) : hyper(h) {}
};

/// Bias-corrected Adam update in place; increments state.t. Moment buffers
/// are sized on first use.
void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state);

/// Adam over every parameter tensor of a network.
class NetOptimizer {
 public:
  NetOptimizer(Network& net, AdamHyper hyper);
  /// One update from the gradients currently accumulated in the network.
  void step();

 private:
  std::vector<NamedTensor> params_;
  std::vector<AdamState> states_;
};

}  // namespace geocond
