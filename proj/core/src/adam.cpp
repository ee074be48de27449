#include "geocond/adam.hpp"

#include <cmath>

#include "geocond/errors.hpp"

namespace geocond {

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state) {
  if (params.size() != grads.size())
    throw ValidationError("adam: parameter/gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0f);
    state.v.assign(params.size(), 0.0f);
  }
  const AdamHyper& h = state.hyper;
  ++state.t;
  const double bc1 = 1.0 - std::pow(static_cast<double>(h.beta1), static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(static_cast<double>(h.beta2), static_cast<double>(state.t));

#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(params.size()); ++i) {
    const float g = grads[static_cast<std::size_t>(i)];
    float& m = state.m[static_cast<std::size_t>(i)];
    float& v = state.v[static_cast<std::size_t>(i)];
    m = h.beta1 * m + (1.0f - h.beta1) * g;
    v = h.beta2 * v + (1.0f - h.beta2) * g * g;
    const double mhat = static_cast<double>(m) / bc1;
    const double vhat = static_cast<double>(v) / bc2;
    params[static_cast<std::size_t>(i)] -=
        static_cast<float>(h.lr * mhat / (std::sqrt(vhat) + h.eps));
  }
}

NetOptimizer::NetOptimizer(Network& net, AdamHyper hyper) : params_(net.params()) {
  states_.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) states_.emplace_back(hyper);
}

void NetOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = *params_[i].tensor;
    if (!t.has_grad()) continue;  // untouched by this backward pass
    adam_step(t.v, t.g, states_[i]);
  }
}

}  // namespace geocond
