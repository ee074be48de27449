#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geocond/rng.hpp"
#include "geocond/tensor.hpp"

namespace geocond {

enum class LayerKind {
  Conv,
  ConvTranspose,
  Dense,
  LeakyRelu,
  Relu,
  Tanh,
  Sigmoid,
  BatchNorm,
  Reshape,
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

/// One step of a sequential network. forward() caches whatever backward()
/// needs; backward() accumulates parameter gradients and returns the
/// gradient with respect to the layer input.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual Tensor forward(const Tensor& in, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect(const std::string& prefix, std::vector<NamedTensor>& params,
                       std::vector<NamedTensor>& buffers) {
    (void)prefix, (void)params, (void)buffers;
  }
  virtual std::string describe() const = 0;
};

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, Rng& init);
  LayerKind kind() const override { return LayerKind::Conv; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) override;
  std::string describe() const override;

  int in_channels, out_channels;
  Tensor weight;  // [out,in,4,4]
  Tensor bias;    // [out]

 private:
  Tensor cached_in_;
  bool forwarded_ = false;
};

class ConvTranspose2d final : public Layer {
 public:
  ConvTranspose2d(int in_channels, int out_channels, Rng& init);
  LayerKind kind() const override { return LayerKind::ConvTranspose; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) override;
  std::string describe() const override;

  int in_channels, out_channels;
  Tensor weight;  // [in,out,4,4]; forward is the adjoint of Conv2d with this buffer
  Tensor bias;    // [out]

 private:
  Tensor cached_in_;
  bool forwarded_ = false;
};

class Dense final : public Layer {
 public:
  Dense(int in_features, int out_features, Rng& init);
  LayerKind kind() const override { return LayerKind::Dense; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) override;
  std::string describe() const override;

  int in_features, out_features;
  Tensor weight;  // [in,out]
  Tensor bias;    // [out]

 private:
  Tensor cached_in_;
  bool forwarded_ = false;
};

/// Elementwise nonlinearity. Tanh and Sigmoid differentiate through the
/// cached output; the ReLU family through the cached input sign.
class Activation final : public Layer {
 public:
  Activation(LayerKind kind, float alpha = 0.0f);
  LayerKind kind() const override { return kind_; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override;

  float alpha() const { return alpha_; }

 private:
  LayerKind kind_;
  float alpha_;
  Tensor cached_;
  bool forwarded_ = false;
};

class BatchNorm2d final : public Layer {
 public:
  explicit BatchNorm2d(int channels, float eps = 1e-5f, float momentum = 0.1f);
  LayerKind kind() const override { return LayerKind::BatchNorm; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) override;
  std::string describe() const override;

  int channels;
  float eps, momentum;
  Tensor gamma, beta;                  // parameters
  Tensor running_mean, running_var;    // buffers (eval statistics)

 private:
  Tensor xhat_;                 // cached normalized input (training path)
  Tensor cached_;               // cached raw input (eval path)
  std::vector<float> inv_std_;  // per channel
  std::vector<int> in_shape_;
  bool trained_forward_ = false;
  bool forwarded_ = false;
};

/// Reinterprets [B, ...] as [B, tail...]; element count per item must match.
class Reshape final : public Layer {
 public:
  explicit Reshape(std::vector<int> tail);
  LayerKind kind() const override { return LayerKind::Reshape; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override;

  std::vector<int> tail;

 private:
  std::vector<int> cached_shape_;
  bool forwarded_ = false;
};

/// Sequential stack with reverse-mode differentiation.
class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& in, bool training);
  /// Accumulates parameter gradients; returns the gradient at the network
  /// input. Throws if no forward pass is pending.
  Tensor backward(const Tensor& grad_out);

  std::vector<NamedTensor> params();
  std::vector<NamedTensor> buffers();
  void zero_grad();

  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  std::string describe() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  bool forwarded_ = false;
};

}  // namespace geocond
