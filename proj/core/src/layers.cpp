#include "geocond/layers.hpp"

#include <algorithm>
#include <cmath>

#include "geocond/errors.hpp"
#include "geocond/kernels.hpp"

namespace geocond {

namespace {

constexpr float kInitStd = 0.02f;  // DC-GAN weight initialization

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void check_4d(const Tensor& t, int channels, const std::string& who) {
  require(t.ndim() == 4, who + ": expected 4-D input, got " + t.shape_str());
  require(t.dim(1) == channels,
          who + ": expected " + std::to_string(channels) + " channels, got " + t.shape_str());
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_ch, int out_ch, Rng& init)
    : in_channels(in_ch),
      out_channels(out_ch),
      weight(Tensor::randn({out_ch, in_ch, 4, 4}, init, kInitStd)),
      bias(Tensor::zeros({out_ch})) {}

Tensor Conv2d::forward(const Tensor& in, bool) {
  check_4d(in, in_channels, "conv");
  const int H = in.dim(2), W = in.dim(3);
  require(H >= 4 && W >= 4 && H % 2 == 0 && W % 2 == 0,
          "conv: spatial extents must be even and >= 4, got " + in.shape_str());
  Tensor out({in.dim(0), out_channels, H / 2, W / 2});
  kernels::conv_forward(in.v.data(), weight.v.data(), bias.v.data(), out.v.data(), in.dim(0),
                        in_channels, H, W, out_channels);
  cached_in_ = in;
  forwarded_ = true;
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  require(forwarded_, "conv: backward before forward");
  forwarded_ = false;
  const int B = cached_in_.dim(0), H = cached_in_.dim(2), W = cached_in_.dim(3);
  require(grad_out.shape == std::vector<int>({B, out_channels, H / 2, W / 2}),
          "conv: gradient shape mismatch " + grad_out.shape_str());
  weight.ensure_grad();
  bias.ensure_grad();
  kernels::conv_grad_weight(cached_in_.v.data(), grad_out.v.data(), weight.g.data(),
                            bias.g.data(), B, in_channels, H, W, out_channels);
  Tensor gin({B, in_channels, H, W});
  kernels::conv_grad_input(grad_out.v.data(), weight.v.data(), gin.v.data(), B, in_channels, H,
                           W, out_channels);
  return gin;
}

void Conv2d::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                     std::vector<NamedTensor>& buffers) {
  (void)buffers;
  params.push_back({prefix + ".weight", &weight});
  params.push_back({prefix + ".bias", &bias});
}

std::string Conv2d::describe() const {
  return "conv " + std::to_string(in_channels) + "->" + std::to_string(out_channels) +
         " 4x4 s2 p1";
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_ch, int out_ch, Rng& init)
    : in_channels(in_ch),
      out_channels(out_ch),
      weight(Tensor::randn({in_ch, out_ch, 4, 4}, init, kInitStd)),
      bias(Tensor::zeros({out_ch})) {}

Tensor ConvTranspose2d::forward(const Tensor& in, bool) {
  check_4d(in, in_channels, "conv_transpose");
  const int H = in.dim(2), W = in.dim(3);
  const int OH = kernels::convt_out_extent(H), OW = kernels::convt_out_extent(W);
  Tensor out({in.dim(0), out_channels, OH, OW});
  // forward pass is the adjoint of Conv2d with the same weight buffer
  kernels::conv_grad_input(in.v.data(), weight.v.data(), out.v.data(), in.dim(0), out_channels,
                           OH, OW, in_channels);
  const std::size_t plane = static_cast<std::size_t>(OH) * OW;
  for (int b = 0; b < in.dim(0); ++b)
    for (int c = 0; c < out_channels; ++c) {
      float* dst = out.v.data() + (static_cast<std::size_t>(b) * out_channels + c) * plane;
      const float add = bias.v[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < plane; ++i) dst[i] += add;
    }
  cached_in_ = in;
  forwarded_ = true;
  return out;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  require(forwarded_, "conv_transpose: backward before forward");
  forwarded_ = false;
  const int B = cached_in_.dim(0), H = cached_in_.dim(2), W = cached_in_.dim(3);
  const int OH = kernels::convt_out_extent(H), OW = kernels::convt_out_extent(W);
  require(grad_out.shape == std::vector<int>({B, out_channels, OH, OW}),
          "conv_transpose: gradient shape mismatch " + grad_out.shape_str());
  weight.ensure_grad();
  bias.ensure_grad();
  kernels::conv_grad_weight(grad_out.v.data(), cached_in_.v.data(), weight.g.data(), nullptr, B,
                            out_channels, OH, OW, in_channels);
  const std::size_t plane = static_cast<std::size_t>(OH) * OW;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < out_channels; ++c) {
      const float* src =
          grad_out.v.data() + (static_cast<std::size_t>(b) * out_channels + c) * plane;
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += src[i];
      bias.g[static_cast<std::size_t>(c)] += static_cast<float>(s);
    }
  Tensor gin({B, in_channels, H, W});
  kernels::conv_forward(grad_out.v.data(), weight.v.data(), nullptr, gin.v.data(), B,
                        out_channels, OH, OW, in_channels);
  return gin;
}

void ConvTranspose2d::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                              std::vector<NamedTensor>& buffers) {
  (void)buffers;
  params.push_back({prefix + ".weight", &weight});
  params.push_back({prefix + ".bias", &bias});
}

std::string ConvTranspose2d::describe() const {
  return "conv_transpose " + std::to_string(in_channels) + "->" +
         std::to_string(out_channels) + " 4x4 s2 p1";
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int in_f, int out_f, Rng& init)
    : in_features(in_f),
      out_features(out_f),
      weight(Tensor::randn({in_f, out_f}, init, kInitStd)),
      bias(Tensor::zeros({out_f})) {}

Tensor Dense::forward(const Tensor& in, bool) {
  require(in.ndim() == 2 && in.dim(1) == in_features,
          "dense: expected [B," + std::to_string(in_features) + "], got " + in.shape_str());
  Tensor out({in.dim(0), out_features});
  kernels::dense_forward(in.v.data(), weight.v.data(), bias.v.data(), out.v.data(), in.dim(0),
                         in_features, out_features);
  cached_in_ = in;
  forwarded_ = true;
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  require(forwarded_, "dense: backward before forward");
  forwarded_ = false;
  const int B = cached_in_.dim(0);
  require(grad_out.shape == std::vector<int>({B, out_features}),
          "dense: gradient shape mismatch " + grad_out.shape_str());
  weight.ensure_grad();
  bias.ensure_grad();
  kernels::dense_grad_weight(cached_in_.v.data(), grad_out.v.data(), weight.g.data(),
                             bias.g.data(), B, in_features, out_features);
  Tensor gin({B, in_features});
  kernels::dense_grad_input(grad_out.v.data(), weight.v.data(), gin.v.data(), B, in_features,
                            out_features);
  return gin;
}

void Dense::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                    std::vector<NamedTensor>& buffers) {
  (void)buffers;
  params.push_back({prefix + ".weight", &weight});
  params.push_back({prefix + ".bias", &bias});
}

std::string Dense::describe() const {
  return "dense " + std::to_string(in_features) + "x" + std::to_string(out_features);
}

// ------------------------------------------------------------ Activation

Activation::Activation(LayerKind kind, float alpha) : kind_(kind), alpha_(alpha) {
  require(kind == LayerKind::LeakyRelu || kind == LayerKind::Relu || kind == LayerKind::Tanh ||
              kind == LayerKind::Sigmoid,
          "activation: unsupported kind");
}

Tensor Activation::forward(const Tensor& in, bool) {
  Tensor out(in.shape);
  switch (kind_) {
    case LayerKind::LeakyRelu:
      for (std::size_t i = 0; i < in.size(); ++i)
        out.v[i] = in.v[i] >= 0.0f ? in.v[i] : alpha_ * in.v[i];
      cached_ = in;  // input sign drives the derivative
      break;
    case LayerKind::Relu:
      for (std::size_t i = 0; i < in.size(); ++i) out.v[i] = in.v[i] >= 0.0f ? in.v[i] : 0.0f;
      cached_ = in;
      break;
    case LayerKind::Tanh:
      for (std::size_t i = 0; i < in.size(); ++i) out.v[i] = std::tanh(in.v[i]);
      cached_ = out;  // derivative 1 - y^2
      break;
    case LayerKind::Sigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) {
        const float x = in.v[i];
        out.v[i] = x >= 0.0f ? 1.0f / (1.0f + std::exp(-x))
                             : std::exp(x) / (1.0f + std::exp(x));
      }
      cached_ = out;  // derivative y(1 - y)
      break;
    default:
      break;
  }
  forwarded_ = true;
  return out;
}

Tensor Activation::backward(const Tensor& grad_out) {
  require(forwarded_, "activation: backward before forward");
  forwarded_ = false;
  require(grad_out.shape == cached_.shape, "activation: gradient shape mismatch");
  Tensor gin(grad_out.shape);
  switch (kind_) {
    case LayerKind::LeakyRelu:
      for (std::size_t i = 0; i < gin.size(); ++i)
        gin.v[i] = grad_out.v[i] * (cached_.v[i] >= 0.0f ? 1.0f : alpha_);
      break;
    case LayerKind::Relu:
      for (std::size_t i = 0; i < gin.size(); ++i)
        gin.v[i] = cached_.v[i] >= 0.0f ? grad_out.v[i] : 0.0f;
      break;
    case LayerKind::Tanh:
      for (std::size_t i = 0; i < gin.size(); ++i)
        gin.v[i] = grad_out.v[i] * (1.0f - cached_.v[i] * cached_.v[i]);
      break;
    case LayerKind::Sigmoid:
      for (std::size_t i = 0; i < gin.size(); ++i)
        gin.v[i] = grad_out.v[i] * cached_.v[i] * (1.0f - cached_.v[i]);
      break;
    default:
      break;
  }
  return gin;
}

std::string Activation::describe() const {
  switch (kind_) {
    case LayerKind::LeakyRelu:
      return "leaky_relu(" + std::to_string(alpha_) + ")";
    case LayerKind::Relu:
      return "relu";
    case LayerKind::Tanh:
      return "tanh";
    default:
      return "sigmoid";
  }
}

// ------------------------------------------------------------ BatchNorm2d

BatchNorm2d::BatchNorm2d(int ch, float e, float mom)
    : channels(ch),
      eps(e),
      momentum(mom),
      gamma(Tensor::full({ch}, 1.0f)),
      beta(Tensor::zeros({ch})),
      running_mean(Tensor::zeros({ch})),
      running_var(Tensor::full({ch}, 1.0f)) {}

Tensor BatchNorm2d::forward(const Tensor& in, bool training) {
  check_4d(in, channels, "batch_norm");
  const int B = in.dim(0), H = in.dim(2), W = in.dim(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t n = static_cast<std::size_t>(B) * plane;
  require(!training || n >= 2, "batch_norm: training requires at least 2 samples per channel");

  Tensor out(in.shape);
  in_shape_ = in.shape;
  inv_std_.assign(static_cast<std::size_t>(channels), 0.0f);
  trained_forward_ = training;

  if (training) {
    xhat_ = Tensor(in.shape);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
      double sum = 0.0;
      for (int b = 0; b < B; ++b) {
        const float* src = in.v.data() + (static_cast<std::size_t>(b) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += src[i];
      }
      const double mean = sum / static_cast<double>(n);
      double var_sum = 0.0;
      for (int b = 0; b < B; ++b) {
        const float* src = in.v.data() + (static_cast<std::size_t>(b) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = src[i] - mean;
          var_sum += d * d;
        }
      }
      const double var = var_sum / static_cast<double>(n);
      const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
      inv_std_[static_cast<std::size_t>(c)] = istd;
      const float g = gamma.v[static_cast<std::size_t>(c)], bt = beta.v[static_cast<std::size_t>(c)];
      const float mu = static_cast<float>(mean);
      for (int b = 0; b < B; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const float xh = (in.v[off + i] - mu) * istd;
          xhat_.v[off + i] = xh;
          out.v[off + i] = g * xh + bt;
        }
      }
      const double unbiased = var_sum / static_cast<double>(n - 1);
      running_mean.v[static_cast<std::size_t>(c)] =
          (1.0f - momentum) * running_mean.v[static_cast<std::size_t>(c)] +
          momentum * static_cast<float>(mean);
      running_var.v[static_cast<std::size_t>(c)] =
          (1.0f - momentum) * running_var.v[static_cast<std::size_t>(c)] +
          momentum * static_cast<float>(unbiased);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
      const float mu = running_mean.v[static_cast<std::size_t>(c)];
      const float istd =
          static_cast<float>(1.0 / std::sqrt(static_cast<double>(running_var.v[static_cast<std::size_t>(c)]) + eps));
      inv_std_[static_cast<std::size_t>(c)] = istd;
      const float g = gamma.v[static_cast<std::size_t>(c)], bt = beta.v[static_cast<std::size_t>(c)];
      for (int b = 0; b < B; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
          out.v[off + i] = g * (in.v[off + i] - mu) * istd + bt;
      }
    }
    cached_ = in;  // eval backward only needs gamma and inv_std
  }
  forwarded_ = true;
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  require(forwarded_, "batch_norm: backward before forward");
  forwarded_ = false;
  require(grad_out.shape == in_shape_, "batch_norm: gradient shape mismatch");
  const int B = in_shape_[0], H = in_shape_[2], W = in_shape_[3];
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t n = static_cast<std::size_t>(B) * plane;

  gamma.ensure_grad();
  beta.ensure_grad();
  Tensor gin(in_shape_);

#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const float g = gamma.v[static_cast<std::size_t>(c)];
    const float istd = inv_std_[static_cast<std::size_t>(c)];
    if (!trained_forward_) {
      // frozen statistics: a plain affine map
      double dbeta = 0.0;
      for (int b = 0; b < B; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          gin.v[off + i] = grad_out.v[off + i] * g * istd;
          dbeta += grad_out.v[off + i];
        }
      }
      beta.g[static_cast<std::size_t>(c)] += static_cast<float>(dbeta);
      // dgamma through the frozen normalization
      const float mu = running_mean.v[static_cast<std::size_t>(c)];
      double dgamma = 0.0;
      for (int b = 0; b < B; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
          dgamma += grad_out.v[off + i] * (cached_.v[off + i] - mu) * istd;
      }
      gamma.g[static_cast<std::size_t>(c)] += static_cast<float>(dgamma);
      continue;
    }
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < B; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += grad_out.v[off + i];
        sum_dy_xhat += grad_out.v[off + i] * xhat_.v[off + i];
      }
    }
    beta.g[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy);
    gamma.g[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy_xhat);
    const float mean_dy = static_cast<float>(sum_dy / static_cast<double>(n));
    const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / static_cast<double>(n));
    for (int b = 0; b < B; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i)
        gin.v[off + i] =
            g * istd * (grad_out.v[off + i] - mean_dy - xhat_.v[off + i] * mean_dy_xhat);
    }
  }
  return gin;
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                          std::vector<NamedTensor>& buffers) {
  params.push_back({prefix + ".gamma", &gamma});
  params.push_back({prefix + ".beta", &beta});
  buffers.push_back({prefix + ".running_mean", &running_mean});
  buffers.push_back({prefix + ".running_var", &running_var});
}

std::string BatchNorm2d::describe() const { return "batch_norm(" + std::to_string(channels) + ")"; }

// ---------------------------------------------------------------- Reshape

Reshape::Reshape(std::vector<int> t) : tail(std::move(t)) {}

Tensor Reshape::forward(const Tensor& in, bool) {
  std::vector<int> target{in.dim(0)};
  target.insert(target.end(), tail.begin(), tail.end());
  require(shape_size(target) == in.size(),
          "reshape: element count mismatch " + in.shape_str());
  cached_shape_ = in.shape;
  Tensor out = in;
  out.shape = target;
  out.g.clear();
  forwarded_ = true;
  return out;
}

Tensor Reshape::backward(const Tensor& grad_out) {
  require(forwarded_, "reshape: backward before forward");
  forwarded_ = false;
  Tensor gin = grad_out;
  gin.shape = cached_shape_;
  gin.g.clear();
  return gin;
}

std::string Reshape::describe() const {
  std::string s = "reshape to [B";
  for (int e : tail) s += "," + std::to_string(e);
  return s + "]";
}

// ---------------------------------------------------------------- Network

Tensor Network::forward(const Tensor& in, bool training) {
  require(!layers_.empty(), "network: empty layer stack");
  Tensor x = in;
  for (auto& layer : layers_) x = layer->forward(x, training);
  forwarded_ = true;
  return x;
}

Tensor Network::backward(const Tensor& grad_out) {
  require(forwarded_, "network: backward before forward");
  forwarded_ = false;
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<NamedTensor> Network::params() {
  std::vector<NamedTensor> params, buffers;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect(std::to_string(i), params, buffers);
  return params;
}

std::vector<NamedTensor> Network::buffers() {
  std::vector<NamedTensor> params, buffers;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect(std::to_string(i), params, buffers);
  return buffers;
}

void Network::zero_grad() {
  for (NamedTensor& p : params()) p.tensor->zero_grad();
}

std::string Network::describe() const {
  std::string s;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i) s += " | ";
    s += layers_[i]->describe();
  }
  return s;
}

}  // namespace geocond
