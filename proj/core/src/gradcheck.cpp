#include "geocond/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "geocond/errors.hpp"
#include "geocond/gan.hpp"
#include "geocond/kernels.hpp"

namespace geocond::gradcheck {

namespace ref {

std::vector<double> conv2d(const std::vector<double>& in, const std::vector<double>& w,
                           const std::vector<double>& bias, int B, int Ci, int H, int W,
                           int Co) {
  const int OH = H / 2, OW = W / 2;
  std::vector<double> out(static_cast<std::size_t>(B) * Co * OH * OW, 0.0);
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < Ci; ++ci)
            for (int u = 0; u < 4; ++u)
              for (int v = 0; v < 4; ++v) {
                const int ih = 2 * oh + u - 1, iw = 2 * ow + v - 1;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += in[((static_cast<std::size_t>(b) * Ci + ci) * H + ih) * W + iw] *
                       w[((static_cast<std::size_t>(co) * Ci + ci) * 4 + u) * 4 + v];
              }
          out[((static_cast<std::size_t>(b) * Co + co) * OH + oh) * OW + ow] = acc;
        }
  return out;
}

std::vector<double> conv_transpose2d(const std::vector<double>& in, const std::vector<double>& w,
                                     const std::vector<double>& bias, int B, int Ci, int H,
                                     int W, int Co) {
  const int OH = 2 * H, OW = 2 * W;
  std::vector<double> out(static_cast<std::size_t>(B) * Co * OH * OW, 0.0);
  if (!bias.empty())
    for (int b = 0; b < B; ++b)
      for (int co = 0; co < Co; ++co)
        std::fill_n(out.begin() + ((static_cast<std::size_t>(b) * Co + co) * OH) * OW,
                    static_cast<std::size_t>(OH) * OW, bias[static_cast<std::size_t>(co)]);
  for (int b = 0; b < B; ++b)
    for (int ci = 0; ci < Ci; ++ci)
      for (int h = 0; h < H; ++h)
        for (int wd = 0; wd < W; ++wd) {
          const double x = in[((static_cast<std::size_t>(b) * Ci + ci) * H + h) * W + wd];
          for (int co = 0; co < Co; ++co)
            for (int u = 0; u < 4; ++u)
              for (int v = 0; v < 4; ++v) {
                const int oh = 2 * h + u - 1, ow = 2 * wd + v - 1;
                if (oh < 0 || oh >= OH || ow < 0 || ow >= OW) continue;
                out[((static_cast<std::size_t>(b) * Co + co) * OH + oh) * OW + ow] +=
                    x * w[((static_cast<std::size_t>(ci) * Co + co) * 4 + u) * 4 + v];
              }
        }
  return out;
}

std::vector<double> dense(const std::vector<double>& in, const std::vector<double>& w,
                          const std::vector<double>& bias, int B, int F, int G) {
  std::vector<double> out(static_cast<std::size_t>(B) * G, 0.0);
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < G; ++g) {
      double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(g)];
      for (int f = 0; f < F; ++f)
        acc += in[static_cast<std::size_t>(b) * F + f] * w[static_cast<std::size_t>(f) * G + g];
      out[static_cast<std::size_t>(b) * G + g] = acc;
    }
  return out;
}

namespace {

std::vector<double> promote(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

std::vector<double> batch_norm(const std::vector<double>& in, const BatchNorm2d& bn,
                               int B, int C, int H, int W, bool training) {
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t n = static_cast<std::size_t>(B) * plane;
  std::vector<double> out(in.size());
  for (int c = 0; c < C; ++c) {
    double mean, var;
    if (training) {
      double sum = 0.0;
      for (int b = 0; b < B; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += in[off + i];
      }
      mean = sum / static_cast<double>(n);
      double vs = 0.0;
      for (int b = 0; b < B; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) vs += (in[off + i] - mean) * (in[off + i] - mean);
      }
      var = vs / static_cast<double>(n);
    } else {
      mean = bn.running_mean.v[static_cast<std::size_t>(c)];
      var = bn.running_var.v[static_cast<std::size_t>(c)];
    }
    const double istd = 1.0 / std::sqrt(var + bn.eps);
    const double g = bn.gamma.v[static_cast<std::size_t>(c)];
    const double bt = bn.beta.v[static_cast<std::size_t>(c)];
    for (int b = 0; b < B; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) out[off + i] = g * (in[off + i] - mean) * istd + bt;
    }
  }
  return out;
}

}  // namespace

std::vector<double> forward_network(const Network& net, std::vector<double> x,
                                    std::vector<int> shape, bool training) {
  for (const auto& layer : net.layers()) {
    if (const auto* conv = dynamic_cast<const Conv2d*>(layer.get())) {
      const int B = shape[0], H = shape[2], W = shape[3];
      x = conv2d(x, promote(conv->weight.v), promote(conv->bias.v), B, conv->in_channels, H, W,
                 conv->out_channels);
      shape = {B, conv->out_channels, H / 2, W / 2};
    } else if (const auto* convt = dynamic_cast<const ConvTranspose2d*>(layer.get())) {
      const int B = shape[0], H = shape[2], W = shape[3];
      x = conv_transpose2d(x, promote(convt->weight.v), promote(convt->bias.v), B,
                           convt->in_channels, H, W, convt->out_channels);
      shape = {B, convt->out_channels, 2 * H, 2 * W};
    } else if (const auto* fc = dynamic_cast<const Dense*>(layer.get())) {
      const int B = shape[0];
      x = dense(x, promote(fc->weight.v), promote(fc->bias.v), B, fc->in_features,
                fc->out_features);
      shape = {B, fc->out_features};
    } else if (const auto* act = dynamic_cast<const Activation*>(layer.get())) {
      switch (act->kind()) {
        case LayerKind::LeakyRelu:
          for (double& v : x) v = v >= 0.0 ? v : act->alpha() * v;
          break;
        case LayerKind::Relu:
          for (double& v : x) v = v >= 0.0 ? v : 0.0;
          break;
        case LayerKind::Tanh:
          for (double& v : x) v = std::tanh(v);
          break;
        default:
          for (double& v : x) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                           : std::exp(v) / (1.0 + std::exp(v));
          break;
      }
    } else if (const auto* bn = dynamic_cast<const BatchNorm2d*>(layer.get())) {
      x = batch_norm(x, *bn, shape[0], shape[1], shape[2], shape[3], training);
    } else if (const auto* rs = dynamic_cast<const Reshape*>(layer.get())) {
      shape = {shape[0]};
      for (int e : rs->tail) shape.push_back(e);
    } else {
      throw ValidationError("reference walker: unsupported layer kind");
    }
  }
  return x;
}

}  // namespace ref

namespace {

constexpr double kStep = 1e-3;

void randomize(Tensor& t, Rng& rng, double stddev) {
  for (float& v : t.v) v = static_cast<float>(rng.normal() * stddev);
}

/// Inputs nudged away from 0 so finite differences never straddle the
/// ReLU-family kink.
Tensor kink_safe_input(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (float& v : t.v) {
    double x = rng.normal();
    x += x >= 0.0 ? 0.05 : -0.05;
    v = static_cast<float>(x);
  }
  return t;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-2});
}

/// A fixed random linear functional of the network output makes every
/// gradient path observable through a scalar loss.
struct Probe {
  Network& net;
  Tensor input;
  Tensor direction;  // loss = sum(direction * output)
  bool training;

  double ref_loss() const {
    std::vector<double> y = ref::forward_network(
        net, std::vector<double>(input.v.begin(), input.v.end()), input.shape, training);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) loss += direction.v[i] * y[i];
    return loss;
  }
};

/// Max relative error between implementation gradients and central finite
/// differences over the chosen coordinates of `target`.
double check_coords(Probe& probe, std::vector<float>& target, const std::vector<float>& grads,
                    std::vector<std::size_t> coords) {
  double worst = 0.0;
  for (std::size_t idx : coords) {
    const float orig = target[idx];
    target[idx] = orig + static_cast<float>(kStep);
    const double xp = target[idx];
    const double lp = probe.ref_loss();
    target[idx] = orig - static_cast<float>(kStep);
    const double xm = target[idx];
    const double lm = probe.ref_loss();
    target[idx] = orig;
    const double fd = (lp - lm) / (xp - xm);
    worst = std::max(worst, rel_err(grads[idx], fd));
  }
  return worst;
}

std::vector<std::size_t> pick_coords(std::size_t size, std::size_t want, Rng& rng) {
  want = std::min(want, size);
  std::vector<std::size_t> coords;
  for (std::size_t i = 0; i < want; ++i)
    coords.push_back(static_cast<std::size_t>(rng.uniform_index(size)));
  return coords;
}

CheckResult check_network(const std::string& name, Network& net, Tensor input, bool training,
                          double tolerance, Rng& rng) {
  Tensor out = net.forward(input, training);
  Tensor direction(out.shape);
  randomize(direction, rng, 1.0);

  net.zero_grad();
  // re-run forward so cached activations match the probe exactly
  out = net.forward(input, training);
  Tensor input_grad = net.backward(direction);

  Probe probe{net, input, direction, training};
  double worst = check_coords(probe, probe.input.v, input_grad.v,
                              pick_coords(probe.input.size(), 24, rng));
  for (NamedTensor& p : net.params()) {
    const std::size_t coords = p.tensor->size() <= 16 ? p.tensor->size() : 12;
    worst = std::max(worst, check_coords(probe, p.tensor->v, p.tensor->g,
                                         pick_coords(p.tensor->size(), coords, rng)));
  }
  return CheckResult{name, worst, tolerance, worst < tolerance};
}

CheckResult check_adjoint(Rng& rng) {
  const int B = 2, Ci = 3, H = 8, W = 8, Co = 4;
  Tensor x({B, Ci, H, W}), y({B, Co, H / 2, W / 2}), w({Co, Ci, 4, 4});
  randomize(x, rng, 1.0);
  randomize(y, rng, 1.0);
  randomize(w, rng, 0.5);

  Tensor cx({B, Co, H / 2, W / 2});
  kernels::conv_forward(x.v.data(), w.v.data(), nullptr, cx.v.data(), B, Ci, H, W, Co);
  Tensor ty({B, Ci, H, W});
  kernels::conv_grad_input(y.v.data(), w.v.data(), ty.v.data(), B, Ci, H, W, Co);

  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < cx.size(); ++i) lhs += static_cast<double>(cx.v[i]) * y.v[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += static_cast<double>(x.v[i]) * ty.v[i];
  const double err = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-6});
  return CheckResult{"conv/conv_transpose adjoint identity", err, 1e-4, err < 1e-4};
}

}  // namespace

std::vector<CheckResult> run_suite(double tolerance) {
  Rng rng(0xC0FFEEu);
  std::vector<CheckResult> results;

  {
    Network net;
    Conv2d& conv = net.add<Conv2d>(2, 3, rng);
    randomize(conv.weight, rng, 0.4);
    results.push_back(
        check_network("conv2d", net, kink_safe_input({2, 2, 8, 8}, rng), false, tolerance, rng));
  }
  {
    Network net;
    ConvTranspose2d& convt = net.add<ConvTranspose2d>(3, 2, rng);
    randomize(convt.weight, rng, 0.4);
    results.push_back(check_network("conv_transpose2d", net, kink_safe_input({2, 3, 4, 4}, rng),
                                    false, tolerance, rng));
  }
  {
    Network net;
    Dense& fc = net.add<Dense>(7, 5, rng);
    randomize(fc.weight, rng, 0.4);
    results.push_back(
        check_network("dense", net, kink_safe_input({3, 7}, rng), false, tolerance, rng));
  }
  {
    Network net;
    net.add<Activation>(LayerKind::LeakyRelu, 0.2f);
    results.push_back(check_network("leaky_relu(0.2)", net, kink_safe_input({2, 2, 6, 6}, rng),
                                    false, tolerance, rng));
  }
  {
    Network net;
    net.add<Activation>(LayerKind::Relu);
    results.push_back(
        check_network("relu", net, kink_safe_input({2, 2, 6, 6}, rng), false, tolerance, rng));
  }
  {
    Network net;
    net.add<Activation>(LayerKind::Tanh);
    results.push_back(
        check_network("tanh", net, kink_safe_input({2, 2, 6, 6}, rng), false, tolerance, rng));
  }
  {
    Network net;
    net.add<Activation>(LayerKind::Sigmoid);
    results.push_back(
        check_network("sigmoid", net, kink_safe_input({2, 2, 6, 6}, rng), false, tolerance, rng));
  }
  {
    Network net;
    net.add<BatchNorm2d>(3);
    auto params = net.params();
    randomize(*params[0].tensor, rng, 0.5);  // gamma
    randomize(*params[1].tensor, rng, 0.5);  // beta
    results.push_back(check_network("batch_norm (batch statistics)", net,
                                    kink_safe_input({3, 3, 4, 4}, rng), true, tolerance, rng));
  }
  {
    Network net;
    BatchNorm2d& bn = net.add<BatchNorm2d>(3);
    randomize(bn.gamma, rng, 0.5);
    randomize(bn.running_mean, rng, 0.3);
    for (float& v : bn.running_var.v) v = static_cast<float>(0.5 + rng.uniform());
    results.push_back(check_network("batch_norm (frozen statistics)", net,
                                    kink_safe_input({2, 3, 4, 4}, rng), false, tolerance, rng));
  }
  {
    // composed discriminator(generator(z)) on the n=32 architecture
    gan::GanConfig config;
    config.image_size = 32;
    config.batch_norm = true;
    config.seed = 7;
    // the natural initialization keeps the sigmoid unsaturated and
    // pre-activations clear of the ReLU kinks the step could straddle
    gan::GanModel model = gan::build(config);
    Network& g = model.g;
    Network& d = model.d;
    Tensor z = kink_safe_input({1, config.latent_dim}, rng);

    Tensor img = g.forward(z, false);
    Tensor prob = d.forward(img, false);
    Tensor direction(prob.shape);
    randomize(direction, rng, 1.0);

    g.zero_grad();
    d.zero_grad();
    img = g.forward(z, false);
    prob = d.forward(img, false);
    Tensor img_grad = d.backward(direction);
    Tensor z_grad = g.backward(img_grad);

    auto composed_ref = [&](const Tensor& zin) {
      std::vector<double> y = ref::forward_network(
          g, std::vector<double>(zin.v.begin(), zin.v.end()), zin.shape, false);
      y = ref::forward_network(d, y, {1, 1, 32, 32}, false);
      double loss = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) loss += direction.v[i] * y[i];
      return loss;
    };

    double worst = 0.0;
    for (std::size_t idx : pick_coords(z.size(), 10, rng)) {
      const float orig = z.v[idx];
      z.v[idx] = orig + static_cast<float>(kStep);
      const double xp = z.v[idx], lp = composed_ref(z);
      z.v[idx] = orig - static_cast<float>(kStep);
      const double xm = z.v[idx], lm = composed_ref(z);
      z.v[idx] = orig;
      worst = std::max(worst, rel_err(z_grad.v[idx], (lp - lm) / (xp - xm)));
    }
    // 10 parameter coordinates drawn uniformly over the flattened
    // parameter space of both networks
    std::vector<NamedTensor> all = g.params();
    for (NamedTensor& p : d.params()) all.push_back(p);
    std::size_t total = 0;
    for (NamedTensor& p : all) total += p.tensor->size();
    for (int pick = 0; pick < 10; ++pick) {
      std::size_t flat = static_cast<std::size_t>(rng.uniform_index(total));
      std::size_t which = 0;
      while (flat >= all[which].tensor->size()) flat -= all[which++].tensor->size();
      Tensor& t = *all[which].tensor;
      const std::size_t idx = flat;
      const float orig = t.v[idx];
      t.v[idx] = orig + static_cast<float>(kStep);
      const double xp = t.v[idx], lp = composed_ref(z);
      t.v[idx] = orig - static_cast<float>(kStep);
      const double xm = t.v[idx], lm = composed_ref(z);
      t.v[idx] = orig;
      worst = std::max(worst, rel_err(t.g[idx], (lp - lm) / (xp - xm)));
    }
    results.push_back(
        CheckResult{"composed D(G(z)) graph", worst, tolerance, worst < tolerance});
  }
  results.push_back(check_adjoint(rng));
  return results;
}

}  // namespace gradcheck
