#include "geocond/inpaint.hpp"

#include <algorithm>
#include <cmath>

#include "geocond/adam.hpp"
#include "geocond/errors.hpp"

namespace geocond::inpaint {

namespace {

constexpr double kProbEps = 1e-7;

double row_context(const float* img, const ExpandedMask& mask) {
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.weights.size(); ++i) {
    const float w = mask.weights[i];
    if (w > 0.0f) sum += static_cast<double>(w) * std::abs(static_cast<double>(img[i]) - mask.targets[i]);
  }
  return sum;
}

void row_context_grad(const float* img, const ExpandedMask& mask, float* grad) {
  for (std::size_t i = 0; i < mask.weights.size(); ++i) {
    const float w = mask.weights[i];
    if (w <= 0.0f) continue;
    const float diff = img[i] - mask.targets[i];
    grad[i] = diff > 0.0f ? w : (diff < 0.0f ? -w : 0.0f);
  }
}

double prior_grad_wrt_d(double d) {
  return (d > kProbEps && d < 1.0 - kProbEps) ? -1.0 / (1.0 - d) : 0.0;
}

}  // namespace

void InpaintConfig::validate() const {
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  if (!(lr > 0.0f)) throw ValidationError("inpaint learning rate must be positive");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
  if (radius < 0 && radius != kRadiusAuto)
    throw ValidationError("radius must be >= 0 or auto");
  if (!(beta1 >= 0.0f && beta1 < 1.0f) || !(beta2 >= 0.0f && beta2 < 1.0f))
    throw ValidationError("Adam betas must lie in [0,1)");
}

int auto_radius(int m) {
  if (m < 1) throw ValidationError("auto_radius needs at least one measurement");
  if (m <= 10) return 10;
  if (m <= 20) return 7;
  if (m <= 50) return 5;
  return 1;
}

ExpandedMask expand_mask(const MeasurementSet& measurements, int radius, int height, int width) {
  if (radius < 0) throw ValidationError("expand_mask radius must be >= 0");
  measurements.check_bounds(height, width);

  ExpandedMask mask;
  mask.height = height;
  mask.width = width;
  mask.radius = radius;
  mask.source = measurements;
  mask.weights.assign(static_cast<std::size_t>(height) * width, 0.0f);
  mask.targets.assign(static_cast<std::size_t>(height) * width, 0.0f);

  for (const Measurement& m : measurements.items()) {
    for (int di = -radius; di <= radius; ++di) {
      for (int dj = -radius; dj <= radius; ++dj) {
        const int d2 = di * di + dj * dj;
        if (d2 > radius * radius) continue;
        const int r = m.row + di, c = m.col + dj;
        if (r < 0 || r >= height || c < 0 || c >= width) continue;
        const float w = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d2) + 1.0));
        const std::size_t idx = static_cast<std::size_t>(r) * width + c;
        if (w > mask.weights[idx]) {  // strict: earliest measurement wins ties
          mask.weights[idx] = w;
          mask.targets[idx] = encode_rock(m.rock);
        }
      }
    }
  }
  return mask;
}

double context_loss(const RealImage& img, const ExpandedMask& mask) {
  if (img.height != mask.height || img.width != mask.width)
    throw ValidationError("context_loss: image and mask dimensions disagree");
  return row_context(img.data.data(), mask);
}

Tensor GanLatentModel::generate(const Tensor& z) { return model_.g.forward(z, false); }

Tensor GanLatentModel::discriminate(const Tensor& images) {
  return model_.d.forward(images, false);
}

Tensor GanLatentModel::latent_grad(const Tensor& grad_images, const Tensor& grad_d) {
  // weights are frozen during conditioning; their accumulated gradients are
  // discarded every step
  model_.g.zero_grad();
  model_.d.zero_grad();
  Tensor img_grad = model_.d.backward(grad_d);
  if (img_grad.shape != grad_images.shape)
    throw ValidationError("latent_grad: image gradient shape mismatch");
  for (std::size_t i = 0; i < img_grad.size(); ++i) img_grad.v[i] += grad_images.v[i];
  return model_.g.backward(img_grad);
}

double prior_loss_value(double d, double eps) {
  return std::log(1.0 - std::clamp(d, eps, 1.0 - eps));
}

double prior_loss(LatentImageModel& model, const std::vector<float>& z) {
  if (z.size() != static_cast<std::size_t>(model.latent_dim()))
    throw ValidationError("prior_loss: latent dimension mismatch");
  Tensor zt({1, model.latent_dim()});
  std::copy(z.begin(), z.end(), zt.v.begin());
  Tensor img = model.generate(zt);
  Tensor d = model.discriminate(img);
  return prior_loss_value(d.v[0]);
}

TotalLoss total_loss(LatentImageModel& model, const std::vector<float>& z,
                     const ExpandedMask& mask, double lambda) {
  if (z.size() != static_cast<std::size_t>(model.latent_dim()))
    throw ValidationError("total_loss: latent dimension mismatch");
  if (mask.height != model.height() || mask.width != model.width())
    throw ValidationError("total_loss: mask and model grids disagree");

  Tensor zt({1, model.latent_dim()});
  std::copy(z.begin(), z.end(), zt.v.begin());
  Tensor img = model.generate(zt);
  Tensor d = model.discriminate(img);

  TotalLoss out;
  out.context = row_context(img.v.data(), mask);
  out.prior = prior_loss_value(d.v[0]);
  out.total = out.context + lambda * out.prior;
  if (!std::isfinite(out.total))
    throw NumericError("total_loss is not finite: context=" + std::to_string(out.context) +
                       " prior=" + std::to_string(out.prior));

  Tensor grad_img(img.shape);
  row_context_grad(img.v.data(), mask, grad_img.v.data());
  Tensor grad_d(d.shape);
  grad_d.v[0] = static_cast<float>(lambda * prior_grad_wrt_d(d.v[0]));
  Tensor gz = model.latent_grad(grad_img, grad_d);
  out.grad_z = std::move(gz.v);
  return out;
}

double honor_rate(const RealImage& image, const MeasurementSet& measurements) {
  if (measurements.empty()) throw ValidationError("honor_rate: empty measurement set");
  measurements.check_bounds(image.height, image.width);
  const BinaryImage labels = threshold(image);
  std::size_t honored = 0;
  for (const Measurement& m : measurements.items())
    honored += labels.at(m.row, m.col) == m.rock;
  return static_cast<double>(honored) / static_cast<double>(measurements.count());
}

std::vector<Realization> condition(LatentImageModel& model, const MeasurementSet& measurements,
                                   const InpaintConfig& config) {
  config.validate();
  if (measurements.empty()) throw ValidationError("condition: empty measurement set");
  const int H = model.height(), W = model.width(), L = model.latent_dim();
  measurements.check_bounds(H, W);

  const int radius = config.radius == kRadiusAuto
                         ? auto_radius(static_cast<int>(measurements.count()))
                         : config.radius;
  const ExpandedMask mask = expand_mask(measurements, radius, H, W);

  const int k = config.restarts;
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  // restart i always starts from stream derive(seed, i)
  Tensor z({k, L});
  const Rng base(config.seed);
  for (int r = 0; r < k; ++r) {
    Rng stream = base.derive(static_cast<std::uint64_t>(r));
    for (int j = 0; j < L; ++j)
      z.v[static_cast<std::size_t>(r) * L + j] = static_cast<float>(stream.normal());
  }

  AdamState state(AdamHyper{config.lr, config.beta1, config.beta2, 1e-8f});
  std::vector<double> ctx(static_cast<std::size_t>(k)), prior(static_cast<std::size_t>(k)),
      total(static_cast<std::size_t>(k));

  auto eval_losses = [&](const Tensor& imgs, const Tensor& d) {
    for (int r = 0; r < k; ++r) {
      ctx[static_cast<std::size_t>(r)] =
          row_context(imgs.v.data() + static_cast<std::size_t>(r) * plane, mask);
      prior[static_cast<std::size_t>(r)] = prior_loss_value(d.v[static_cast<std::size_t>(r)]);
      total[static_cast<std::size_t>(r)] =
          ctx[static_cast<std::size_t>(r)] + config.lambda * prior[static_cast<std::size_t>(r)];
      if (!std::isfinite(total[static_cast<std::size_t>(r)]))
        throw NumericError("condition: non-finite loss in restart " + std::to_string(r) +
                           ": context=" + std::to_string(ctx[static_cast<std::size_t>(r)]) +
                           " prior=" + std::to_string(prior[static_cast<std::size_t>(r)]));
    }
  };

  for (int it = 0; it < config.iterations; ++it) {
    Tensor imgs = model.generate(z);
    Tensor d = model.discriminate(imgs);
    eval_losses(imgs, d);

    Tensor grad_imgs(imgs.shape);
    Tensor grad_d(d.shape);
    for (int r = 0; r < k; ++r) {
      row_context_grad(imgs.v.data() + static_cast<std::size_t>(r) * plane, mask,
                       grad_imgs.v.data() + static_cast<std::size_t>(r) * plane);
      grad_d.v[static_cast<std::size_t>(r)] = static_cast<float>(
          config.lambda * prior_grad_wrt_d(d.v[static_cast<std::size_t>(r)]));
    }
    Tensor gz = model.latent_grad(grad_imgs, grad_d);
    adam_step(z.v, gz.v, state);
  }

  Tensor imgs = model.generate(z);
  Tensor d = model.discriminate(imgs);
  eval_losses(imgs, d);

  std::vector<Realization> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    Realization real;
    std::vector<float> pixels(imgs.v.begin() + static_cast<long>(r) * static_cast<long>(plane),
                              imgs.v.begin() + static_cast<long>(r + 1) * static_cast<long>(plane));
    real.image = RealImage(H, W, std::move(pixels));
    real.latent.assign(z.v.begin() + static_cast<long>(r) * L,
                       z.v.begin() + static_cast<long>(r + 1) * L);
    real.total_loss = total[static_cast<std::size_t>(r)];
    real.context_loss = ctx[static_cast<std::size_t>(r)];
    real.prior_loss = prior[static_cast<std::size_t>(r)];
    real.honor_rate = honor_rate(real.image, measurements);
    real.restart_index = r;
    out.push_back(std::move(real));
  }
  std::stable_sort(out.begin(), out.end(), [](const Realization& a, const Realization& b) {
    return a.total_loss < b.total_loss;
  });
  return out;
}

}  // namespace geocond::inpaint
