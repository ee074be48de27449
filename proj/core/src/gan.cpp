#include "geocond/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geocond/checkpoint.hpp"
#include "geocond/errors.hpp"
#include "json.hpp"

namespace geocond::gan {

namespace {

constexpr double kProbEps = 1e-7;

AdamHyper hyper_from(const GanConfig& c) {
  return AdamHyper{c.lr, c.beta1, c.beta2, 1e-8f};
}

void fill_real_batch(Tensor& batch, const std::vector<BinaryImage>& dataset,
                     const std::vector<std::size_t>& order, std::size_t first, int count) {
  const std::size_t pixels = dataset.front().pixel_count();
  for (int i = 0; i < count; ++i) {
    const BinaryImage& img = dataset[order[first + static_cast<std::size_t>(i)]];
    float* dst = batch.v.data() + static_cast<std::size_t>(i) * pixels;
    for (std::size_t p = 0; p < pixels; ++p) dst[p] = img.data[p] ? 1.0f : -1.0f;
  }
}

}  // namespace

double clamped_log(double x, double eps) { return std::log(std::max(x, eps)); }

void GanConfig::validate() const {
  if (image_size != 32 && image_size != 64 && image_size != 128)
    throw ValidationError("image_size must be one of 32, 64, 128; got " +
                          std::to_string(image_size));
  if (latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
  if (batch_size < 2) throw ValidationError("batch_size must be >= 2");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(lr > 0.0f)) throw ValidationError("learning rate must be positive");
  if (!(beta1 >= 0.0f && beta1 < 1.0f) || !(beta2 >= 0.0f && beta2 < 1.0f))
    throw ValidationError("Adam betas must lie in [0,1)");
}

GanModel build(const GanConfig& config) {
  config.validate();
  const int s = config.image_size / 16;
  const int flat = config.flat_features();
  const bool bn = config.batch_norm;

  Rng root(config.seed);
  Rng g_init = root.derive(1);
  Rng d_init = root.derive(2);

  GanModel model{config, {}, {}};

  model.g.add<Dense>(config.latent_dim, flat, g_init);
  model.g.add<Reshape>(std::vector<int>{32, s, s});
  if (bn) model.g.add<BatchNorm2d>(32);
  model.g.add<Activation>(LayerKind::Relu);
  model.g.add<ConvTranspose2d>(32, 256, g_init);
  if (bn) model.g.add<BatchNorm2d>(256);
  model.g.add<Activation>(LayerKind::Relu);
  model.g.add<ConvTranspose2d>(256, 128, g_init);
  if (bn) model.g.add<BatchNorm2d>(128);
  model.g.add<Activation>(LayerKind::Relu);
  model.g.add<ConvTranspose2d>(128, 64, g_init);
  if (bn) model.g.add<BatchNorm2d>(64);
  model.g.add<Activation>(LayerKind::Relu);
  model.g.add<ConvTranspose2d>(64, 1, g_init);
  model.g.add<Activation>(LayerKind::Tanh);

  model.d.add<Conv2d>(1, 64, d_init);
  model.d.add<Activation>(LayerKind::LeakyRelu, 0.2f);
  model.d.add<Conv2d>(64, 128, d_init);
  if (bn) model.d.add<BatchNorm2d>(128);
  model.d.add<Activation>(LayerKind::LeakyRelu, 0.2f);
  model.d.add<Conv2d>(128, 256, d_init);
  if (bn) model.d.add<BatchNorm2d>(256);
  model.d.add<Activation>(LayerKind::LeakyRelu, 0.2f);
  model.d.add<Conv2d>(256, 32, d_init);
  if (bn) model.d.add<BatchNorm2d>(32);
  model.d.add<Activation>(LayerKind::LeakyRelu, 0.2f);
  model.d.add<Reshape>(std::vector<int>{flat});
  model.d.add<Dense>(flat, 1, d_init);
  model.d.add<Activation>(LayerKind::Sigmoid);

  return model;
}

Tensor sample_latent(int count, int latent_dim, Rng& rng, double stddev) {
  Tensor z({count, latent_dim});
  for (float& x : z.v) x = static_cast<float>(rng.normal() * stddev);
  return z;
}

std::vector<RealImage> images_from_batch(const Tensor& out) {
  const int B = out.dim(0), H = out.dim(2), W = out.dim(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  std::vector<RealImage> images;
  images.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    std::vector<float> values(out.v.begin() + static_cast<long>(b * plane),
                              out.v.begin() + static_cast<long>((b + 1) * plane));
    images.emplace_back(H, W, std::move(values));
  }
  return images;
}

Trainer::Trainer(GanModel& model)
    : model_(model),
      opt_g_(model.g, hyper_from(model.config)),
      opt_d_(model.d, hyper_from(model.config)),
      root_(model.config.seed) {}

EpochSummary Trainer::train_epoch(const std::vector<BinaryImage>& dataset, int epoch) {
  const GanConfig& cfg = model_.config;
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  for (const BinaryImage& img : dataset)
    if (img.height != cfg.image_size || img.width != cfg.image_size)
      throw ValidationError("train: dataset image size does not match model (" +
                            std::to_string(img.height) + " vs " +
                            std::to_string(cfg.image_size) + ")");

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = root_.derive(0x100u + static_cast<std::uint64_t>(epoch));
  shuffle_rng.shuffle(order);
  Rng z_rng = root_.derive(0x200u + static_cast<std::uint64_t>(epoch));

  EpochSummary summary;
  summary.epoch = epoch;
  int batches = 0;

  for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
    const int B = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - first));
    if (B < 2) break;  // batch norm needs at least 2 samples

    // --- discriminator step: ascend log D(x) + log(1 - D(G(z)))
    model_.d.zero_grad();
    Tensor real({B, 1, cfg.image_size, cfg.image_size});
    fill_real_batch(real, dataset, order, first, B);
    Tensor d_real = model_.d.forward(real, true);

    double loss_real = 0.0;
    int correct_real = 0;
    Tensor grad_real({B, 1});
    for (int i = 0; i < B; ++i) {
      const double p = d_real.v[static_cast<std::size_t>(i)];
      loss_real -= clamped_log(p) / B;
      grad_real.v[static_cast<std::size_t>(i)] =
          p > kProbEps ? static_cast<float>(-1.0 / (B * p)) : 0.0f;
      correct_real += p > 0.5;
    }
    model_.d.backward(grad_real);

    Tensor z = sample_latent(B, cfg.latent_dim, z_rng);
    Tensor fake = model_.g.forward(z, true);
    Tensor d_fake = model_.d.forward(fake, true);

    double loss_fake = 0.0;
    int correct_fake = 0;
    Tensor grad_fake({B, 1});
    for (int i = 0; i < B; ++i) {
      const double p = d_fake.v[static_cast<std::size_t>(i)];
      loss_fake -= clamped_log(1.0 - p) / B;
      grad_fake.v[static_cast<std::size_t>(i)] =
          (1.0 - p) > kProbEps ? static_cast<float>(1.0 / (B * (1.0 - p))) : 0.0f;
      correct_fake += p < 0.5;
    }
    model_.d.backward(grad_fake);
    opt_d_.step();

    // --- generator step: descend -log D(G(z))
    model_.g.zero_grad();
    model_.d.zero_grad();
    Tensor z2 = sample_latent(B, cfg.latent_dim, z_rng);
    Tensor fake2 = model_.g.forward(z2, true);
    Tensor d_fake2 = model_.d.forward(fake2, true);

    double loss_g = 0.0;
    Tensor grad_g({B, 1});
    for (int i = 0; i < B; ++i) {
      const double p = d_fake2.v[static_cast<std::size_t>(i)];
      loss_g -= clamped_log(p) / B;
      grad_g.v[static_cast<std::size_t>(i)] =
          p > kProbEps ? static_cast<float>(-1.0 / (B * p)) : 0.0f;
    }
    Tensor grad_images = model_.d.backward(grad_g);
    model_.g.backward(grad_images);
    opt_g_.step();

    const double d_loss = loss_real + loss_fake;
    if (!std::isfinite(d_loss) || !std::isfinite(loss_g))
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                         std::to_string(batches) + ": d_real=" + std::to_string(loss_real) +
                         " d_fake=" + std::to_string(loss_fake) +
                         " g=" + std::to_string(loss_g));

    summary.d_loss += d_loss;
    summary.g_loss += loss_g;
    summary.acc_real += static_cast<double>(correct_real) / B;
    summary.acc_fake += static_cast<double>(correct_fake) / B;
    ++batches;
  }

  if (batches == 0) throw ValidationError("train: dataset smaller than one usable batch");
  summary.d_loss /= batches;
  summary.g_loss /= batches;
  summary.acc_real /= batches;
  summary.acc_fake /= batches;
  return summary;
}

std::vector<RealImage> sample(GanModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample: count must be >= 1");
  Rng rng(seed);
  Tensor all_z = sample_latent(count, model.config.latent_dim, rng);

  std::vector<RealImage> images;
  images.reserve(static_cast<std::size_t>(count));
  const int chunk = 64;
  for (int first = 0; first < count; first += chunk) {
    const int B = std::min(chunk, count - first);
    Tensor z({B, model.config.latent_dim});
    std::copy_n(all_z.v.begin() + static_cast<long>(first) * model.config.latent_dim,
                static_cast<std::size_t>(B) * model.config.latent_dim, z.v.begin());
    Tensor out = model.g.forward(z, false);
    for (RealImage& img : images_from_batch(out)) images.push_back(std::move(img));
  }
  return images;
}

std::vector<RealImage> traverse(GanModel& model, const std::vector<float>& z1,
                                const std::vector<float>& z2, int steps) {
  const int L = model.config.latent_dim;
  if (steps < 2) throw ValidationError("traverse: steps must be >= 2");
  if (z1.size() != static_cast<std::size_t>(L) || z2.size() != static_cast<std::size_t>(L))
    throw ValidationError("traverse: latent dimension mismatch");

  std::vector<RealImage> images;
  images.reserve(static_cast<std::size_t>(steps));
  const int chunk = 64;
  for (int first = 0; first < steps; first += chunk) {
    const int B = std::min(chunk, steps - first);
    Tensor z({B, L});
    for (int i = 0; i < B; ++i) {
      const int k = first + i;
      float* row = z.v.data() + static_cast<std::size_t>(i) * L;
      if (k == 0) {
        std::copy(z1.begin(), z1.end(), row);
      } else if (k == steps - 1) {
        std::copy(z2.begin(), z2.end(), row);
      } else {
        const float t = static_cast<float>(k) / static_cast<float>(steps - 1);
        for (int j = 0; j < L; ++j)
          row[j] = (1.0f - t) * z1[static_cast<std::size_t>(j)] +
                   t * z2[static_cast<std::size_t>(j)];
      }
    }
    Tensor out = model.g.forward(z, false);
    for (RealImage& img : images_from_batch(out)) images.push_back(std::move(img));
  }
  return images;
}

std::vector<double> discriminate(GanModel& model, const std::vector<RealImage>& images) {
  std::vector<double> probs;
  probs.reserve(images.size());
  const int n = model.config.image_size;
  const int chunk = 64;
  for (std::size_t first = 0; first < images.size(); first += chunk) {
    const int B = static_cast<int>(std::min<std::size_t>(chunk, images.size() - first));
    Tensor batch({B, 1, n, n});
    for (int i = 0; i < B; ++i) {
      const RealImage& img = images[first + static_cast<std::size_t>(i)];
      if (img.height != n || img.width != n)
        throw ValidationError("discriminate: image size mismatch");
      std::copy(img.data.begin(), img.data.end(),
                batch.v.begin() + static_cast<long>(i) * n * n);
    }
    Tensor out = model.d.forward(batch, false);
    for (int i = 0; i < B; ++i) probs.push_back(out.v[static_cast<std::size_t>(i)]);
  }
  return probs;
}

void save_model(GanModel& model, const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["batch_norm"] = model.config.batch_norm;
  meta["image_size"] = model.config.image_size;
  meta["latent_dim"] = model.config.latent_dim;
  meta["seed"] = model.config.seed;
  meta["tool"] = "geocond";
  meta["tool_version"] = kVersion;

  Checkpoint ckpt;
  ckpt.metadata = meta.dump();
  auto push_all = [&ckpt](Network& net, const std::string& prefix) {
    for (NamedTensor& p : net.params()) ckpt.tensors.emplace_back(prefix + p.name, *p.tensor);
    for (NamedTensor& b : net.buffers()) ckpt.tensors.emplace_back(prefix + b.name, *b.tensor);
  };
  push_all(model.g, "g.");
  push_all(model.d, "d.");
  write_checkpoint(ckpt, path);
}

GanModel load_model(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint metadata is not valid JSON: " + std::string(e.what()));
  }

  GanConfig config;
  try {
    config.image_size = meta.at("image_size").get<int>();
    config.latent_dim = meta.at("latent_dim").get<int>();
    config.batch_norm = meta.at("batch_norm").get<bool>();
    config.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint metadata missing fields: " + std::string(e.what()));
  }

  GanModel model = build(config);
  std::vector<std::pair<std::string, Tensor*>> expected;
  auto gather = [&expected](Network& net, const std::string& prefix) {
    for (NamedTensor& p : net.params()) expected.emplace_back(prefix + p.name, p.tensor);
    for (NamedTensor& b : net.buffers()) expected.emplace_back(prefix + b.name, b.tensor);
  };
  gather(model.g, "g.");
  gather(model.d, "d.");

  if (expected.size() != ckpt.tensors.size())
    throw ValidationError("checkpoint tensor count " + std::to_string(ckpt.tensors.size()) +
                          " does not match architecture (" + std::to_string(expected.size()) +
                          ")");
  for (auto& [name, target] : expected) {
    auto it = std::find_if(ckpt.tensors.begin(), ckpt.tensors.end(),
                           [&name](const auto& entry) { return entry.first == name; });
    if (it == ckpt.tensors.end())
      throw ValidationError("checkpoint is missing tensor " + name);
    if (it->second.shape != target->shape)
      throw ValidationError("checkpoint tensor " + name + " has shape " +
                            it->second.shape_str() + ", expected " + target->shape_str());
    target->v = it->second.v;
  }
  return model;
}

}  // namespace geocond::gan
