#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "geocond/adam.hpp"
#include "geocond/image.hpp"
#include "geocond/layers.hpp"

namespace geocond::gan {

struct GanConfig {
  int image_size = 64;    // n, one of {32, 64, 128}
  int latent_dim = 100;
  int batch_size = 64;
  int epochs = 500;
  float lr = 1e-4f;
  float beta1 = 0.0f;
  float beta2 = 0.9f;
  bool batch_norm = true;
  std::uint64_t seed = 0;

  void validate() const;  // throws ValidationError
  /// Flattened feature count between the conv stack and the dense head:
  /// 32 * (n/16)^2 (2048 at n = 128).
  int flat_features() const { return 32 * (image_size / 16) * (image_size / 16); }
};

struct GanModel {
  GanConfig config;
  Network g;  // latent [B,latent_dim] -> image [B,1,n,n] in tanh range
  Network d;  // image [B,1,n,n] -> probability [B,1] in (0,1)
};

/// DC-GAN stacks: discriminator convs 1->64->128->256->32 then dense to 1;
/// generator dense latent->32*(n/16)^2, reshape, conv transposes
/// 32->256->128->64->1. Deterministic given config.seed.
GanModel build(const GanConfig& config);

Tensor sample_latent(int count, int latent_dim, Rng& rng, double stddev = 1.0);

/// Images produced by the generator for a latent batch (eval mode).
std::vector<RealImage> images_from_batch(const Tensor& out);

struct EpochSummary {
  int epoch = 0;
  double d_loss = 0.0;    // -(mean log D(x) + mean log(1 - D(G(z))))
  double g_loss = 0.0;    // -mean log D(G(z)) (non-saturating surrogate)
  double acc_real = 0.0;  // fraction of real samples with D > 0.5
  double acc_fake = 0.0;  // fraction of fakes with D < 0.5
};

class Trainer {
 public:
  explicit Trainer(GanModel& model);
  /// One pass over the dataset: per batch one discriminator ascent step on
  /// log D(x) + log(1-D(G(z))), then one generator step on the
  /// non-saturating surrogate. Throws NumericError on non-finite loss.
  EpochSummary train_epoch(const std::vector<BinaryImage>& dataset, int epoch);

 private:
  GanModel& model_;
  NetOptimizer opt_g_, opt_d_;
  Rng root_;
};

std::vector<RealImage> sample(GanModel& model, int count, std::uint64_t seed);

/// Images along the straight latent path from z1 to z2 (endpoints exact).
std::vector<RealImage> traverse(GanModel& model, const std::vector<float>& z1,
                                const std::vector<float>& z2, int steps);

/// Discriminator probabilities for a stack of images (eval mode).
std::vector<double> discriminate(GanModel& model, const std::vector<RealImage>& images);

void save_model(GanModel& model, const std::filesystem::path& path);
GanModel load_model(const std::filesystem::path& path);

/// log(x) with x clamped to [eps, inf); slope zero where the clamp binds.
double clamped_log(double x, double eps = 1e-7);

}  // namespace geocond::gan
