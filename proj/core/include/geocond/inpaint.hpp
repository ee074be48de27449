#pragma once

#include <vector>

#include "geocond/gan.hpp"
#include "geocond/image.hpp"
#include "geocond/tensor.hpp"

namespace geocond::inpaint {

inline constexpr int kRadiusAuto = -1;

/// Distance-decayed soft mask around the measurements: candidate weight
/// 1/sqrt(di^2+dj^2+1) inside the Euclidean disc di^2+dj^2 <= radius^2; a
/// pixel covered by several measurements keeps the maximum weight and that
/// measurement's encoded value, earliest measurement winning ties.
struct ExpandedMask {
  int height = 0;
  int width = 0;
  int radius = 0;
  std::vector<float> weights;  // in [0,1]; 1 exactly at measurement pixels
  std::vector<float> targets;  // +-1 where weight > 0, else 0
  MeasurementSet source;
};

struct InpaintConfig {
  double lambda = 10.0;
  float lr = 1e-2f;
  int iterations = 1500;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  int restarts = 20;
  int radius = kRadiusAuto;
  std::uint64_t seed = 0;

  void validate() const;  // throws ValidationError
};

struct Realization {
  RealImage image;
  std::vector<float> latent;
  double total_loss = 0.0;
  double context_loss = 0.0;
  double prior_loss = 0.0;
  double honor_rate = 0.0;
  int restart_index = 0;
};

/// Expansion-radius schedule by measurement count: <=10 -> 10, <=20 -> 7,
/// <=50 -> 5, otherwise 1.
int auto_radius(int measurement_count);

ExpandedMask expand_mask(const MeasurementSet& measurements, int radius, int height, int width);

/// Weighted L1 context loss: sum over pixels of weight * |img - target|.
double context_loss(const RealImage& img, const ExpandedMask& mask);

/// Anything that maps a latent batch to images and images to realism
/// probabilities, differentiably. Lets the conditioning engine run against
/// the trained GAN or against closed-form harnesses in tests.
class LatentImageModel {
 public:
  virtual ~LatentImageModel() = default;
  virtual int latent_dim() const = 0;
  virtual int height() const = 0;
  virtual int width() const = 0;
  /// z [k,L] -> images [k,1,H,W]; caches activations for latent_grad.
  virtual Tensor generate(const Tensor& z) = 0;
  /// images [k,1,H,W] -> probabilities [k,1].
  virtual Tensor discriminate(const Tensor& images) = 0;
  /// Pulls (dL/dimages, dL/dprob) back to dL/dz for the cached forward pass.
  virtual Tensor latent_grad(const Tensor& grad_images, const Tensor& grad_d) = 0;
};

/// Adapter running the GAN in eval mode with frozen weights.
class GanLatentModel final : public LatentImageModel {
 public:
  explicit GanLatentModel(gan::GanModel& model) : model_(model) {}
  int latent_dim() const override { return model_.config.latent_dim; }
  int height() const override { return model_.config.image_size; }
  int width() const override { return model_.config.image_size; }
  Tensor generate(const Tensor& z) override;
  Tensor discriminate(const Tensor& images) override;
  Tensor latent_grad(const Tensor& grad_images, const Tensor& grad_d) override;

 private:
  gan::GanModel& model_;
};

/// log(1 - clamp(d, eps, 1-eps)): the realism prior, finite for any d.
double prior_loss_value(double d, double eps = 1e-7);

/// Forward-only prior loss for a single latent vector.
double prior_loss(LatentImageModel& model, const std::vector<float>& z);

struct TotalLoss {
  double total = 0.0;
  double context = 0.0;
  double prior = 0.0;
  std::vector<float> grad_z;
};

/// Total conditioning objective and its latent gradient for one z.
TotalLoss total_loss(LatentImageModel& model, const std::vector<float>& z,
                     const ExpandedMask& mask, double lambda);

/// Fraction of measurements reproduced exactly by the thresholded image.
double honor_rate(const RealImage& image, const MeasurementSet& measurements);

/// k independent Adam restarts on the latent vector (weights frozen),
/// returned sorted by ascending total loss. Restart i draws its start from
/// the stream derive(seed, i), so results do not depend on batching.
std::vector<Realization> condition(LatentImageModel& model, const MeasurementSet& measurements,
                                   const InpaintConfig& config);

}  // namespace geocond::inpaint
