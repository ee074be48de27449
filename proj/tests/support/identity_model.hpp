#pragma once

// Closed-world conditioning harness: the generator reshapes the latent
// vector straight into the image and the discriminator returns a constant,
// so the optimum of the context loss is analytically reachable.

#include "geocond/inpaint.hpp"

namespace testsupport {

class IdentityModel final : public geocond::inpaint::LatentImageModel {
 public:
  IdentityModel(int height, int width, float d_constant = 0.5f)
      : height_(height), width_(width), d_constant_(d_constant) {}

  int latent_dim() const override { return height_ * width_; }
  int height() const override { return height_; }
  int width() const override { return width_; }

  geocond::Tensor generate(const geocond::Tensor& z) override {
    geocond::Tensor img = z;
    img.shape = {z.dim(0), 1, height_, width_};
    return img;
  }

  geocond::Tensor discriminate(const geocond::Tensor& images) override {
    geocond::Tensor d({images.dim(0), 1});
    std::fill(d.v.begin(), d.v.end(), d_constant_);
    return d;
  }

  geocond::Tensor latent_grad(const geocond::Tensor& grad_images,
                              const geocond::Tensor& grad_d) override {
    (void)grad_d;  // constant discriminator: no gradient path
    geocond::Tensor gz = grad_images;
    gz.shape = {grad_images.dim(0), latent_dim()};
    return gz;
  }

 private:
  int height_, width_;
  float d_constant_;
};

}  // namespace testsupport
