#pragma once

// Test-owned reference implementations. Deliberately written as direct
// nested loops and scans, independent of the library's kernel and update
// paths.

#include <cmath>
#include <cstddef>
#include <vector>

#include "geocond/inpaint.hpp"
#include "geocond/obm.hpp"

namespace oracle {

// six nested loops, cross-correlation with kernel 4, stride 2, padding 1
inline std::vector<float> conv2d(const std::vector<float>& in, const std::vector<float>& w,
                                 const std::vector<float>& bias, int B, int Ci, int H, int W,
                                 int Co) {
  const int OH = H / 2, OW = W / 2;
  std::vector<float> out(static_cast<std::size_t>(B) * Co * OH * OW, 0.0f);
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
                acc += static_cast<double>(
                           in[((static_cast<std::size_t>(b) * Ci + ci) * H + ih) * W + iw]) *
                       w[((static_cast<std::size_t>(co) * Ci + ci) * 4 + u) * 4 + v];
              }
          out[((static_cast<std::size_t>(b) * Co + co) * OH + oh) * OW + ow] =
              static_cast<float>(acc);
        }
  return out;
}

inline std::vector<float> dense(const std::vector<float>& in, const std::vector<float>& w,
                                const std::vector<float>& bias, int B, int F, int G) {
  std::vector<float> out(static_cast<std::size_t>(B) * G, 0.0f);
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < G; ++g) {
      double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(g)];
      for (int f = 0; f < F; ++f)
        acc += static_cast<double>(in[static_cast<std::size_t>(b) * F + f]) *
               w[static_cast<std::size_t>(f) * G + g];
      out[static_cast<std::size_t>(b) * G + g] = static_cast<float>(acc);
    }
  return out;
}

inline double triangular_cdf(const geocond::obm::TriangularDist& d, double x) {
  if (x <= d.min) return 0.0;
  if (x >= d.max) return 1.0;
  const double range = d.max - d.min;
  if (x < d.mode) return (x - d.min) * (x - d.min) / (range * (d.mode - d.min));
  return 1.0 - (d.max - x) * (d.max - x) / (range * (d.max - d.mode));
}

// scans every grid pixel against every densely-sampled centerline point
inline std::vector<int> rasterize_scan(const geocond::obm::ChannelSpec& spec, int height,
                                       int width) {
  const double half = spec.width / 2.0;
  const double theta = spec.orientation * 3.14159265358979323846 / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double span = std::hypot(static_cast<double>(height), static_cast<double>(width));
  const double omega = 2.0 * 3.14159265358979323846 / spec.wavelength;
  const int steps = static_cast<int>(std::floor(2.0 * span / 0.1)) + 1;

  std::vector<int> pixels;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double py = r + 0.5, px = c + 0.5;
      bool inside = false;
      for (int i = 0; i < steps && !inside; ++i) {
        const double t = -span + 0.1 * i;
        const double offset = spec.amplitude * std::sin(omega * t + spec.phase);
        const double cx = spec.anchor_col + t * ct - offset * st;
        const double cy = spec.anchor_row + t * st + offset * ct;
        const double dx = px - cx, dy = py - cy;
        inside = dx * dx + dy * dy <= half * half;
      }
      if (inside) pixels.push_back(r * width + c);
    }
  }
  return pixels;
}

// per-pixel exhaustive scan over all measurements (max weight, earliest wins)
inline void expand_mask_scan(const geocond::MeasurementSet& ms, int radius, int height,
                             int width, std::vector<float>& weights,
                             std::vector<float>& targets) {
  weights.assign(static_cast<std::size_t>(height) * width, 0.0f);
  targets.assign(static_cast<std::size_t>(height) * width, 0.0f);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      float best = 0.0f;
      float value = 0.0f;
      for (const geocond::Measurement& m : ms.items()) {
        const int di = r - m.row, dj = c - m.col;
        const int d2 = di * di + dj * dj;
        if (d2 > radius * radius) continue;
        const float w = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d2) + 1.0));
        if (w > best) {
          best = w;
          value = m.rock ? 1.0f : -1.0f;
        }
      }
      weights[static_cast<std::size_t>(r) * width + c] = best;
      targets[static_cast<std::size_t>(r) * width + c] = value;
    }
}

// scalar Adam recurrence, one coordinate at a time (float state like the
// implementation, double intermediate math)
struct ScalarAdam {
  float lr, b1, b2, eps;
  long t = 0;
  float m = 0.0f, v = 0.0f;

  float step(float x, float g) {
    ++t;
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g * g;
    const double mhat = static_cast<double>(m) / (1.0 - std::pow(static_cast<double>(b1), t));
    const double vhat = static_cast<double>(v) / (1.0 - std::pow(static_cast<double>(b2), t));
    return x - static_cast<float>(static_cast<double>(lr) * mhat / (std::sqrt(vhat) + eps));
  }
};

}  // namespace oracle
