#pragma once

#include <vector>

#include "geocond/image.hpp"
#include "geocond/rng.hpp"

namespace geocond::obm {

struct TriangularDist {
  double min = 0.0;
  double mode = 0.0;
  double max = 0.0;
};

/// Inverse-CDF draw: u is uniform in [0,1]. A degenerate distribution
/// (min == max) returns min.
double sample_triangular(const TriangularDist& dist, double u);

double triangular_mean(const TriangularDist& dist);

/// Object-based model parameters. Defaults follow the fluvial training-data
/// setup: orientation -60..60 degrees, amplitude 10..30 px, wavelength
/// 50..100 px, 25% channel proportion; triangular modes at the midpoints.
struct ObmParams {
  TriangularDist orientation{-60.0, 0.0, 60.0};  // degrees
  TriangularDist amplitude{10.0, 20.0, 30.0};    // pixels
  TriangularDist wavelength{50.0, 75.0, 100.0};  // pixels
  int channel_width = 0;                         // full band width; 0 = auto scale
  double target_proportion = 0.25;
  int height = 128;
  int width = 128;

  /// Effective band width: explicit value, or round(5*n/128) with n the
  /// smaller grid side, never below 1.
  int effective_width() const;

  void validate() const;  // throws ValidationError
};

/// One parametric sinusoidal channel. The centerline is
///   c(t) = anchor + R(orientation) * (t, amplitude*sin(2*pi*t/wavelength + phase))
/// with t sweeping the grid diagonal.
struct ChannelSpec {
  double orientation = 0.0;  // degrees
  double amplitude = 0.0;    // pixels
  double wavelength = 1.0;   // pixels, > 0
  double phase = 0.0;        // radians
  double anchor_row = 0.0;   // continuous grid coordinates
  double anchor_col = 0.0;
  int width = 1;             // full band width, >= 1
};

/// All in-bounds pixels within width/2 of the densely sampled centerline
/// (sample step 0.1 px, pixel centers at (row+0.5, col+0.5)). Returned as
/// sorted row-major linear indices; empty if the channel misses the grid.
std::vector<int> rasterize_channel(const ChannelSpec& spec, int height, int width);

/// Per-image generation trace for diagnostics and property tests.
struct GenTrace {
  std::vector<double> proportions;  // after each accepted channel
  int candidates = 0;
};

/// Draws channels until the next candidate would move the channel proportion
/// away from the target. Guarantees at least one channel; throws NumericError
/// if 1000 candidates cannot bring the proportion within 0.5*target of the
/// target.
BinaryImage generate_image(const ObmParams& params, Rng& rng, GenTrace* trace = nullptr);

/// images[i] drawn from the independent stream derive(base_seed, i), so the
/// result does not depend on worker count.
std::vector<BinaryImage> generate_dataset(const ObmParams& params, int count,
                                          std::uint64_t base_seed);

}  // namespace geocond::obm
