#include "geocond/obm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geocond/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace geocond::obm {

double sample_triangular(const TriangularDist& d, double u) {
  const double range = d.max - d.min;
  if (range <= 0.0) return d.min;
  const double cut = (d.mode - d.min) / range;
  if (u <= cut) return d.min + std::sqrt(u * range * (d.mode - d.min));
  return d.max - std::sqrt((1.0 - u) * range * (d.max - d.mode));
}

double triangular_mean(const TriangularDist& d) { return (d.min + d.mode + d.max) / 3.0; }

int ObmParams::effective_width() const {
  if (channel_width > 0) return channel_width;
  const int n = std::min(height, width);
  return std::max(1, static_cast<int>(std::lround(5.0 * n / 128.0)));
}

void ObmParams::validate() const {
  auto check_tri = [](const TriangularDist& d, const char* name) {
    if (!(d.min <= d.mode && d.mode <= d.max))
      throw ValidationError(std::string(name) + " triangular distribution violates min <= mode <= max");
  };
  check_tri(orientation, "orientation");
  check_tri(amplitude, "amplitude");
  check_tri(wavelength, "wavelength");
  if (wavelength.min <= 0.0) throw ValidationError("wavelength must be positive");
  if (channel_width < 0) throw ValidationError("channel_width must be >= 1 (or 0 for auto)");
  if (!(target_proportion > 0.0 && target_proportion < 1.0))
    throw ValidationError("target_proportion must lie in (0,1)");
  if (height <= 0 || width <= 0) throw ValidationError("grid dimensions must be positive");
}

std::vector<int> rasterize_channel(const ChannelSpec& spec, int height, int width) {
  const double half = spec.width / 2.0;
  const double theta = spec.orientation * std::numbers::pi / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double span = std::hypot(static_cast<double>(height), static_cast<double>(width));
  const double omega = 2.0 * std::numbers::pi / spec.wavelength;

  std::vector<std::uint8_t> hit(static_cast<std::size_t>(height) * width, 0);
  const int steps = static_cast<int>(std::floor(2.0 * span / 0.1)) + 1;
  for (int i = 0; i < steps; ++i) {
    const double t = -span + 0.1 * i;
    const double offset = spec.amplitude * std::sin(omega * t + spec.phase);
    // (x, y) = (col, row); channel direction (cos, sin), normal (-sin, cos)
    const double px = spec.anchor_col + t * ct - offset * st;
    const double py = spec.anchor_row + t * st + offset * ct;
    const int r0 = std::max(0, static_cast<int>(std::ceil(py - half - 0.5)));
    const int r1 = std::min(height - 1, static_cast<int>(std::floor(py + half - 0.5)));
    const int c0 = std::max(0, static_cast<int>(std::ceil(px - half - 0.5)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(px + half - 0.5)));
    for (int r = r0; r <= r1; ++r) {
      const double dy = (r + 0.5) - py;
      for (int c = c0; c <= c1; ++c) {
        const double dx = (c + 0.5) - px;
        if (dx * dx + dy * dy <= half * half)
          hit[static_cast<std::size_t>(r) * width + c] = 1;
      }
    }
  }

  std::vector<int> pixels;
  for (std::size_t i = 0; i < hit.size(); ++i)
    if (hit[i]) pixels.push_back(static_cast<int>(i));
  return pixels;
}

namespace {

ChannelSpec sample_channel(const ObmParams& p, Rng& rng) {
  ChannelSpec spec;
  spec.orientation = sample_triangular(p.orientation, rng.uniform());
  spec.amplitude = sample_triangular(p.amplitude, rng.uniform());
  spec.wavelength = sample_triangular(p.wavelength, rng.uniform());
  spec.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  spec.anchor_row = rng.uniform(0.0, static_cast<double>(p.height));
  spec.anchor_col = rng.uniform(0.0, static_cast<double>(p.width));
  spec.width = p.effective_width();
  return spec;
}

}  // namespace

BinaryImage generate_image(const ObmParams& params, Rng& rng, GenTrace* trace) {
  params.validate();
  constexpr int kMaxCandidates = 1000;
  const double target = params.target_proportion;
  const double total = static_cast<double>(params.height) * params.width;

  BinaryImage img(params.height, params.width);
  std::size_t ones = 0;
  int accepted = 0;
  int candidates = 0;

  while (candidates < kMaxCandidates) {
    ++candidates;
    const ChannelSpec spec = sample_channel(params, rng);
    const std::vector<int> pixels = rasterize_channel(spec, params.height, params.width);
    std::size_t fresh = 0;
    for (int idx : pixels) fresh += (img.data[static_cast<std::size_t>(idx)] == 0);

    const double p_old = static_cast<double>(ones) / total;
    const double p_new = static_cast<double>(ones + fresh) / total;
    if (std::abs(p_new - target) > std::abs(p_old - target)) {
      if (accepted == 0) continue;  // never stop before the first channel lands
      break;
    }
    for (int idx : pixels) img.data[static_cast<std::size_t>(idx)] = 1;
    ones += fresh;
    ++accepted;
    if (trace) trace->proportions.push_back(p_new);
  }

  if (trace) trace->candidates = candidates;
  const double proportion = static_cast<double>(ones) / total;
  if (accepted == 0 || std::abs(proportion - target) > 0.5 * target)
    throw NumericError("obm calibration failure: proportion " + std::to_string(proportion) +
                       " not within 0.5*target of " + std::to_string(target) + " after " +
                       std::to_string(candidates) + " candidates");
  return img;
}

std::vector<BinaryImage> generate_dataset(const ObmParams& params, int count,
                                          std::uint64_t base_seed) {
  params.validate();
  if (count < 1) throw ValidationError("dataset count must be >= 1");

  std::vector<BinaryImage> images(static_cast<std::size_t>(count));
  const Rng base(base_seed);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    if (failure) continue;
    try {
      Rng stream = base.derive(static_cast<std::uint64_t>(i));
      images[static_cast<std::size_t>(i)] = generate_image(params, stream);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return images;
}

}  // namespace geocond::obm
