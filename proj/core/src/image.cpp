#include "geocond/image.hpp"

#include <algorithm>
#include <unordered_map>

#include "geocond/errors.hpp"

namespace geocond {

namespace {
void check_dims(int h, int w) {
  if (h <= 0 || w <= 0)
    throw ValidationError("image dimensions must be positive, got " +
                          std::to_string(h) + "x" + std::to_string(w));
}
}  // namespace

BinaryImage::BinaryImage(int h, int w) : height(h), width(w) {
  check_dims(h, w);
  data.assign(static_cast<std::size_t>(h) * w, 0);
}

BinaryImage::BinaryImage(int h, int w, std::vector<std::uint8_t> values)
    : height(h), width(w), data(std::move(values)) {
  check_dims(h, w);
  if (data.size() != static_cast<std::size_t>(h) * w)
    throw ValidationError("binary image payload length does not match dimensions");
  for (std::uint8_t v : data)
    if (v > 1) throw ValidationError("binary image value out of {0,1}: " + std::to_string(v));
}

RealImage::RealImage(int h, int w) : height(h), width(w) {
  check_dims(h, w);
  data.assign(static_cast<std::size_t>(h) * w, 0.0f);
}

RealImage::RealImage(int h, int w, std::vector<float> values)
    : height(h), width(w), data(std::move(values)) {
  check_dims(h, w);
  if (data.size() != static_cast<std::size_t>(h) * w)
    throw ValidationError("real image payload length does not match dimensions");
  for (float v : data)
    if (!(v >= -1.0f && v <= 1.0f))
      throw ValidationError("real image value out of [-1,1]: " + std::to_string(v));
}

MeasurementSet::MeasurementSet(const std::vector<Measurement>& measurements) {
  std::unordered_map<std::uint64_t, std::uint8_t> seen;
  items_.reserve(measurements.size());
  for (const Measurement& m : measurements) {
    if (m.rock > 1)
      throw ValidationError("measurement rock type out of {0,1}: " + std::to_string(m.rock));
    std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m.row)) << 32) |
                        static_cast<std::uint32_t>(m.col);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, m.rock);
      items_.push_back(m);
    } else if (it->second != m.rock) {
      throw ValidationError("conflicting duplicate measurement at (" + std::to_string(m.row) +
                            "," + std::to_string(m.col) + ")");
    }
    // exact duplicate: collapsed, first occurrence kept
  }
}

void MeasurementSet::check_bounds(int height, int width) const {
  for (const Measurement& m : items_) {
    if (m.row < 0 || m.row >= height || m.col < 0 || m.col >= width)
      throw ValidationError("measurement (" + std::to_string(m.row) + "," +
                            std::to_string(m.col) + ") outside " + std::to_string(height) +
                            "x" + std::to_string(width) + " grid");
  }
}

RealImage encode_for_network(const BinaryImage& img) {
  RealImage out(img.height, img.width);
  std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                 [](std::uint8_t v) { return v ? 1.0f : -1.0f; });
  return out;
}

BinaryImage threshold(const RealImage& img) {
  BinaryImage out(img.height, img.width);
  std::transform(img.data.begin(), img.data.end(), out.data.begin(),
                 [](float v) { return static_cast<std::uint8_t>(v >= 0.0f ? 1 : 0); });
  return out;
}

}  // namespace geocond
