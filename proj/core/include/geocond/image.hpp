#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace geocond {

/// n×m raster of facies labels. 1 = channel rock (white), 0 = background
/// rock (black).
struct BinaryImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // row-major, values in {0,1}

  BinaryImage() = default;
  BinaryImage(int h, int w);  // all background
  BinaryImage(int h, int w, std::vector<std::uint8_t> values);

  std::uint8_t& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  std::size_t pixel_count() const { return data.size(); }

  bool operator==(const BinaryImage&) const = default;
};

/// Raster of real values in [-1, +1] (the generator's tanh range).
struct RealImage {
  int height = 0;
  int width = 0;
  std::vector<float> data;  // row-major

  RealImage() = default;
  RealImage(int h, int w);  // all zeros
  RealImage(int h, int w, std::vector<float> values);

  float& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  float at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
};

/// One point observation: rock type at a pixel.
struct Measurement {
  int row = 0;
  int col = 0;
  std::uint8_t rock = 0;  // in {0,1}

  bool operator==(const Measurement&) const = default;
};

/// Ordered list of measurements. Exact duplicates are collapsed to the first
/// occurrence; duplicate coordinates with conflicting rock values are
/// rejected. Order is preserved (mask expansion tie-breaks on it).
class MeasurementSet {
 public:
  MeasurementSet() = default;
  explicit MeasurementSet(const std::vector<Measurement>& measurements);

  const std::vector<Measurement>& items() const { return items_; }
  std::size_t count() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  /// Throws ValidationError if any measurement falls outside an h×w grid.
  void check_bounds(int height, int width) const;

 private:
  std::vector<Measurement> items_;
};

/// Label-to-real map for network consumption: 0 ↦ -1.0, 1 ↦ +1.0.
RealImage encode_for_network(const BinaryImage& img);

/// Inverse of encode_for_network: value >= 0.0 ↦ 1, value < 0.0 ↦ 0.
BinaryImage threshold(const RealImage& img);

inline float encode_rock(std::uint8_t rock) { return rock ? 1.0f : -1.0f; }

}  // namespace geocond
