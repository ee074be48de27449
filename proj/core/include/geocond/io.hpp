#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "geocond/image.hpp"

namespace geocond {

/// Binary container for training sets.
/// Layout (all integers little-endian):
///   magic "GEOD" | u32 version | u32 count | u32 height | u32 width |
///   count*height*width payload bytes, each in {0,1}.
/// File size is exactly 20 + count*height*width bytes.
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const std::vector<BinaryImage>& images, const std::filesystem::path& path);
std::vector<BinaryImage> read_dataset(const std::filesystem::path& path);

/// Measurement CSV: one "row,col,rock" record per line, '#' starts a comment
/// line, blank lines ignored. Bounds are checked when a grid size is given
/// (pass height = width = 0 to skip).
MeasurementSet read_measurements(const std::filesystem::path& path, int height = 0, int width = 0);
MeasurementSet parse_measurements(std::istream& in, int height, int width,
                                  const std::string& source_name);
void write_measurements(const MeasurementSet& ms, const std::filesystem::path& path);

/// Binary rasters as 8-bit PGM (P5, maxval 255): label 0 ↦ byte 0,
/// label 1 ↦ byte 255. Import rejects any other byte value.
void write_pgm(const BinaryImage& img, const std::filesystem::path& path);
BinaryImage read_pgm(const std::filesystem::path& path);

/// Grayscale PGM for diagnostics (values in [0,1] scaled by 255). Output only.
void write_pgm_gray(int height, int width, const std::vector<double>& values,
                    const std::filesystem::path& path);

}  // namespace geocond
