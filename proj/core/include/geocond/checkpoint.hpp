#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "geocond/tensor.hpp"

namespace geocond {

/// Trained-parameter snapshot.
/// Layout (integers little-endian):
///   magic "GGCK" | u32 version | u32 metadata length | metadata (UTF-8) |
///   u32 tensor count | per tensor: u32 name length, name, u32 ndim,
///   ndim u32 extents, raw float32 values.
/// Round-trips are bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;  // UTF-8 text, JSON by convention
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace geocond
