#include "geocond/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "geocond/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

namespace geocond {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw ValidationError("truncated checkpoint while reading " + what);
  return v;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path.string());
  out.write("GGCK", 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out.write(ckpt.metadata.data(), static_cast<std::streamsize>(ckpt.metadata.size()));
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (int e : tensor.shape) put_u32(out, static_cast<std::uint32_t>(e));
    out.write(reinterpret_cast<const char*>(tensor.v.data()),
              static_cast<std::streamsize>(tensor.v.size() * 4));
  }
  out.flush();
  if (!out) throw ValidationError("failed writing checkpoint to " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GGCK", 4) != 0)
    throw ValidationError("bad magic in " + path.string() + " (expected GGCK)");
  const std::uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  const std::uint32_t metalen = get_u32(in, "metadata length");
  ckpt.metadata.resize(metalen);
  in.read(ckpt.metadata.data(), metalen);
  if (!in) throw ValidationError("truncated metadata in " + path.string());

  const std::uint32_t count = get_u32(in, "tensor count");
  ckpt.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t namelen = get_u32(in, "tensor name length");
    std::string name(namelen, '\0');
    in.read(name.data(), namelen);
    if (!in) throw ValidationError("truncated tensor name in " + path.string());
    const std::uint32_t ndim = get_u32(in, "tensor rank");
    if (ndim == 0 || ndim > 8)
      throw ValidationError("implausible tensor rank " + std::to_string(ndim) + " in " +
                            path.string());
    std::vector<int> shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d)
      shape[d] = static_cast<int>(get_u32(in, "tensor extent"));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.v.data()), static_cast<std::streamsize>(t.v.size() * 4));
    if (!in) throw ValidationError("truncated tensor values in " + path.string());
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ValidationError("trailing bytes after checkpoint payload in " + path.string());
  return ckpt;
}

}  // namespace geocond
