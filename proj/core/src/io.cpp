#include "geocond/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "geocond/errors.hpp"

namespace geocond {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& what, std::size_t offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in)
    throw ValidationError("truncated file while reading " + what + " at offset " +
                          std::to_string(offset));
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path.string());
  return out;
}

}  // namespace

void write_dataset(const std::vector<BinaryImage>& images, const std::filesystem::path& path) {
  if (images.empty()) throw ValidationError("refusing to write empty dataset");
  const int h = images.front().height;
  const int w = images.front().width;
  for (const BinaryImage& img : images)
    if (img.height != h || img.width != w)
      throw ValidationError("dataset images must share dimensions");

  std::ofstream out = open_output(path);
  out.write("GEOD", 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(images.size()));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  for (const BinaryImage& img : images)
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
  out.flush();
  if (!out) throw ValidationError("failed writing dataset to " + path.string());
}

std::vector<BinaryImage> read_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GEOD", 4) != 0)
    throw ValidationError("bad magic at offset 0 in " + path.string() + " (expected GEOD)");
  const std::uint32_t version = get_u32(in, "version", 4);
  if (version != kDatasetVersion)
    throw ValidationError("unsupported dataset version " + std::to_string(version));
  const std::uint32_t count = get_u32(in, "count", 8);
  const std::uint32_t h = get_u32(in, "height", 12);
  const std::uint32_t w = get_u32(in, "width", 16);
  if (count == 0 || h == 0 || w == 0)
    throw ValidationError("dataset header has zero count or dimensions in " + path.string());

  const std::size_t image_bytes = static_cast<std::size_t>(h) * w;
  std::vector<BinaryImage> images;
  images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<std::uint8_t> buf(image_bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(image_bytes));
    if (!in)
      throw ValidationError("truncated payload at offset " +
                            std::to_string(20 + static_cast<std::size_t>(i) * image_bytes +
                                           static_cast<std::size_t>(in.gcount())) +
                            " in " + path.string());
    for (std::size_t j = 0; j < buf.size(); ++j)
      if (buf[j] > 1)
        throw ValidationError("payload byte " + std::to_string(static_cast<int>(buf[j])) +
                              " out of {0,1} at offset " +
                              std::to_string(20 + static_cast<std::size_t>(i) * image_bytes + j) +
                              " in " + path.string());
    images.emplace_back(static_cast<int>(h), static_cast<int>(w), std::move(buf));
  }
  // trailing junk means the header undercounts
  if (in.peek() != std::char_traits<char>::eof())
    throw ValidationError("trailing bytes after payload at offset " +
                          std::to_string(20 + static_cast<std::size_t>(count) * image_bytes) +
                          " in " + path.string());
  return images;
}

MeasurementSet parse_measurements(std::istream& in, int height, int width,
                                  const std::string& source_name) {
  std::vector<Measurement> parsed;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ' || sv.back() == '\t'))
      sv.remove_suffix(1);
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    if (sv.empty() || sv.front() == '#') continue;

    auto fail = [&](const std::string& why) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + why + ": " +
                            std::string(sv));
    };

    long fields[3];
    std::size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      std::size_t next = sv.find(',', pos);
      std::string_view tok = (f < 2)
                                 ? (next == std::string_view::npos ? std::string_view{}
                                                                   : sv.substr(pos, next - pos))
                                 : sv.substr(pos);
      if (f < 2 && next == std::string_view::npos) fail("expected row,col,rock");
      std::string token(tok);
      try {
        std::size_t used = 0;
        fields[f] = std::stol(token, &used);
        if (used != token.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail("non-integer field");
      }
      pos = next + 1;
    }
    if (fields[2] != 0 && fields[2] != 1) fail("rock type must be 0 or 1");
    Measurement m{static_cast<int>(fields[0]), static_cast<int>(fields[1]),
                  static_cast<std::uint8_t>(fields[2])};
    if (height > 0 && width > 0 &&
        (m.row < 0 || m.row >= height || m.col < 0 || m.col >= width))
      fail("measurement outside " + std::to_string(height) + "x" + std::to_string(width) +
           " grid");
    parsed.push_back(m);
  }
  return MeasurementSet(parsed);  // collapses duplicates, rejects conflicts
}

MeasurementSet read_measurements(const std::filesystem::path& path, int height, int width) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_measurements(in, height, width, path.filename().string());
}

void write_measurements(const MeasurementSet& ms, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "# row,col,rock\n";
  for (const Measurement& m : ms.items())
    out << m.row << "," << m.col << "," << static_cast<int>(m.rock) << "\n";
  if (!out) throw ValidationError("failed writing " + path.string());
}

void write_pgm(const BinaryImage& img, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.data.size());
  std::transform(img.data.begin(), img.data.end(), bytes.begin(),
                 [](std::uint8_t v) { return v ? 255 : 0; });
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing " + path.string());
}

namespace {
int next_pgm_token(std::istream& in, const std::string& path) {
  // skips whitespace and '#' comments inside the header
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      break;
    }
  }
  if (c == EOF) throw ValidationError("truncated PGM header in " + path);
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw ValidationError("malformed PGM header token in " + path);
  return value;
}
}  // namespace

BinaryImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  char p, five;
  in.get(p);
  in.get(five);
  if (!in || p != 'P' || five != '5')
    throw ValidationError("not a binary PGM (P5): " + path.string());
  const int w = next_pgm_token(in, path.string());
  const int h = next_pgm_token(in, path.string());
  const int maxval = next_pgm_token(in, path.string());
  if (maxval != 255)
    throw ValidationError("PGM maxval must be 255, got " + std::to_string(maxval) + " in " +
                          path.string());
  // exactly one whitespace byte separates header and payload; next_pgm_token
  // already consumed it while scanning past the maxval digits
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw ValidationError("truncated PGM payload in " + path.string());
  std::vector<std::uint8_t> labels(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] == 0)
      labels[i] = 0;
    else if (bytes[i] == 255)
      labels[i] = 1;
    else
      throw ValidationError("PGM pixel value " + std::to_string(static_cast<int>(bytes[i])) +
                            " is neither 0 nor 255 in " + path.string());
  }
  return BinaryImage(h, w, std::move(labels));
}

void write_pgm_gray(int height, int width, const std::vector<double>& values,
                    const std::filesystem::path& path) {
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw ValidationError("gray image payload length does not match dimensions");
  std::ofstream out = open_output(path);
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> bytes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = std::clamp(values[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace geocond
