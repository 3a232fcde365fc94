#include "saak/idx.hpp"

#include <cstdio>
#include <fstream>

#include "saak/errors.hpp"

namespace saak {
namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated IDX header in " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kIdxImageMagic) {
    throw FormatError("bad image magic " + hex(magic) + " in " + path);
  }
  IdxImages out;
  out.count = read_be32(in, path);
  out.rows = read_be32(in, path);
  out.cols = read_be32(in, path);
  const std::size_t total = out.count * out.rows * out.cols;
  out.pixels.resize(total);
  if (total > 0 &&
      !in.read(reinterpret_cast<char*>(out.pixels.data()),
               static_cast<std::streamsize>(total))) {
    throw IoError("truncated image payload in " + path);
  }
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kIdxLabelMagic) {
    throw FormatError("bad label magic " + hex(magic) + " in " + path);
  }
  const std::size_t count = read_be32(in, path);
  std::vector<std::uint8_t> labels(count);
  if (count > 0 &&
      !in.read(reinterpret_cast<char*>(labels.data()),
               static_cast<std::streamsize>(count))) {
    throw IoError("truncated label payload in " + path);
  }
  return labels;
}

void write_idx_images(const std::string& path, std::size_t count, std::size_t rows,
                      std::size_t cols, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != count * rows * cols) {
    throw ConsistencyError("pixel buffer does not match dimensions for " + path);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(count));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed for " + path);
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace saak
