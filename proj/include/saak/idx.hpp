#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace saak {

// IDX container (big-endian headers, u8 payload). Image files carry magic
// 0x00000803 and three dimensions, label files 0x00000801 and one.
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803u;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801u;

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

void write_idx_images(const std::string& path, std::size_t count, std::size_t rows,
                      std::size_t cols, std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);

}  // namespace saak
