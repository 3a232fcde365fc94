#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace saak {

// Single-channel raster with intensities in [0,1], row-major.
struct Image {
  int side = 0;
  int label = -1;
  std::vector<double> pixels;

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * side + c]; }
  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * side + c]; }
};

struct Dataset {
  std::vector<Image> images;
  int class_count = 0;
  std::string provenance;

  std::size_t size() const { return images.size(); }
};

// Loads an IDX image/label pair; u8 intensities map to [0,1] via x/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Centers the image in a `side`-sized zero canvas. side must be a power of
// two and at least the current side.
Image pad_to(const Image& image, int side);
Dataset pad_dataset(const Dataset& dataset, int side);

// Deterministic sample of `size` images without replacement (seeded
// Fisher-Yates prefix). Same seed and size give the identical subset on any
// platform.
Dataset subset(const Dataset& dataset, std::size_t size, std::uint64_t seed);

// Keeps only images whose label is in `keep`; order preserved, labels and
// class_count untouched.
Dataset filter_classes(const Dataset& dataset, const std::set<int>& keep);

bool is_power_of_two(int v);

}  // namespace saak
