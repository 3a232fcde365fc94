#include "saak/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "saak/errors.hpp"
#include "saak/idx.hpp"
#include "saak/rng.hpp"

namespace saak {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  IdxImages raw = read_idx_images(images_path);
  std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
  if (labels.size() != raw.count) {
    throw ConsistencyError("image/label count mismatch: " + std::to_string(raw.count) +
                           " vs " + std::to_string(labels.size()));
  }
  if (raw.count > 0 && raw.rows != raw.cols) {
    throw FormatError("non-square images: " + std::to_string(raw.rows) + "x" +
                      std::to_string(raw.cols));
  }
  Dataset ds;
  ds.provenance = images_path;
  ds.images.reserve(raw.count);
  const std::size_t px = raw.rows * raw.cols;
  int max_label = -1;
  for (std::size_t i = 0; i < raw.count; ++i) {
    Image img;
    img.side = static_cast<int>(raw.rows);
    img.label = labels[i];
    img.pixels.resize(px);
    const std::uint8_t* src = raw.pixels.data() + i * px;
    for (std::size_t j = 0; j < px; ++j) img.pixels[j] = src[j] / 255.0;
    max_label = std::max(max_label, img.label);
    ds.images.push_back(std::move(img));
  }
  ds.class_count = max_label + 1;
  return ds;
}

Image pad_to(const Image& image, int side) {
  if (side < image.side) {
    throw std::invalid_argument("pad_to: target side " + std::to_string(side) +
                                " smaller than input " + std::to_string(image.side));
  }
  if (!is_power_of_two(side)) {
    throw std::invalid_argument("pad_to: side must be a power of two");
  }
  if (side == image.side) return image;
  Image out;
  out.side = side;
  out.label = image.label;
  out.pixels.assign(static_cast<std::size_t>(side) * side, 0.0);
  const int off = (side - image.side) / 2;
  for (int r = 0; r < image.side; ++r) {
    for (int c = 0; c < image.side; ++c) {
      out.at(r + off, c + off) = image.at(r, c);
    }
  }
  return out;
}

Dataset pad_dataset(const Dataset& dataset, int side) {
  Dataset out;
  out.class_count = dataset.class_count;
  out.provenance = dataset.provenance;
  out.images.reserve(dataset.size());
  for (const Image& img : dataset.images) out.images.push_back(pad_to(img, side));
  return out;
}

Dataset subset(const Dataset& dataset, std::size_t size, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (size > n) {
    throw std::invalid_argument("subset: requested " + std::to_string(size) +
                                " of " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  Dataset out;
  out.class_count = dataset.class_count;
  out.provenance = dataset.provenance + "#subset(" + std::to_string(size) + "," +
                   std::to_string(seed) + ")";
  out.images.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.images.push_back(dataset.images[idx[i]]);
  return out;
}

Dataset filter_classes(const Dataset& dataset, const std::set<int>& keep) {
  if (keep.empty()) throw std::invalid_argument("filter_classes: empty keep set");
  for (int k : keep) {
    if (k < 0 || k >= dataset.class_count) {
      throw std::invalid_argument("filter_classes: class " + std::to_string(k) +
                                  " outside [0," + std::to_string(dataset.class_count) + ")");
    }
  }
  Dataset out;
  out.class_count = dataset.class_count;
  out.provenance = dataset.provenance + "#classes";
  for (const Image& img : dataset.images) {
    if (keep.count(img.label)) out.images.push_back(img);
  }
  return out;
}

}  // namespace saak
