#pragma once

#include <cstdint>
#include <string>

#include "saak/dataset.hpp"

namespace saak {

// Procedural handwritten-style digit corpus. Digits are stroke skeletons
// rendered through a distance field after per-sample affine jitter, elastic
// warp and thickness/contrast variation. Fully deterministic in (seed,
// index), so generated IDX files are reproducible.
Image synth_digit(int digit, std::uint64_t seed, std::uint64_t index, int side = 28);

Dataset synth_dataset(std::size_t count, std::uint64_t seed, int side = 28);

struct SynthFiles {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

// Writes train/test IDX pairs under `dir` using the conventional file names;
// the test stream is seeded independently of the train stream.
SynthFiles write_synth_idx(const std::string& dir, std::size_t train_count,
                           std::size_t test_count, std::uint64_t seed);

}  // namespace saak
