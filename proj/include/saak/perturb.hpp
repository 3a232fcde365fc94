#pragma once

#include <cstdint>
#include <string>

#include "saak/dataset.hpp"

namespace saak {

enum class NoiseKind { SaltPepper, Speckle, Gaussian, RandomBg, TextureBg };

// Test-time corruption: kind, parameters and the stream seed. Per-image
// randomness derives from (seed, image index), so corrupting a dataset twice
// gives identical output.
struct Perturbation {
  NoiseKind kind = NoiseKind::SaltPepper;
  int level = 1;                // salt & pepper level 1..4
  double density = 0.05;        // resolved flip fraction (salt & pepper)
  double sigma = 0.2;           // gaussian / speckle std-dev
  double bg_threshold = 0.1;    // background replacement cutoff
  std::uint64_t seed = 0;

  static Perturbation salt_pepper(int level, std::uint64_t seed);
  static Perturbation speckle(std::uint64_t seed, double sigma = 0.2);
  static Perturbation gaussian(std::uint64_t seed, double sigma = 0.2);
  static Perturbation random_bg(std::uint64_t seed, double threshold = 0.1);
  static Perturbation texture_bg(std::uint64_t seed, double threshold = 0.1);

  std::string name() const;
};

// Flip fractions for salt & pepper levels 1..4.
inline constexpr double kSaltPepperDensity[4] = {0.05, 0.10, 0.20, 0.30};

Image apply_noise(const Image& image, const Perturbation& pert,
                  std::uint64_t image_index = 0);

Dataset corrupt_dataset(const Dataset& dataset, const Perturbation& pert);

}  // namespace saak
