#include "saak/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "saak/rng.hpp"

namespace saak {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Perturbation Perturbation::salt_pepper(int level, std::uint64_t seed) {
  if (level < 1 || level > 4) {
    throw std::invalid_argument("salt_pepper: level outside 1..4");
  }
  Perturbation p;
  p.kind = NoiseKind::SaltPepper;
  p.level = level;
  p.density = kSaltPepperDensity[level - 1];
  p.seed = seed;
  return p;
}

Perturbation Perturbation::speckle(std::uint64_t seed, double sigma) {
  Perturbation p;
  p.kind = NoiseKind::Speckle;
  p.sigma = sigma;
  p.seed = seed;
  return p;
}

Perturbation Perturbation::gaussian(std::uint64_t seed, double sigma) {
  Perturbation p;
  p.kind = NoiseKind::Gaussian;
  p.sigma = sigma;
  p.seed = seed;
  return p;
}

Perturbation Perturbation::random_bg(std::uint64_t seed, double threshold) {
  Perturbation p;
  p.kind = NoiseKind::RandomBg;
  p.bg_threshold = threshold;
  p.seed = seed;
  return p;
}

Perturbation Perturbation::texture_bg(std::uint64_t seed, double threshold) {
  Perturbation p;
  p.kind = NoiseKind::TextureBg;
  p.bg_threshold = threshold;
  p.seed = seed;
  return p;
}

std::string Perturbation::name() const {
  switch (kind) {
    case NoiseKind::SaltPepper:
      return "sp" + std::to_string(level);
    case NoiseKind::Speckle:
      return "speckle";
    case NoiseKind::Gaussian:
      return "gaussian";
    case NoiseKind::RandomBg:
      return "random_bg";
    case NoiseKind::TextureBg:
      return "texture_bg";
  }
  return "unknown";
}

Image apply_noise(const Image& image, const Perturbation& pert,
                  std::uint64_t image_index) {
  Rng rng = Rng::substream(pert.seed, image_index);
  Image out = image;
  const int side = image.side;
  switch (pert.kind) {
    case NoiseKind::SaltPepper: {
      for (double& px : out.pixels) {
        if (rng.next_double() < pert.density) {
          px = rng.next_double() < 0.5 ? 0.0 : 1.0;
        }
      }
      break;
    }
    case NoiseKind::Speckle: {
      for (double& px : out.pixels) {
        px = clamp01(px + px * pert.sigma * rng.normal());
      }
      break;
    }
    case NoiseKind::Gaussian: {
      for (double& px : out.pixels) {
        px = clamp01(px + pert.sigma * rng.normal());
      }
      break;
    }
    case NoiseKind::RandomBg: {
      for (double& px : out.pixels) {
        if (px < pert.bg_threshold) px = rng.next_double();
      }
      break;
    }
    case NoiseKind::TextureBg: {
      // Procedural two-frequency sinusoid grid; T stays inside [0,1].
      const double fr = rng.uniform(0.04, 0.25);
      const double fc = rng.uniform(0.04, 0.25);
      const double p1 = rng.uniform(0.0, kTwoPi);
      const double p2 = rng.uniform(0.0, kTwoPi);
      for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
          double& px = out.at(r, c);
          if (px < pert.bg_threshold) {
            px = 0.5 + 0.25 * (std::sin(kTwoPi * fr * r + p1) +
                               std::sin(kTwoPi * fc * c + p2));
          }
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("apply_noise: unknown kind");
  }
  return out;
}

Dataset corrupt_dataset(const Dataset& dataset, const Perturbation& pert) {
  Dataset out;
  out.class_count = dataset.class_count;
  out.provenance = dataset.provenance + "#" + pert.name();
  out.images.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.images.push_back(apply_noise(dataset.images[i], pert, i));
  }
  return out;
}

}  // namespace saak
