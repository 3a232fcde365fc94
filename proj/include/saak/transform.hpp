#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "saak/dataset.hpp"
#include "saak/eigen.hpp"

namespace saak {

enum class CoefFormat { Signed, Position };

// Per-stage spatial-spectral block. values layout: (row*side + col)*depth +
// channel, i.e. channels contiguous per pixel. Signed cuboids carry one value
// per kept kernel; position cuboids interleave the rectified pair
// (relu(y_i), relu(-y_i)) and are therefore twice as deep and non-negative.
struct CoefficientCuboid {
  int stage = 0;
  std::size_t side = 0;
  std::size_t depth = 0;
  CoefFormat format = CoefFormat::Position;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return values[(r * side + c) * depth + ch];
  }
  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return values[(r * side + c) * depth + ch];
  }
};

// Depth-1 position cuboid over the raw pixels.
CoefficientCuboid image_cuboid(const Image& image);

// Implicit orthonormal completion of the zero-eigenvalue complement, kept as
// Householder reflectors from the QR of the data rows. Used by lossless
// stages fit from fewer patches than patch dimensions, where materializing
// the full square basis is not affordable.
struct NullCompletion {
  std::size_t dim = 0;
  std::size_t rank = 0;
  std::vector<double> reflectors;  // rank x dim; reflector k is zero before k
  std::vector<double> betas;       // rank; 2/||v||^2, 0 marks identity
  std::vector<double> signs;       // rank; sign fix matching the stored rows

  std::size_t null_count() const { return dim - rank; }
  void apply_qt(std::span<double> z) const;  // z <- Q^T z
  void apply_q(std::span<double> z) const;   // z <- Q z
};

struct StageKernels {
  int stage = 1;
  std::size_t input_depth = 1;  // C_in: position depth entering this stage
  EigenBasis basis;             // over patch vectors of length 4*C_in
  std::optional<NullCompletion> completion;

  std::size_t patch_dim() const { return 4 * input_depth; }
  std::size_t signed_depth() const {
    return basis.kept() + (completion ? completion->null_count() : 0);
  }
  std::size_t position_depth() const { return 2 * signed_depth(); }
};

enum class CascadeMode { Lossless, Lossy };

struct CascadePolicy {
  CascadeMode mode = CascadeMode::Lossless;
  double tau = 0.0;                      // energy threshold, lossy fits
  std::vector<std::size_t> keep_counts;  // per-stage injected counts, lossy

  static CascadePolicy lossless() { return {}; }
  static CascadePolicy lossy_energy(double tau) {
    return {CascadeMode::Lossy, tau, {}};
  }
  static CascadePolicy lossy_counts(std::vector<std::size_t> counts) {
    return {CascadeMode::Lossy, 0.0, std::move(counts)};
  }
};

struct SaakCascade {
  int input_side = 32;
  CascadePolicy policy;
  std::vector<StageKernels> stages;

  int stage_count() const { return static_cast<int>(stages.size()); }
  bool lossless() const { return policy.mode == CascadeMode::Lossless; }
  std::vector<std::size_t> kept_counts() const;
};

// Non-overlapping 2x2 blocks, row-major over the half-resolution grid. Each
// patch flattens its four pixels row-major with channels contiguous per
// pixel, giving vectors of length 4*depth.
std::vector<std::vector<double>> extract_patches(const CoefficientCuboid& cuboid);

// Covariance fit + decomposition + truncation over a patch population.
// Lossless fits keep a complete orthonormal system: materialized when the fit
// is full (or the dimension small), implicit Householder completion when the
// patch count is below the patch dimension.
StageKernels fit_stage(const std::vector<std::vector<double>>& patches,
                       const TruncationPolicy& policy, bool lossless);

// One stage forward: halves the spatial side, returns (signed, position).
std::pair<CoefficientCuboid, CoefficientCuboid> forward_stage(
    const CoefficientCuboid& position_in, const StageKernels& kernels);

// One stage inverse: position-to-sign conversion then inverse projection;
// doubles the spatial side. Exact inverse when the stage is complete.
CoefficientCuboid inverse_stage(const CoefficientCuboid& position,
                                const StageKernels& kernels);

SaakCascade fit_cascade(const Dataset& train, int stage_count,
                        const CascadePolicy& policy);

// Signed coefficient cuboids for stages 1..P.
std::vector<CoefficientCuboid> forward_cascade(const Image& image,
                                               const SaakCascade& cascade);

// Final-stage position output (spatial side 1 for a full cascade).
CoefficientCuboid forward_to_position(const Image& image, const SaakCascade& cascade);

Image inverse_cascade(const CoefficientCuboid& final_position,
                      const SaakCascade& cascade);

}  // namespace saak
