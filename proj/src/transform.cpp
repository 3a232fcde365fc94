#include "saak/transform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "saak/covariance.hpp"
#include "saak/errors.hpp"
#include "saak/matrix.hpp"

namespace saak {
namespace {

void gather_patch(const CoefficientCuboid& cub, std::size_t block_r,
                  std::size_t block_c, double* out) {
  const std::size_t d = cub.depth;
  const std::size_t r0 = 2 * block_r;
  const std::size_t c0 = 2 * block_c;
  const double* base = cub.values.data();
  std::memcpy(out + 0 * d, base + ((r0 + 0) * cub.side + c0 + 0) * d, d * sizeof(double));
  std::memcpy(out + 1 * d, base + ((r0 + 0) * cub.side + c0 + 1) * d, d * sizeof(double));
  std::memcpy(out + 2 * d, base + ((r0 + 1) * cub.side + c0 + 0) * d, d * sizeof(double));
  std::memcpy(out + 3 * d, base + ((r0 + 1) * cub.side + c0 + 1) * d, d * sizeof(double));
}

void scatter_patch(CoefficientCuboid& cub, std::size_t block_r, std::size_t block_c,
                   const double* in) {
  const std::size_t d = cub.depth;
  const std::size_t r0 = 2 * block_r;
  const std::size_t c0 = 2 * block_c;
  double* base = cub.values.data();
  std::memcpy(base + ((r0 + 0) * cub.side + c0 + 0) * d, in + 0 * d, d * sizeof(double));
  std::memcpy(base + ((r0 + 0) * cub.side + c0 + 1) * d, in + 1 * d, d * sizeof(double));
  std::memcpy(base + ((r0 + 1) * cub.side + c0 + 0) * d, in + 2 * d, d * sizeof(double));
  std::memcpy(base + ((r0 + 1) * cub.side + c0 + 1) * d, in + 3 * d, d * sizeof(double));
}

// Householder QR of rows^T. The returned completion holds the reflectors and
// per-row sign fixes, and `rows` is re-extracted from the Q factor so stored
// kernels match the operator the reflectors apply.
NullCompletion build_completion(std::vector<double>& rows, std::size_t rank,
                                std::size_t dim) {
  NullCompletion comp;
  comp.dim = dim;
  comp.rank = rank;
  comp.reflectors.assign(rank * dim, 0.0);
  comp.betas.assign(rank, 0.0);
  comp.signs.assign(rank, 1.0);

  // b holds rows^T (dim x rank), factored column by column.
  std::vector<double> b(dim * rank);
  for (std::size_t i = 0; i < rank; ++i) {
    for (std::size_t j = 0; j < dim; ++j) b[j * rank + i] = rows[i * dim + j];
  }
  for (std::size_t k = 0; k < rank; ++k) {
    double sigma2 = 0.0;
    for (std::size_t i = k; i < dim; ++i) {
      const double v = b[i * rank + k];
      sigma2 += v * v;
    }
    const double sigma = std::sqrt(sigma2);
    if (sigma == 0.0) continue;  // betas[k] == 0 marks an identity reflector
    const double bkk = b[k * rank + k];
    const double alpha = bkk > 0.0 ? -sigma : sigma;
    double* v = comp.reflectors.data() + k * dim;
    v[k] = bkk - alpha;
    for (std::size_t i = k + 1; i < dim; ++i) v[i] = b[i * rank + k];
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < dim; ++i) vnorm2 += v[i] * v[i];
    comp.betas[k] = 2.0 / vnorm2;
    for (std::size_t j = k + 1; j < rank; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < dim; ++i) dot += v[i] * b[i * rank + j];
      const double g = comp.betas[k] * dot;
      for (std::size_t i = k; i < dim; ++i) b[i * rank + j] -= g * v[i];
    }
    b[k * rank + k] = alpha;
  }

  std::vector<double> col(dim);
  for (std::size_t i = 0; i < rank; ++i) {
    std::fill(col.begin(), col.end(), 0.0);
    col[i] = 1.0;
    comp.apply_q(col);
    const double s = sign_convention_factor(col);
    comp.signs[i] = s;
    double* row = rows.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] = s * col[j];
  }
  return comp;
}

StageKernels fit_stage_accumulated(const CovarianceAccumulator& acc,
                                   const TruncationPolicy& policy, bool lossless) {
  StageKernels out;
  out.input_depth = acc.dim() / 4;
  EigenBasis full = eigen_decompose(acc);
  out.basis = lossless ? std::move(full) : truncate(full, policy);
  return out;
}

StageKernels fit_stage_snapshot(const Matrix& samples, const TruncationPolicy& policy,
                                bool lossless) {
  const std::size_t dim = samples.cols;
  StageKernels out;
  out.input_depth = dim / 4;
  SnapshotEigen fit = snapshot_eigen(samples);

  if (lossless) {
    EigenBasis basis;
    basis.dim = dim;
    basis.mean = std::move(fit.mean);
    basis.eigenvalues = std::move(fit.eigenvalues);
    basis.rows = std::move(fit.rows);
    out.completion = build_completion(basis.rows, fit.rank, dim);
    out.basis = std::move(basis);
    return out;
  }

  std::size_t keep = fit.rank;
  switch (policy.kind) {
    case TruncationPolicy::Kind::KeepAll:
      break;
    case TruncationPolicy::Kind::KeepCount:
      if (policy.count < 1 || policy.count > dim) {
        throw std::invalid_argument("fit_stage: keep-count outside [1,dim]");
      }
      keep = policy.count;
      break;
    case TruncationPolicy::Kind::EnergyFraction: {
      if (!(policy.tau > 0.0 && policy.tau < 1.0)) {
        throw std::invalid_argument("fit_stage: tau outside (0,1)");
      }
      keep = 0;
      for (double ev : fit.eigenvalues) {
        if (ev > policy.tau * fit.trace) ++keep;
      }
      if (keep == 0) keep = 1;
      break;
    }
  }

  EigenBasis basis;
  basis.dim = dim;
  basis.mean = std::move(fit.mean);
  if (fit.rank == 0) {
    // Degenerate population (all patches identical): fall back to the first
    // coordinate axis so downstream shapes stay valid.
    basis.eigenvalues.assign(1, 0.0);
    basis.rows.assign(dim, 0.0);
    basis.rows[0] = 1.0;
  } else {
    keep = std::min(keep, fit.rank);
    basis.eigenvalues.assign(fit.eigenvalues.begin(), fit.eigenvalues.begin() + keep);
    basis.rows.assign(fit.rows.begin(), fit.rows.begin() + keep * dim);
    apply_sign_convention(basis.rows, keep, dim);
  }
  out.basis = std::move(basis);
  return out;
}

TruncationPolicy stage_policy(const CascadePolicy& policy, int stage_index) {
  if (policy.mode == CascadeMode::Lossless) return TruncationPolicy::all();
  if (!policy.keep_counts.empty()) {
    return TruncationPolicy::keep_count(policy.keep_counts[stage_index]);
  }
  return TruncationPolicy::energy(policy.tau);
}

}  // namespace

CoefficientCuboid image_cuboid(const Image& image) {
  CoefficientCuboid cub;
  cub.stage = 0;
  cub.side = static_cast<std::size_t>(image.side);
  cub.depth = 1;
  cub.format = CoefFormat::Position;
  cub.values = image.pixels;
  return cub;
}

void NullCompletion::apply_qt(std::span<double> z) const {
  for (std::size_t k = 0; k < rank; ++k) {
    if (betas[k] == 0.0) continue;
    const double* v = reflectors.data() + k * dim;
    double dot = 0.0;
    for (std::size_t i = k; i < dim; ++i) dot += v[i] * z[i];
    const double g = betas[k] * dot;
    for (std::size_t i = k; i < dim; ++i) z[i] -= g * v[i];
  }
}

void NullCompletion::apply_q(std::span<double> z) const {
  for (std::size_t k = rank; k-- > 0;) {
    if (betas[k] == 0.0) continue;
    const double* v = reflectors.data() + k * dim;
    double dot = 0.0;
    for (std::size_t i = k; i < dim; ++i) dot += v[i] * z[i];
    const double g = betas[k] * dot;
    for (std::size_t i = k; i < dim; ++i) z[i] -= g * v[i];
  }
}

std::vector<std::size_t> SaakCascade::kept_counts() const {
  std::vector<std::size_t> counts;
  counts.reserve(stages.size());
  for (const auto& s : stages) counts.push_back(s.signed_depth());
  return counts;
}

std::vector<std::vector<double>> extract_patches(const CoefficientCuboid& cuboid) {
  if (cuboid.side % 2 != 0) {
    throw std::invalid_argument("extract_patches: odd spatial side " +
                                std::to_string(cuboid.side));
  }
  const std::size_t half = cuboid.side / 2;
  const std::size_t pd = 4 * cuboid.depth;
  std::vector<std::vector<double>> patches;
  patches.reserve(half * half);
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t c = 0; c < half; ++c) {
      std::vector<double> p(pd);
      gather_patch(cuboid, r, c, p.data());
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

StageKernels fit_stage(const std::vector<std::vector<double>>& patches,
                       const TruncationPolicy& policy, bool lossless) {
  if (patches.size() < 2) {
    throw std::invalid_argument("fit_stage: need at least 2 patches");
  }
  const std::size_t dim = patches.front().size();
  for (const auto& p : patches) {
    if (p.size() != dim) throw std::invalid_argument("fit_stage: ragged patch list");
  }
  if (dim % 4 != 0) throw std::invalid_argument("fit_stage: patch length not 4*C");

  if (patches.size() >= dim) {
    CovarianceAccumulator acc(dim);
    for (const auto& p : patches) acc.accumulate(p);
    return fit_stage_accumulated(acc, policy, lossless);
  }
  Matrix samples(patches.size(), dim);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    std::copy(patches[i].begin(), patches[i].end(), samples.row(i).begin());
  }
  return fit_stage_snapshot(samples, policy, lossless);
}

std::pair<CoefficientCuboid, CoefficientCuboid> forward_stage(
    const CoefficientCuboid& position_in, const StageKernels& kernels) {
  if (position_in.format != CoefFormat::Position) {
    throw std::invalid_argument("forward_stage: input must be position format");
  }
  if (position_in.depth != kernels.input_depth) {
    throw std::invalid_argument("forward_stage: depth " +
                                std::to_string(position_in.depth) + " != C_in " +
                                std::to_string(kernels.input_depth));
  }
  if (position_in.side % 2 != 0) {
    throw std::invalid_argument("forward_stage: odd spatial side");
  }
  const std::size_t half = position_in.side / 2;
  const std::size_t pd = kernels.patch_dim();
  const std::size_t sd = kernels.signed_depth();
  const EigenBasis& basis = kernels.basis;

  CoefficientCuboid sgn;
  sgn.stage = kernels.stage;
  sgn.side = half;
  sgn.depth = sd;
  sgn.format = CoefFormat::Signed;
  sgn.values.resize(half * half * sd);

  CoefficientCuboid pos;
  pos.stage = kernels.stage;
  pos.side = half;
  pos.depth = 2 * sd;
  pos.format = CoefFormat::Position;
  pos.values.resize(half * half * 2 * sd);

  std::vector<double> z(pd);
  std::vector<double> y(sd);
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t c = 0; c < half; ++c) {
      gather_patch(position_in, r, c, z.data());
      for (std::size_t j = 0; j < pd; ++j) z[j] -= basis.mean[j];
      if (kernels.completion) {
        const NullCompletion& comp = *kernels.completion;
        comp.apply_qt(z);
        for (std::size_t i = 0; i < comp.rank; ++i) y[i] = comp.signs[i] * z[i];
        for (std::size_t i = comp.rank; i < pd; ++i) y[i] = z[i];
      } else {
        for (std::size_t i = 0; i < sd; ++i) {
          const double* row = basis.rows.data() + i * pd;
          double acc = 0.0;
          for (std::size_t j = 0; j < pd; ++j) acc += row[j] * z[j];
          y[i] = acc;
        }
      }
      double* sdst = sgn.values.data() + (r * half + c) * sd;
      double* pdst = pos.values.data() + (r * half + c) * 2 * sd;
      for (std::size_t i = 0; i < sd; ++i) {
        sdst[i] = y[i];
        pdst[2 * i] = y[i] > 0.0 ? y[i] : 0.0;
        pdst[2 * i + 1] = y[i] < 0.0 ? -y[i] : 0.0;
      }
    }
  }
  return {std::move(sgn), std::move(pos)};
}

CoefficientCuboid inverse_stage(const CoefficientCuboid& position,
                                const StageKernels& kernels) {
  if (position.format != CoefFormat::Position) {
    throw std::invalid_argument("inverse_stage: input must be position format");
  }
  const std::size_t sd = kernels.signed_depth();
  if (position.depth != 2 * sd) {
    throw std::invalid_argument("inverse_stage: depth " +
                                std::to_string(position.depth) + " != 2*K' " +
                                std::to_string(2 * sd));
  }
  const std::size_t pd = kernels.patch_dim();
  const EigenBasis& basis = kernels.basis;

  CoefficientCuboid out;
  out.stage = kernels.stage - 1;
  out.side = position.side * 2;
  out.depth = kernels.input_depth;
  out.format = CoefFormat::Position;
  out.values.resize(out.side * out.side * out.depth);

  std::vector<double> y(sd);
  std::vector<double> x(pd);
  for (std::size_t r = 0; r < position.side; ++r) {
    for (std::size_t c = 0; c < position.side; ++c) {
      const double* src = position.values.data() + (r * position.side + c) * 2 * sd;
      for (std::size_t i = 0; i < sd; ++i) y[i] = src[2 * i] - src[2 * i + 1];
      if (kernels.completion) {
        const NullCompletion& comp = *kernels.completion;
        for (std::size_t i = 0; i < comp.rank; ++i) x[i] = comp.signs[i] * y[i];
        for (std::size_t i = comp.rank; i < pd; ++i) x[i] = y[i];
        comp.apply_q(x);
      } else {
        std::fill(x.begin(), x.end(), 0.0);
        for (std::size_t i = 0; i < sd; ++i) {
          const double* row = basis.rows.data() + i * pd;
          const double yi = y[i];
          for (std::size_t j = 0; j < pd; ++j) x[j] += yi * row[j];
        }
      }
      for (std::size_t j = 0; j < pd; ++j) x[j] += basis.mean[j];
      scatter_patch(out, r, c, x.data());
    }
  }
  return out;
}

SaakCascade fit_cascade(const Dataset& train, int stage_count,
                        const CascadePolicy& policy) {
  if (train.size() < 2) throw std::invalid_argument("fit_cascade: need >= 2 images");
  const int side = train.images.front().side;
  for (const Image& img : train.images) {
    if (img.side != side) throw std::invalid_argument("fit_cascade: mixed sides");
  }
  if (stage_count < 1 || side != (1 << stage_count)) {
    throw std::invalid_argument("fit_cascade: side " + std::to_string(side) +
                                " != 2^" + std::to_string(stage_count));
  }
  if (!policy.keep_counts.empty() &&
      policy.keep_counts.size() != static_cast<std::size_t>(stage_count)) {
    throw std::invalid_argument("fit_cascade: keep_counts length mismatch");
  }

  SaakCascade cascade;
  cascade.input_side = side;
  cascade.policy = policy;
  const bool lossless = policy.mode == CascadeMode::Lossless;

  std::size_t input_depth = 1;
  for (int p = 1; p <= stage_count; ++p) {
    const std::size_t half = static_cast<std::size_t>(side >> p);
    const std::size_t patches_per_image = half * half;
    const std::size_t n_patches = train.size() * patches_per_image;
    const std::size_t dim = 4 * input_depth;

    // Stage p-1 positions are recomputed per image through the stages fit so
    // far; memory stays flat. Streaming covariance when the population is
    // large, flat sample matrix for the snapshot path otherwise.
    auto stage_input = [&](const Image& img) {
      CoefficientCuboid cub = image_cuboid(img);
      for (int s = 0; s < p - 1; ++s) {
        cub = forward_stage(cub, cascade.stages[s]).second;
      }
      return cub;
    };

    StageKernels kernels;
    const TruncationPolicy trunc = stage_policy(policy, p - 1);
    if (n_patches >= dim) {
      CovarianceAccumulator acc(dim);
      std::vector<double> patch(dim);
      for (const Image& img : train.images) {
        const CoefficientCuboid cub = stage_input(img);
        for (std::size_t r = 0; r < half; ++r) {
          for (std::size_t c = 0; c < half; ++c) {
            gather_patch(cub, r, c, patch.data());
            acc.accumulate(patch);
          }
        }
      }
      kernels = fit_stage_accumulated(acc, trunc, lossless);
    } else {
      Matrix samples(n_patches, dim);
      std::size_t row = 0;
      for (const Image& img : train.images) {
        const CoefficientCuboid cub = stage_input(img);
        for (std::size_t r = 0; r < half; ++r) {
          for (std::size_t c = 0; c < half; ++c) {
            gather_patch(cub, r, c, samples.row(row++).data());
          }
        }
      }
      kernels = fit_stage_snapshot(samples, trunc, lossless);
    }
    kernels.stage = p;
    input_depth = kernels.position_depth();
    cascade.stages.push_back(std::move(kernels));
  }
  return cascade;
}

std::vector<CoefficientCuboid> forward_cascade(const Image& image,
                                               const SaakCascade& cascade) {
  if (image.side != cascade.input_side) {
    throw std::invalid_argument("forward_cascade: image side " +
                                std::to_string(image.side) + " != cascade side " +
                                std::to_string(cascade.input_side));
  }
  std::vector<CoefficientCuboid> out;
  out.reserve(cascade.stages.size());
  CoefficientCuboid cub = image_cuboid(image);
  for (const StageKernels& k : cascade.stages) {
    auto [sgn, pos] = forward_stage(cub, k);
    out.push_back(std::move(sgn));
    cub = std::move(pos);
  }
  return out;
}

CoefficientCuboid forward_to_position(const Image& image, const SaakCascade& cascade) {
  if (image.side != cascade.input_side) {
    throw std::invalid_argument("forward_to_position: side mismatch");
  }
  CoefficientCuboid cub = image_cuboid(image);
  for (const StageKernels& k : cascade.stages) {
    cub = forward_stage(cub, k).second;
  }
  return cub;
}

Image inverse_cascade(const CoefficientCuboid& final_position,
                      const SaakCascade& cascade) {
  const StageKernels& last = cascade.stages.back();
  const std::size_t expect_side =
      static_cast<std::size_t>(cascade.input_side >> cascade.stage_count());
  if (final_position.side != expect_side ||
      final_position.depth != last.position_depth()) {
    throw std::invalid_argument("inverse_cascade: shape mismatch with stage " +
                                std::to_string(cascade.stage_count()));
  }
  CoefficientCuboid cub = final_position;
  for (int p = cascade.stage_count(); p >= 1; --p) {
    cub = inverse_stage(cub, cascade.stages[p - 1]);
  }
  Image img;
  img.side = static_cast<int>(cub.side);
  img.label = -1;
  img.pixels = std::move(cub.values);
  return img;
}

}  // namespace saak
