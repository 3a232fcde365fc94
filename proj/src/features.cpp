#include "saak/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace saak {

FeatureLayout FeatureLayout::from(const SaakCascade& cascade) {
  FeatureLayout layout;
  std::size_t side = static_cast<std::size_t>(cascade.input_side);
  for (const StageKernels& k : cascade.stages) {
    side /= 2;
    const std::size_t depth = k.signed_depth();
    for (std::uint32_t ch = 0; ch < depth; ++ch) {
      for (std::uint32_t r = 0; r < side; ++r) {
        for (std::uint32_t c = 0; c < side; ++c) {
          layout.entries.push_back({static_cast<std::uint32_t>(k.stage), ch, r, c});
        }
      }
    }
  }
  return layout;
}

std::vector<double> flatten(const std::vector<CoefficientCuboid>& stage_outputs) {
  std::size_t total = 0;
  for (const CoefficientCuboid& cub : stage_outputs) {
    if (cub.format != CoefFormat::Signed) {
      throw std::invalid_argument("flatten: expected signed cuboids");
    }
    total += cub.side * cub.side * cub.depth;
  }
  std::vector<double> out;
  out.reserve(total);
  for (const CoefficientCuboid& cub : stage_outputs) {
    for (std::size_t ch = 0; ch < cub.depth; ++ch) {
      for (std::size_t r = 0; r < cub.side; ++r) {
        for (std::size_t c = 0; c < cub.side; ++c) {
          out.push_back(cub.at(r, c, ch));
        }
      }
    }
  }
  return out;
}

AnovaAccumulator::AnovaAccumulator(std::size_t dim, int class_count)
    : dim_(dim),
      class_count_(class_count),
      counts_(class_count, 0),
      means_(static_cast<std::size_t>(class_count) * dim, 0.0),
      m2_(static_cast<std::size_t>(class_count) * dim, 0.0) {}

void AnovaAccumulator::add(std::span<const double> features, int label) {
  if (features.size() != dim_) {
    throw std::invalid_argument("anova: feature length mismatch");
  }
  if (label < 0 || label >= class_count_) {
    throw std::invalid_argument("anova: label outside class range");
  }
  const double n = static_cast<double>(++counts_[label]);
  double* mean = means_.data() + static_cast<std::size_t>(label) * dim_;
  double* m2 = m2_.data() + static_cast<std::size_t>(label) * dim_;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double delta = features[j] - mean[j];
    mean[j] += delta / n;
    m2[j] += delta * (features[j] - mean[j]);
  }
}

void AnovaAccumulator::merge(const AnovaAccumulator& other) {
  if (other.dim_ != dim_ || other.class_count_ != class_count_) {
    throw std::invalid_argument("anova: accumulator shape mismatch");
  }
  for (int c = 0; c < class_count_; ++c) {
    const double na = static_cast<double>(counts_[c]);
    const double nb = static_cast<double>(other.counts_[c]);
    if (nb == 0.0) continue;
    double* mean = means_.data() + static_cast<std::size_t>(c) * dim_;
    double* m2 = m2_.data() + static_cast<std::size_t>(c) * dim_;
    const double* omean = other.means_.data() + static_cast<std::size_t>(c) * dim_;
    const double* om2 = other.m2_.data() + static_cast<std::size_t>(c) * dim_;
    if (na == 0.0) {
      std::copy_n(omean, dim_, mean);
      std::copy_n(om2, dim_, m2);
    } else {
      const double n = na + nb;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double delta = omean[j] - mean[j];
        m2[j] += om2[j] + delta * delta * na * nb / n;
        mean[j] += delta * (nb / n);
      }
    }
    counts_[c] += other.counts_[c];
  }
}

AnovaRanking AnovaAccumulator::finish(double keep_fraction) const {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("anova: keep fraction outside (0,1]");
  }
  std::int64_t n = 0;
  int present = 0;
  for (int c = 0; c < class_count_; ++c) {
    if (counts_[c] == 0) continue;
    if (counts_[c] < 2) {
      throw std::invalid_argument("anova: class " + std::to_string(c) +
                                  " has fewer than 2 samples");
    }
    ++present;
    n += counts_[c];
  }
  if (present < 2) throw std::invalid_argument("anova: fewer than 2 classes present");

  const double df_between = present - 1;
  const double df_within = static_cast<double>(n - present);
  const double inf = std::numeric_limits<double>::infinity();

  AnovaRanking out;
  out.f_scores.resize(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    double grand = 0.0;
    for (int c = 0; c < class_count_; ++c) {
      grand += static_cast<double>(counts_[c]) *
               means_[static_cast<std::size_t>(c) * dim_ + j];
    }
    grand /= static_cast<double>(n);
    double ssb = 0.0;
    double ssw = 0.0;
    for (int c = 0; c < class_count_; ++c) {
      if (counts_[c] == 0) continue;
      const double nc = static_cast<double>(counts_[c]);
      const double mean = means_[static_cast<std::size_t>(c) * dim_ + j];
      ssb += nc * (mean - grand) * (mean - grand);
      ssw += std::max(m2_[static_cast<std::size_t>(c) * dim_ + j], 0.0);
    }
    const double sst = ssb + ssw;
    // Scatter below 1e-12 of the raw second moment is rounding noise, not
    // signal (a constant feature with a nonzero offset produces such dust).
    const double ref = sst + static_cast<double>(n) * grand * grand;
    double f;
    if (sst <= 0.0 || ref <= 0.0) {
      f = 0.0;  // constant feature everywhere
    } else if (ssw <= 1e-12 * ref) {
      // Dead within-class variance: +inf sentinel when classes still differ.
      f = ssb <= 1e-12 * ref ? 0.0 : inf;
    } else {
      f = (ssb / df_between) / (ssw / df_within);
    }
    out.f_scores[j] = f;
  }

  std::vector<std::uint32_t> order(dim_);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return out.f_scores[a] > out.f_scores[b];
  });
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(dim_)));
  out.selected.assign(order.begin(), order.begin() + std::min(keep, dim_));
  return out;
}

AnovaRanking fit_anova(const Matrix& vectors, std::span<const int> labels,
                       int class_count, double keep_fraction) {
  if (vectors.rows != labels.size()) {
    throw std::invalid_argument("fit_anova: row/label count mismatch");
  }
  AnovaAccumulator acc(vectors.cols, class_count);
  for (std::size_t i = 0; i < vectors.rows; ++i) acc.add(vectors.row(i), labels[i]);
  return acc.finish(keep_fraction);
}

Reducer fit_reducer(const Matrix& selected_vectors, std::size_t output_dim) {
  const std::size_t n = selected_vectors.rows;
  const std::size_t dim = selected_vectors.cols;
  if (n < 2) throw std::invalid_argument("fit_reducer: need >= 2 samples");
  if (output_dim < 1 || output_dim > dim) {
    throw std::invalid_argument("fit_reducer: output dim " +
                                std::to_string(output_dim) + " outside [1," +
                                std::to_string(dim) + "]");
  }

  Reducer red;
  red.output_dim = output_dim;
  if (n >= dim) {
    CovarianceAccumulator acc(dim);
    for (std::size_t i = 0; i < n; ++i) acc.accumulate(selected_vectors.row(i));
    red.basis = truncate(eigen_decompose(acc), TruncationPolicy::keep_count(output_dim));
    return red;
  }
  SnapshotEigen fit = snapshot_eigen(selected_vectors);
  if (fit.rank < output_dim) {
    throw std::invalid_argument("fit_reducer: sample rank " +
                                std::to_string(fit.rank) + " below output dim " +
                                std::to_string(output_dim));
  }
  EigenBasis basis;
  basis.dim = dim;
  basis.mean = std::move(fit.mean);
  basis.eigenvalues.assign(fit.eigenvalues.begin(),
                           fit.eigenvalues.begin() + output_dim);
  basis.rows.assign(fit.rows.begin(), fit.rows.begin() + output_dim * dim);
  apply_sign_convention(basis.rows, output_dim, dim);
  red.basis = std::move(basis);
  return red;
}

std::vector<double> apply_selection(const AnovaRanking& ranking,
                                    std::span<const double> flat) {
  if (flat.size() != ranking.f_scores.size()) {
    throw std::invalid_argument("apply_selection: layout mismatch");
  }
  std::vector<double> out(ranking.selected.size());
  for (std::size_t i = 0; i < ranking.selected.size(); ++i) {
    out[i] = flat[ranking.selected[i]];
  }
  return out;
}

std::vector<double> apply_reducer(const Reducer& reducer,
                                  std::span<const double> selected) {
  const EigenBasis& b = reducer.basis;
  if (selected.size() != b.dim) {
    throw std::invalid_argument("apply_reducer: dimension mismatch");
  }
  std::vector<double> centered(b.dim);
  for (std::size_t j = 0; j < b.dim; ++j) centered[j] = selected[j] - b.mean[j];
  std::vector<double> out(reducer.output_dim, 0.0);
  for (std::size_t i = 0; i < reducer.output_dim; ++i) {
    const double* row = b.rows.data() + i * b.dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < b.dim; ++j) acc += row[j] * centered[j];
    out[i] = acc;
  }
  return out;
}

Reducer reducer_prefix(const Reducer& full, std::size_t output_dim) {
  if (output_dim > full.output_dim) {
    throw std::invalid_argument("reducer_prefix: dim exceeds fitted reducer");
  }
  Reducer red;
  red.output_dim = output_dim;
  red.basis.dim = full.basis.dim;
  red.basis.mean = full.basis.mean;
  red.basis.eigenvalues.assign(full.basis.eigenvalues.begin(),
                               full.basis.eigenvalues.begin() + output_dim);
  red.basis.rows.assign(full.basis.rows.begin(),
                        full.basis.rows.begin() + output_dim * full.basis.dim);
  return red;
}

Matrix apply_reducer_matrix(const Reducer& reducer, const Matrix& selected) {
  const EigenBasis& b = reducer.basis;
  if (selected.cols != b.dim) {
    throw std::invalid_argument("apply_reducer_matrix: dimension mismatch");
  }
  Matrix out(selected.rows, reducer.output_dim);
  std::vector<double> centered(b.dim);
  for (std::size_t i = 0; i < selected.rows; ++i) {
    const double* src = selected.row(i).data();
    for (std::size_t j = 0; j < b.dim; ++j) centered[j] = src[j] - b.mean[j];
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < reducer.output_dim; ++k) {
      const double* row = b.rows.data() + k * b.dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < b.dim; ++j) acc += row[j] * centered[j];
      dst[k] = acc;
    }
  }
  return out;
}

std::vector<double> FeaturePipeline::apply(std::span<const double> flat) const {
  if (flat.size() != layout.size()) {
    throw std::invalid_argument("pipeline: flattened length " +
                                std::to_string(flat.size()) + " != layout " +
                                std::to_string(layout.size()));
  }
  return apply_reducer(reducer, apply_selection(ranking, flat));
}

}  // namespace saak
