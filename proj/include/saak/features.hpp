#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "saak/eigen.hpp"
#include "saak/matrix.hpp"
#include "saak/transform.hpp"

namespace saak {

// One flattened-feature coordinate: which stage/channel/pixel it came from.
struct FeatureEntry {
  std::uint32_t stage = 0;
  std::uint32_t channel = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  bool operator==(const FeatureEntry&) const = default;
};

// Flattening order: stage ascending, channel ascending, row-major spatial.
struct FeatureLayout {
  std::vector<FeatureEntry> entries;

  static FeatureLayout from(const SaakCascade& cascade);
  std::size_t size() const { return entries.size(); }
  bool operator==(const FeatureLayout&) const = default;
};

// Concatenates the signed cuboids of one cascade pass in layout order.
std::vector<double> flatten(const std::vector<CoefficientCuboid>& stage_outputs);

// Per-feature one-way ANOVA F scores and the kept index set.
struct AnovaRanking {
  std::vector<double> f_scores;         // +inf sentinel for zero within-class
                                        // variance with between-class spread
  std::vector<std::uint32_t> selected;  // ceil(rho*total) indices, ordered by
                                        // (F desc, index asc)
};

// Mergeable per-class moment accumulator backing fit_anova. Keeps Welford
// mean/M2 pairs per (class, feature) so within-class scatter stays accurate
// under large common offsets.
class AnovaAccumulator {
 public:
  AnovaAccumulator(std::size_t dim, int class_count);
  void add(std::span<const double> features, int label);
  void merge(const AnovaAccumulator& other);
  AnovaRanking finish(double keep_fraction) const;

  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  int class_count_;
  std::vector<std::int64_t> counts_;  // per class
  std::vector<double> means_;         // class_count x dim
  std::vector<double> m2_;            // class_count x dim
};

AnovaRanking fit_anova(const Matrix& vectors, std::span<const int> labels,
                       int class_count, double keep_fraction);

// PCA over the selected-feature space; keeps the top output_dim components.
struct Reducer {
  EigenBasis basis;  // output_dim rows over the selected space
  std::size_t output_dim = 0;
};

Reducer fit_reducer(const Matrix& selected_vectors, std::size_t output_dim);

std::vector<double> apply_selection(const AnovaRanking& ranking,
                                    std::span<const double> flat);
std::vector<double> apply_reducer(const Reducer& reducer,
                                  std::span<const double> selected);
Matrix apply_reducer_matrix(const Reducer& reducer, const Matrix& selected);

// Leading-prefix view of a fitted reducer (PCA rows are nested).
Reducer reducer_prefix(const Reducer& full, std::size_t output_dim);

// Fitted selection + reduction, applied to flattened signed coefficients.
struct FeaturePipeline {
  FeatureLayout layout;
  AnovaRanking ranking;
  Reducer reducer;

  std::vector<double> apply(std::span<const double> flat) const;
};

}  // namespace saak
