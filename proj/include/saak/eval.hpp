#pragma once

#include <functional>
#include <vector>

#include "saak/classifier.hpp"
#include "saak/dataset.hpp"
#include "saak/features.hpp"
#include "saak/transform.hpp"

namespace saak {

// Mean absolute cosine similarity between paired kernels, one value per
// stage; `compared` counts the kernels entering each average.
struct SimilarityReport {
  std::vector<double> per_stage;
  std::vector<std::size_t> compared;
};

// Fraction of test images whose predicted class matches the label.
double accuracy(const SaakCascade& cascade, const FeaturePipeline& pipeline,
                const LinearModel& model, const Dataset& test);

// Same metric for an arbitrary predictor (test stubs, baselines).
double accuracy(const std::function<int(const Image&)>& predict, const Dataset& test);

// Pairs kernel i of `a` with kernel i of `b` per stage (eigenvalue-rank
// order) and averages |cos| over the first min(K'_a, K'_b) kernels. With
// `greedy` each kernel of `a` instead takes its best remaining match in `b`.
SimilarityReport kernel_similarity(const SaakCascade& a, const SaakCascade& b,
                                   bool greedy = false);

struct ReconError {
  double max_abs = 0.0;
  double rmse = 0.0;
};

// Forward to the final stage in position format, invert, compare.
ReconError reconstruction_error(const Image& image, const SaakCascade& cascade);

}  // namespace saak
