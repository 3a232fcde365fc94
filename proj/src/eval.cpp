#include "saak/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saak {

double accuracy(const SaakCascade& cascade, const FeaturePipeline& pipeline,
                const LinearModel& model, const Dataset& test) {
  return accuracy(
      [&](const Image& img) {
        const std::vector<double> flat = flatten(forward_cascade(img, cascade));
        return model.predict(pipeline.apply(flat));
      },
      test);
}

double accuracy(const std::function<int(const Image&)>& predict, const Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("accuracy: empty test set");
  std::size_t correct = 0;
  for (const Image& img : test.images) {
    if (predict(img) == img.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

double abs_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(dot) / std::sqrt(na * nb);
}

}  // namespace

SimilarityReport kernel_similarity(const SaakCascade& a, const SaakCascade& b,
                                   bool greedy) {
  if (a.stage_count() != b.stage_count()) {
    throw std::invalid_argument("kernel_similarity: stage count mismatch");
  }
  SimilarityReport report;
  for (int p = 0; p < a.stage_count(); ++p) {
    const EigenBasis& ba = a.stages[p].basis;
    const EigenBasis& bb = b.stages[p].basis;
    if (ba.dim != bb.dim) {
      throw std::invalid_argument("kernel_similarity: stage " + std::to_string(p + 1) +
                                  " patch geometry mismatch (" +
                                  std::to_string(ba.dim) + " vs " +
                                  std::to_string(bb.dim) + ")");
    }
    const std::size_t count = std::min(ba.kept(), bb.kept());
    double sum = 0.0;
    if (greedy) {
      std::vector<bool> used(bb.kept(), false);
      for (std::size_t i = 0; i < count; ++i) {
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < bb.kept(); ++j) {
          if (used[j]) continue;
          const double c = abs_cosine(ba.row(i), bb.row(j));
          if (c > best) {
            best = c;
            arg = j;
          }
        }
        used[arg] = true;
        sum += best;
      }
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        sum += abs_cosine(ba.row(i), bb.row(i));
      }
    }
    report.per_stage.push_back(count > 0 ? sum / static_cast<double>(count) : 0.0);
    report.compared.push_back(count);
  }
  return report;
}

ReconError reconstruction_error(const Image& image, const SaakCascade& cascade) {
  const CoefficientCuboid pos = forward_to_position(image, cascade);
  const Image recon = inverse_cascade(pos, cascade);
  ReconError err;
  double sq = 0.0;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double d = std::abs(recon.pixels[i] - image.pixels[i]);
    err.max_abs = std::max(err.max_abs, d);
    sq += d * d;
  }
  err.rmse = std::sqrt(sq / static_cast<double>(image.pixels.size()));
  return err;
}

}  // namespace saak
