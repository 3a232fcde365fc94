#include "saak/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "saak/errors.hpp"
#include "saak/rng.hpp"

namespace saak {

std::vector<double> LinearModel::standardize(std::span<const double> x) const {
  if (x.size() != dim) throw std::invalid_argument("standardize: dimension mismatch");
  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j) out[j] = (x[j] - feat_mean[j]) / feat_scale[j];
  return out;
}

std::vector<double> LinearModel::scores(std::span<const double> x) const {
  const std::vector<double> z = standardize(x);
  std::vector<double> s(class_count, 0.0);
  for (int c = 0; c < class_count; ++c) {
    const double* w = weights.data() + static_cast<std::size_t>(c) * dim;
    double acc = biases[c];
    for (std::size_t j = 0; j < dim; ++j) acc += w[j] * z[j];
    s[c] = acc;
  }
  return s;
}

int LinearModel::predict(std::span<const double> x) const {
  const std::vector<double> s = scores(x);
  int best = 0;
  for (int c = 1; c < class_count; ++c) {
    if (s[c] > s[best]) best = c;
  }
  return best;
}

LinearModel train_classifier(const Matrix& features, std::span<const int> labels,
                             int class_count, const ClassifierConfig& config) {
  const std::size_t n = features.rows;
  const std::size_t dim = features.cols;
  if (n < 2) throw std::invalid_argument("train_classifier: need >= 2 samples");
  if (labels.size() != n) {
    throw std::invalid_argument("train_classifier: label count mismatch");
  }
  for (double v : features.data) {
    if (!std::isfinite(v)) throw NumericError("train_classifier: non-finite feature");
  }
  int distinct = 0;
  {
    std::vector<bool> seen(class_count, false);
    for (int l : labels) {
      if (l < 0 || l >= class_count) {
        throw std::invalid_argument("train_classifier: label outside class range");
      }
      if (!seen[l]) {
        seen[l] = true;
        ++distinct;
      }
    }
  }
  if (distinct < 2) throw std::invalid_argument("train_classifier: single class");

  LinearModel model;
  model.dim = dim;
  model.class_count = class_count;
  model.config = config;
  model.feat_mean.assign(dim, 0.0);
  model.feat_scale.assign(dim, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = features.row(i).data();
    for (std::size_t j = 0; j < dim; ++j) model.feat_mean[j] += row[j];
  }
  for (double& m : model.feat_mean) m /= static_cast<double>(n);
  std::vector<double> var(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = features.row(i).data();
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = row[j] - model.feat_mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    model.feat_scale[j] = sd > 0.0 ? sd : 1.0;
  }

  Matrix z(n, dim);  // standardized once, shared by all per-class problems
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = features.row(i).data();
    double* dst = z.row(i).data();
    for (std::size_t j = 0; j < dim; ++j) {
      dst[j] = (row[j] - model.feat_mean[j]) / model.feat_scale[j];
    }
  }

  model.weights.assign(static_cast<std::size_t>(class_count) * dim, 0.0);
  model.biases.assign(class_count, 0.0);
  const double lambda = config.lambda;
  std::vector<std::size_t> order(n);

  for (int cls = 0; cls < class_count; ++cls) {
    double* w = model.weights.data() + static_cast<std::size_t>(cls) * dim;
    double b = 0.0;
    // Pegasos-style: shrink by (1 - 1/t), step 1/(lambda*t) on margin
    // violations. The bias rides along as an augmented constant-1 feature
    // (shrunk with the weights); an unshrunk bias would keep the huge t=1
    // step forever.
    std::size_t t = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng = Rng::substream(config.seed, (static_cast<std::uint64_t>(cls) << 32) |
                                                static_cast<std::uint64_t>(epoch));
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(order[i], order[j]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const std::size_t idx = order[i];
        const double y = labels[idx] == cls ? 1.0 : -1.0;
        const double* x = z.row(idx).data();
        double margin = b;
        for (std::size_t j = 0; j < dim; ++j) margin += w[j] * x[j];
        margin *= y;
        const double shrink = 1.0 - 1.0 / static_cast<double>(t);
        if (margin < 1.0) {
          const double step = eta * y;
          for (std::size_t j = 0; j < dim; ++j) w[j] = shrink * w[j] + step * x[j];
          b = shrink * b + step;
        } else {
          for (std::size_t j = 0; j < dim; ++j) w[j] *= shrink;
          b *= shrink;
        }
      }
    }
    model.biases[cls] = b;
  }
  return model;
}

double hinge_objective(const LinearModel& model, int cls, const Matrix& features,
                       std::span<const int> labels) {
  const std::size_t n = features.rows;
  const double* w = model.weights.data() + static_cast<std::size_t>(cls) * model.dim;
  double reg = model.biases[cls] * model.biases[cls];
  for (std::size_t j = 0; j < model.dim; ++j) reg += w[j] * w[j];
  reg *= 0.5 * model.config.lambda;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> z = model.standardize(features.row(i));
    double margin = model.biases[cls];
    for (std::size_t j = 0; j < model.dim; ++j) margin += w[j] * z[j];
    const double y = labels[i] == cls ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - y * margin);
  }
  return reg + loss / static_cast<double>(n);
}

}  // namespace saak
