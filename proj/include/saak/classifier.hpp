#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "saak/matrix.hpp"

namespace saak {

struct ClassifierConfig {
  double lambda = 1e-4;
  int epochs = 20;
  std::uint64_t seed = 42;
};

// One-vs-rest linear max-margin classifier: hinge loss with L2 weight decay,
// trained by seeded epoch-shuffled subgradient descent with step 1/(lambda*t).
// Features are standardized with training statistics; zero-variance
// dimensions get scale 1.
struct LinearModel {
  std::size_t dim = 0;
  int class_count = 0;
  std::vector<double> feat_mean;   // dim
  std::vector<double> feat_scale;  // dim, > 0
  std::vector<double> weights;     // class_count x dim
  std::vector<double> biases;      // class_count
  ClassifierConfig config;

  std::vector<double> standardize(std::span<const double> x) const;
  std::vector<double> scores(std::span<const double> x) const;
  // Argmax over class scores; ties go to the lowest class id.
  int predict(std::span<const double> x) const;
};

LinearModel train_classifier(const Matrix& features, std::span<const int> labels,
                             int class_count, const ClassifierConfig& config);

// Regularized empirical objective (lambda/2)*||w||^2 + mean hinge for one
// one-vs-rest problem, on standardized features.
double hinge_objective(const LinearModel& model, int cls, const Matrix& features,
                       std::span<const int> labels);

}  // namespace saak
