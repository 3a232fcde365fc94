#include <cmath>

#include "doctest.h"
#include "saak/classifier.hpp"
#include "saak/errors.hpp"
#include "saak/model_io.hpp"
#include "saak/rng.hpp"

using namespace saak;

namespace {

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs two_blobs(std::size_t per_class, double separation, std::uint64_t seed) {
  Blobs b{Matrix(2 * per_class, 2), {}};
  Rng rng(seed);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int cls = i < per_class ? 0 : 1;
    b.x.at(i, 0) = separation * cls + 0.3 * rng.normal();
    b.x.at(i, 1) = separation * cls + 0.3 * rng.normal();
    b.y.push_back(cls);
  }
  return b;
}

}  // namespace

TEST_CASE("linearly separable blobs train to full accuracy") {
  const Blobs b = two_blobs(100, 4.0, 11);
  const LinearModel model = train_classifier(b.x, b.y, 2, {});
  std::size_t correct = 0;
  for (std::size_t i = 0; i < b.x.rows; ++i) {
    if (model.predict(b.x.row(i)) == b.y[i]) ++correct;
  }
  CHECK(correct == b.x.rows);
}

TEST_CASE("random labels generalize at chance level") {
  Rng rng(23);
  const int classes = 10;
  Matrix train(500, 10), heldout(500, 10);
  std::vector<int> train_y(500), heldout_y(500);
  for (std::size_t i = 0; i < 500; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      train.at(i, j) = rng.normal();
      heldout.at(i, j) = rng.normal();
    }
    train_y[i] = static_cast<int>(rng.below(classes));
    heldout_y[i] = static_cast<int>(rng.below(classes));
  }
  const LinearModel model = train_classifier(train, train_y, classes, {});
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    if (model.predict(heldout.row(i)) == heldout_y[i]) ++correct;
  }
  // Permutation-test bound: chance is 10%, allow up to 20%.
  CHECK(static_cast<double>(correct) / 500.0 <= 0.20);
}

TEST_CASE("predict is a lowest-id argmax") {
  LinearModel model;
  model.dim = 2;
  model.class_count = 2;
  model.feat_mean = {0.0, 0.0};
  model.feat_scale = {1.0, 1.0};
  model.weights = {1.0, 0.0, 0.0, 1.0};  // class 0: e1, class 1: e2
  model.biases = {0.0, 0.0};

  SUBCASE("constructed argmax") {
    CHECK(model.predict(std::vector<double>{1.0, 0.0}) == 0);
    CHECK(model.predict(std::vector<double>{0.0, 1.0}) == 1);
  }
  SUBCASE("uniform zero model breaks ties toward class 0") {
    model.weights = {0.0, 0.0, 0.0, 0.0};
    CHECK(model.predict(std::vector<double>{0.7, -0.3}) == 0);
  }
  SUBCASE("positive rescaling of all scores never changes predictions") {
    Rng rng(3);
    LinearModel scaled = model;
    for (double& w : scaled.weights) w *= 7.5;
    for (double& b : scaled.biases) b *= 7.5;
    for (int trial = 0; trial < 50; ++trial) {
      const std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
      CHECK(model.predict(x) == scaled.predict(x));
    }
  }
  SUBCASE("adding a constant to every class score changes nothing") {
    Rng rng(5);
    LinearModel shifted = model;
    shifted.biases = {3.25, 3.25};
    for (int trial = 0; trial < 50; ++trial) {
      const std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
      CHECK(model.predict(x) == shifted.predict(x));
    }
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(model.predict(std::vector<double>{1.0}), std::invalid_argument);
  }
}

TEST_CASE("training is deterministic down to the serialized bytes") {
  const Blobs b = two_blobs(60, 2.0, 7);
  const LinearModel m1 = train_classifier(b.x, b.y, 2, {});
  const LinearModel m2 = train_classifier(b.x, b.y, 2, {});
  CHECK(classifier_bytes(m1) == classifier_bytes(m2));
  ClassifierConfig other;
  other.seed = 43;
  const LinearModel m3 = train_classifier(b.x, b.y, 2, other);
  CHECK(classifier_bytes(m1) != classifier_bytes(m3));
}

TEST_CASE("training lowers the regularized hinge objective below the zero model") {
  const Blobs b = two_blobs(80, 1.5, 19);
  const LinearModel model = train_classifier(b.x, b.y, 2, {});
  for (int cls = 0; cls < 2; ++cls) {
    // The zero model scores 0 everywhere: objective exactly 1 (mean hinge).
    CHECK(hinge_objective(model, cls, b.x, b.y) <= 1.0);
  }
}

TEST_CASE("zero-variance feature dimensions get scale 1") {
  Matrix x(6, 2);
  std::vector<int> y = {0, 0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < 6; ++i) {
    x.at(i, 0) = static_cast<double>(y[i]);
    x.at(i, 1) = 5.0;  // constant
  }
  const LinearModel model = train_classifier(x, y, 2, {});
  CHECK(model.feat_scale[1] == 1.0);
}

TEST_CASE("training error paths") {
  Matrix x(4, 2);
  std::vector<int> one_class = {0, 0, 0, 0};
  CHECK_THROWS_AS(train_classifier(x, one_class, 2, {}), std::invalid_argument);
  std::vector<int> y = {0, 0, 1, 1};
  Matrix bad = x;
  bad.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train_classifier(bad, y, 2, {}), NumericError);
  std::vector<int> out_of_range = {0, 1, 2, 1};
  CHECK_THROWS_AS(train_classifier(x, out_of_range, 2, {}), std::invalid_argument);
}
