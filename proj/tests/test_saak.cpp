#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "saak/dataset.hpp"
#include "saak/rng.hpp"
#include "saak/synth.hpp"
#include "saak/transform.hpp"

using namespace saak;

namespace {

CoefficientCuboid make_cuboid(std::size_t side, std::size_t depth,
                              CoefFormat format = CoefFormat::Position) {
  CoefficientCuboid cub;
  cub.side = side;
  cub.depth = depth;
  cub.format = format;
  cub.values.assign(side * side * depth, 0.0);
  return cub;
}

Dataset random_images(std::size_t n, int side, std::uint64_t seed) {
  Dataset ds;
  ds.class_count = 10;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Image img;
    img.side = side;
    img.label = static_cast<int>(rng.below(10));
    img.pixels.resize(static_cast<std::size_t>(side) * side);
    for (double& v : img.pixels) v = rng.next_double();
    ds.images.push_back(std::move(img));
  }
  return ds;
}

Dataset synth_padded(std::size_t n, std::uint64_t seed) {
  return pad_dataset(synth_dataset(n, seed), 32);
}

double patch_energy(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("extract_patches indexing") {
  SUBCASE("4x4 raster with entries 0..15") {
    CoefficientCuboid cub = make_cuboid(4, 1);
    std::iota(cub.values.begin(), cub.values.end(), 0.0);
    const auto patches = extract_patches(cub);
    REQUIRE(patches.size() == 4);
    CHECK(patches[0] == std::vector<double>{0, 1, 4, 5});
    CHECK(patches[1] == std::vector<double>{2, 3, 6, 7});
    CHECK(patches[2] == std::vector<double>{8, 9, 12, 13});
    CHECK(patches[3] == std::vector<double>{10, 11, 14, 15});
  }
  SUBCASE("2x2x3 cuboid gives one vector of length 12, channels per pixel") {
    CoefficientCuboid cub = make_cuboid(2, 3);
    std::iota(cub.values.begin(), cub.values.end(), 0.0);
    const auto patches = extract_patches(cub);
    REQUIRE(patches.size() == 1);
    CHECK(patches[0] ==
          std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  }
  SUBCASE("32x32 image gives 256 vectors of length 4") {
    const Image img = pad_to(synth_digit(3, 5, 0), 32);
    const auto patches = extract_patches(image_cuboid(img));
    REQUIRE(patches.size() == 256);
    for (const auto& p : patches) CHECK(p.size() == 4);
  }
  SUBCASE("odd side throws") {
    CHECK_THROWS_AS(extract_patches(make_cuboid(3, 1)), std::invalid_argument);
  }
}

TEST_CASE("fit_stage basics") {
  SUBCASE("repeated identical patch: one kept kernel, zero eigenvalues") {
    std::vector<std::vector<double>> patches(10, std::vector<double>{1, 2, 3, 4});
    const StageKernels lossy = fit_stage(patches, TruncationPolicy::energy(0.5), false);
    CHECK(lossy.signed_depth() == 1);
    for (double ev : lossy.basis.eigenvalues) CHECK(ev == 0.0);
    const StageKernels lossless = fit_stage(patches, TruncationPolicy::all(), true);
    for (double ev : lossless.basis.eigenvalues) CHECK(ev == 0.0);
    CHECK(lossless.signed_depth() == 4);
  }
  SUBCASE("lossless stage-1 fit spans R^4") {
    const Dataset ds = random_images(8, 4, 3);
    std::vector<std::vector<double>> patches;
    for (const Image& img : ds.images) {
      for (auto& p : extract_patches(image_cuboid(img))) patches.push_back(std::move(p));
    }
    const StageKernels k = fit_stage(patches, TruncationPolicy::all(), true);
    CHECK(k.signed_depth() == 4);
    CHECK(k.position_depth() == 8);
    CHECK_FALSE(k.completion.has_value());
  }
  SUBCASE("fewer than 2 patches throws") {
    std::vector<std::vector<double>> one(1, std::vector<double>{1, 2, 3, 4});
    CHECK_THROWS_AS(fit_stage(one, TruncationPolicy::all(), true),
                    std::invalid_argument);
  }
}

TEST_CASE("forward_stage sign/position identity and linearity") {
  const Dataset ds = random_images(6, 8, 17);
  std::vector<std::vector<double>> patches;
  for (const Image& img : ds.images) {
    for (auto& p : extract_patches(image_cuboid(img))) patches.push_back(std::move(p));
  }
  StageKernels k = fit_stage(patches, TruncationPolicy::all(), true);
  k.stage = 1;

  SUBCASE("position pairs satisfy p*n = 0 and p - n = y") {
    const CoefficientCuboid in = image_cuboid(ds.images[0]);
    const auto [sgn, pos] = forward_stage(in, k);
    REQUIRE(pos.depth == 2 * sgn.depth);
    for (std::size_t r = 0; r < sgn.side; ++r) {
      for (std::size_t c = 0; c < sgn.side; ++c) {
        for (std::size_t i = 0; i < sgn.depth; ++i) {
          const double p = pos.at(r, c, 2 * i);
          const double n = pos.at(r, c, 2 * i + 1);
          CHECK(p >= 0.0);
          CHECK(n >= 0.0);
          CHECK(p * n == 0.0);
          CHECK(p - n == doctest::Approx(sgn.at(r, c, i)).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("zero input with zero mean maps to zero") {
    StageKernels zk = k;
    std::fill(zk.basis.mean.begin(), zk.basis.mean.end(), 0.0);
    const CoefficientCuboid zero = make_cuboid(8, 1);
    const auto [sgn, pos] = forward_stage(zero, zk);
    for (double v : sgn.values) CHECK(v == 0.0);
    for (double v : pos.values) CHECK(v == 0.0);
  }
  SUBCASE("depth mismatch throws") {
    CHECK_THROWS_AS(forward_stage(make_cuboid(8, 2), k), std::invalid_argument);
  }
}

TEST_CASE("lossless cascade obeys the 8^p channel law and spatial halving") {
  const Dataset ds = random_images(6, 32, 23);
  const SaakCascade cascade = fit_cascade(ds, 5, CascadePolicy::lossless());
  REQUIRE(cascade.stage_count() == 5);

  std::size_t expect_depth = 1;
  for (int p = 0; p < 5; ++p) {
    expect_depth *= 8;
    CHECK(cascade.stages[p].position_depth() == expect_depth);
  }

  const auto signed_stages = forward_cascade(ds.images[0], cascade);
  const std::size_t sides[] = {16, 8, 4, 2, 1};
  for (int p = 0; p < 5; ++p) {
    CHECK(signed_stages[p].side == sides[p]);
    CHECK(signed_stages[p].depth == cascade.stages[p].signed_depth());
  }
}

TEST_CASE("single-stage cascade on 2x2 images") {
  const Dataset ds = random_images(12, 2, 31);
  const SaakCascade cascade = fit_cascade(ds, 1, CascadePolicy::lossless());
  const auto stages = forward_cascade(ds.images[0], cascade);
  REQUIRE(stages.size() == 1);
  CHECK(stages[0].side == 1);
  CHECK(stages[0].depth == 4);
}

TEST_CASE("lossless round trips") {
  SUBCASE("single stage, accumulator path") {
    const Dataset ds = random_images(40, 8, 7);
    std::vector<std::vector<double>> patches;
    for (const Image& img : ds.images) {
      for (auto& p : extract_patches(image_cuboid(img))) patches.push_back(std::move(p));
    }
    StageKernels k = fit_stage(patches, TruncationPolicy::all(), true);
    k.stage = 1;
    const CoefficientCuboid in = image_cuboid(ds.images[1]);
    const CoefficientCuboid back = inverse_stage(forward_stage(in, k).second, k);
    for (std::size_t i = 0; i < in.values.size(); ++i) {
      CHECK(back.values[i] == doctest::Approx(in.values[i]).epsilon(1e-9));
    }
  }
  SUBCASE("five-stage cascade with completion stages") {
    const Dataset train = synth_padded(24, 77);
    const SaakCascade cascade = fit_cascade(train, 5, CascadePolicy::lossless());
    // Stages 4 and 5 must have taken the snapshot path (patch dim exceeds
    // available patches) and carry completions.
    CHECK(cascade.stages[4].completion.has_value());
    const Image probe = pad_to(synth_digit(8, 99, 5), 32);  // unseen image
    const CoefficientCuboid pos = forward_to_position(probe, cascade);
    const Image back = inverse_cascade(pos, cascade);
    double max_err = 0.0;
    for (std::size_t i = 0; i < probe.pixels.size(); ++i) {
      max_err = std::max(max_err, std::abs(back.pixels[i] - probe.pixels[i]));
    }
    CHECK(max_err < 1e-7);
  }
}

TEST_CASE("lossy rank-1 population reconstructs exactly with one kernel") {
  // Patches x = mean + t*v lie on a line; projecting on the leading kernel
  // loses nothing. Oracle: explicit projection arithmetic.
  const std::vector<double> mean = {0.5, 0.25, -0.5, 1.0};
  std::vector<double> v = {0.5, 0.5, -0.5, 0.5};  // unit
  std::vector<std::vector<double>> patches;
  Rng rng(5);
  for (int i = 0; i < 32; ++i) {
    const double t = rng.uniform(-2.0, 2.0);
    std::vector<double> x(4);
    for (int j = 0; j < 4; ++j) x[j] = mean[j] + t * v[j];
    patches.push_back(std::move(x));
  }
  StageKernels k = fit_stage(patches, TruncationPolicy::keep_count(1), false);
  k.stage = 1;
  REQUIRE(k.signed_depth() == 1);

  CoefficientCuboid in = make_cuboid(2, 1);
  in.values = patches[3];
  const CoefficientCuboid back = inverse_stage(forward_stage(in, k).second, k);
  // Oracle: x_hat = mu + v v^T (x - mu) equals x exactly for x on the line.
  for (int j = 0; j < 4; ++j) {
    CHECK(back.values[j] == doctest::Approx(in.values[j]).epsilon(1e-9));
  }
}

TEST_CASE("zero position cuboid reconstructs the stage mean") {
  const Dataset ds = random_images(30, 4, 3);
  std::vector<std::vector<double>> patches;
  for (const Image& img : ds.images) {
    for (auto& p : extract_patches(image_cuboid(img))) patches.push_back(std::move(p));
  }
  StageKernels k = fit_stage(patches, TruncationPolicy::all(), true);
  k.stage = 1;
  CoefficientCuboid zero = make_cuboid(1, k.position_depth());
  const CoefficientCuboid back = inverse_stage(zero, k);
  for (int j = 0; j < 4; ++j) {
    CHECK(back.values[j] == doctest::Approx(k.basis.mean[j]).epsilon(1e-12));
  }
}

TEST_CASE("energy and distance preservation of the lossless transform") {
  const Dataset ds = random_images(50, 4, 13);
  std::vector<std::vector<double>> patches;
  for (const Image& img : ds.images) {
    for (auto& p : extract_patches(image_cuboid(img))) patches.push_back(std::move(p));
  }
  StageKernels k = fit_stage(patches, TruncationPolicy::all(), true);
  k.stage = 1;

  std::vector<std::vector<double>> signed_vecs;
  std::vector<std::vector<double>> centered;
  for (std::size_t i = 0; i < 10; ++i) {
    CoefficientCuboid in = make_cuboid(2, 1);
    in.values = patches[i];
    const auto [sgn, pos] = forward_stage(in, k);
    signed_vecs.push_back(sgn.values);
    std::vector<double> c(4);
    for (int j = 0; j < 4; ++j) c[j] = patches[i][j] - k.basis.mean[j];
    centered.push_back(std::move(c));
  }
  SUBCASE("per-patch energy is preserved") {
    for (std::size_t i = 0; i < signed_vecs.size(); ++i) {
      const double ey = patch_energy(signed_vecs[i]);
      const double ex = patch_energy(centered[i]);
      CHECK(ey == doctest::Approx(ex).epsilon(1e-9));
    }
  }
  SUBCASE("pairwise distances are preserved") {
    for (std::size_t i = 0; i < signed_vecs.size(); ++i) {
      for (std::size_t j = i + 1; j < signed_vecs.size(); ++j) {
        double dy = 0.0, dx = 0.0;
        for (std::size_t m = 0; m < 4; ++m) {
          dy += (signed_vecs[i][m] - signed_vecs[j][m]) *
                (signed_vecs[i][m] - signed_vecs[j][m]);
          dx += (centered[i][m] - centered[j][m]) * (centered[i][m] - centered[j][m]);
        }
        CHECK(std::sqrt(dy) == doctest::Approx(std::sqrt(dx)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("lossy kernels are the leading lossless kernels") {
  const Dataset ds = random_images(60, 8, 19);
  std::vector<std::vector<double>> patches;
  for (const Image& img : ds.images) {
    for (auto& p : extract_patches(image_cuboid(img))) patches.push_back(std::move(p));
  }
  const StageKernels lossless = fit_stage(patches, TruncationPolicy::all(), true);
  const StageKernels lossy = fit_stage(patches, TruncationPolicy::keep_count(2), false);
  REQUIRE(lossy.signed_depth() == 2);
  for (std::size_t i = 0; i < 2 * 4; ++i) {
    CHECK(lossy.basis.rows[i] == lossless.basis.rows[i]);
  }
}

TEST_CASE("injected keep counts flow through the cascade") {
  const Dataset train = synth_padded(220, 3);
  const std::vector<std::size_t> counts = {4, 5, 8, 7, 9};
  const SaakCascade cascade =
      fit_cascade(train, 5, CascadePolicy::lossy_counts(counts));
  CHECK(cascade.kept_counts() == counts);
  // Signed coefficient total: 4*256 + 5*64 + 8*16 + 7*4 + 9*1.
  const auto stages = forward_cascade(train.images[0], cascade);
  std::size_t total = 0;
  for (const auto& s : stages) total += s.side * s.side * s.depth;
  CHECK(total == 1509);
}

TEST_CASE("cascade shape validation") {
  const Dataset train = random_images(8, 16, 2);
  CHECK_THROWS_AS(fit_cascade(train, 5, CascadePolicy::lossless()),
                  std::invalid_argument);
  const SaakCascade cascade = fit_cascade(train, 4, CascadePolicy::lossless());
  const Dataset other = random_images(1, 32, 2);
  CHECK_THROWS_AS(forward_cascade(other.images[0], cascade), std::invalid_argument);
  CoefficientCuboid bad = make_cuboid(1, 3);
  CHECK_THROWS_AS(inverse_cascade(bad, cascade), std::invalid_argument);
}
