#include <cmath>
#include <cstring>

#include "doctest.h"
#include "oracles.hpp"
#include "saak/covariance.hpp"
#include "saak/eigen.hpp"
#include "saak/errors.hpp"
#include "saak/rng.hpp"

using namespace saak;

namespace {

std::vector<std::vector<double>> random_samples(std::size_t n, std::size_t d,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& s : out) {
    for (double& v : s) v = rng.uniform(-1.0, 1.0);
  }
  return out;
}

std::vector<double> random_psd(std::size_t d, std::uint64_t seed) {
  // A^T A / d from a random square factor.
  Rng rng(seed);
  std::vector<double> a(d * d);
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  std::vector<double> psd(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += a[k * d + i] * a[k * d + j];
      psd[i * d + j] = s / static_cast<double>(d);
    }
  }
  return psd;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("two-sample covariance matches the hand-computed population value") {
  CovarianceAccumulator acc(2);
  acc.accumulate(std::vector<double>{0.0, 0.0});
  acc.accumulate(std::vector<double>{2.0, 2.0});
  CHECK(acc.mean()[0] == doctest::Approx(1.0));
  CHECK(acc.mean()[1] == doctest::Approx(1.0));
  const std::vector<double> cov = acc.covariance();
  for (double v : cov) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("single sample gives zero covariance") {
  CovarianceAccumulator acc(3);
  acc.accumulate(std::vector<double>{1.0, -2.0, 5.0});
  for (double v : acc.covariance()) CHECK(v == 0.0);
}

TEST_CASE("accumulate dimension mismatch throws") {
  CovarianceAccumulator acc(3);
  CHECK_THROWS_AS(acc.accumulate(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("merge equals the two-pass covariance oracle") {
  const auto samples = random_samples(100, 6, 77);
  CovarianceAccumulator left(6), right(6);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (i < 37 ? left : right).accumulate(samples[i]);
  }
  left.merge(right);
  const oracle::Covariance expect = oracle::two_pass_covariance(samples);
  CHECK(left.count() == 100);
  CHECK(max_abs_diff(left.mean(), expect.mean) < 1e-12);
  CHECK(max_abs_diff(left.covariance(), expect.cov) < 1e-10);

  // merge(acc(A), acc(B)) == acc(A u B)
  CovarianceAccumulator all(6);
  for (const auto& s : samples) all.accumulate(s);
  CHECK(max_abs_diff(left.covariance(), all.covariance()) < 1e-12);
}

TEST_CASE("diagonal covariance decomposes trivially") {
  const std::vector<double> cov = {3.0, 0.0, 0.0, 1.0};
  const std::vector<double> mean = {0.0, 0.0};
  const EigenBasis basis = eigen_decompose_matrix(cov, mean, 2);
  CHECK(basis.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(basis.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(basis.rows[0] == doctest::Approx(1.0));
  CHECK(basis.rows[1] == doctest::Approx(0.0));
  CHECK(basis.rows[2] == doctest::Approx(0.0));
  CHECK(basis.rows[3] == doctest::Approx(1.0));
}

TEST_CASE("2x2 symmetric case matches the characteristic-polynomial solution") {
  // [[2,1],[1,2]]: eigenvalues 3 and 1, eigenvectors (1,1)/sqrt2, (1,-1)/sqrt2.
  const std::vector<double> cov = {2.0, 1.0, 1.0, 2.0};
  const std::vector<double> mean = {0.0, 0.0};
  const EigenBasis basis = eigen_decompose_matrix(cov, mean, 2);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(basis.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(basis.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(basis.rows[0] == doctest::Approx(s).epsilon(1e-9));
  CHECK(basis.rows[1] == doctest::Approx(s).epsilon(1e-9));
  CHECK(basis.rows[2] == doctest::Approx(s).epsilon(1e-9));
  CHECK(basis.rows[3] == doctest::Approx(-s).epsilon(1e-9));
}

TEST_CASE("random PSD matrices match the greedy-Jacobi oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t d = 2 + seed % 7;
    const std::vector<double> psd = random_psd(d, seed * 131);
    const std::vector<double> mean(d, 0.0);
    const EigenBasis basis = eigen_decompose_matrix(psd, mean, d);
    const oracle::Eigen expect = oracle::greedy_jacobi(psd, d);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(basis.eigenvalues[i] == doctest::Approx(expect.values[i]).epsilon(1e-8));
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dot += basis.rows[i * d + j] * expect.vectors[i * d + j];
      }
      CHECK(std::abs(dot) > 1.0 - 1e-8);
    }
  }
}

TEST_CASE("reconstruction and orthonormality of decompositions") {
  const auto samples = random_samples(64, 6, 5);
  CovarianceAccumulator acc(6);
  for (const auto& s : samples) acc.accumulate(s);
  const EigenBasis basis = eigen_decompose(acc);
  const std::vector<double> cov = acc.covariance();

  SUBCASE("V^T Lambda V reproduces the covariance") {
    double cmax = 1.0;
    for (double v : cov) cmax = std::max(cmax, std::abs(v));
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        double rec = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
          rec += basis.eigenvalues[k] * basis.rows[k * 6 + i] * basis.rows[k * 6 + j];
        }
        CHECK(std::abs(rec - cov[i * 6 + j]) <= 1e-8 * cmax);
      }
    }
  }
  SUBCASE("row Gram is the identity to 1e-9") {
    for (std::size_t i = 0; i < basis.kept(); ++i) {
      for (std::size_t j = 0; j < basis.kept(); ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
          dot += basis.rows[i * 6 + k] * basis.rows[j * 6 + k];
        }
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-9);
      }
    }
  }
  SUBCASE("energy compaction: eigenvalue sum equals the trace") {
    double trace = 0.0;
    for (std::size_t i = 0; i < 6; ++i) trace += cov[i * 6 + i];
    double sum = 0.0;
    double prev_partial = 0.0;
    for (double ev : basis.eigenvalues) {
      CHECK(ev >= 0.0);
      sum += ev;
      CHECK(sum >= prev_partial);  // partial sums non-decreasing
      prev_partial = sum;
    }
    CHECK(sum == doctest::Approx(trace).epsilon(1e-8));
  }
  SUBCASE("non-finite covariance throws") {
    std::vector<double> bad = cov;
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eigen_decompose_matrix(bad, basis.mean, 6), NumericError);
  }
}

TEST_CASE("truncation policies") {
  EigenBasis basis;
  basis.dim = 4;
  basis.mean.assign(4, 0.0);
  basis.eigenvalues = {0.5, 0.3, 0.15, 0.05};
  basis.rows.assign(16, 0.0);
  for (int i = 0; i < 4; ++i) basis.rows[i * 4 + i] = 1.0;

  SUBCASE("energy threshold keeps kernels above tau * total") {
    const EigenBasis kept = truncate(basis, TruncationPolicy::energy(0.1));
    CHECK(kept.kept() == 3);
    CHECK(kept.eigenvalues == std::vector<double>{0.5, 0.3, 0.15});
  }
  SUBCASE("energy threshold never keeps fewer than one") {
    const EigenBasis kept = truncate(basis, TruncationPolicy::energy(0.9));
    CHECK(kept.kept() == 1);
  }
  SUBCASE("keep-count == d is the identity") {
    const EigenBasis kept = truncate(basis, TruncationPolicy::keep_count(4));
    CHECK(kept.eigenvalues == basis.eigenvalues);
    CHECK(kept.rows == basis.rows);
  }
  SUBCASE("invalid policies throw") {
    CHECK_THROWS_AS(truncate(basis, TruncationPolicy::energy(0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(truncate(basis, TruncationPolicy::energy(1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(truncate(basis, TruncationPolicy::keep_count(5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(truncate(basis, TruncationPolicy::keep_count(0)),
                    std::invalid_argument);
  }
}

TEST_CASE("accumulation order does not change the decomposition bytes") {
  const auto samples = random_samples(48, 5, 1234);
  CovarianceAccumulator fwd(5), rev(5), split_a(5), split_b(5);
  for (const auto& s : samples) fwd.accumulate(s);
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) rev.accumulate(*it);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (i % 2 ? split_a : split_b).accumulate(samples[i]);
  }
  split_b.merge(split_a);

  const EigenBasis a = eigen_decompose(fwd);
  const EigenBasis b = eigen_decompose(rev);
  const EigenBasis c = eigen_decompose(split_b);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(std::memcmp(a.rows.data(), b.rows.data(), a.rows.size() * 8) == 0);
  CHECK(std::memcmp(a.rows.data(), c.rows.data(), a.rows.size() * 8) == 0);
  CHECK(std::memcmp(a.eigenvalues.data(), b.eigenvalues.data(),
                    a.eigenvalues.size() * 8) == 0);
  CHECK(std::memcmp(a.eigenvalues.data(), c.eigenvalues.data(),
                    a.eigenvalues.size() * 8) == 0);
}

TEST_CASE("snapshot path matches the accumulator path on the kept spectrum") {
  const auto samples = random_samples(10, 24, 99);  // n < d forces the Gram path
  Matrix m(10, 24);
  for (std::size_t i = 0; i < 10; ++i) {
    std::copy(samples[i].begin(), samples[i].end(), m.row(i).begin());
  }
  const SnapshotEigen snap = snapshot_eigen(m);
  CovarianceAccumulator acc(24);
  for (const auto& s : samples) acc.accumulate(s);
  const EigenBasis full = eigen_decompose(acc);
  REQUIRE(snap.rank <= 9);
  for (std::size_t i = 0; i < snap.rank; ++i) {
    CHECK(snap.eigenvalues[i] == doctest::Approx(full.eigenvalues[i]).epsilon(1e-8));
  }
  // Remaining covariance eigenvalues are numerically zero.
  for (std::size_t i = snap.rank; i < full.kept(); ++i) {
    CHECK(full.eigenvalues[i] < 1e-8 * full.eigenvalues[0]);
  }
}
