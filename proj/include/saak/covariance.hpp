#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saak {

// Streaming second-order statistics: one-pass mean/comoment updates with an
// associative merge for parallel reduction. Covariance uses the population
// convention (divide by n).
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(std::size_t dim);

  void accumulate(std::span<const double> sample);
  void merge(const CovarianceAccumulator& other);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }

  // Full symmetric d x d matrix, row-major.
  std::vector<double> covariance() const;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> scatter_;  // comoment, upper triangle maintained
};

}  // namespace saak
