#include "saak/covariance.hpp"

#include <stdexcept>
#include <string>

namespace saak {

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim)
    : dim_(dim), mean_(dim, 0.0), scatter_(dim * dim, 0.0) {}

void CovarianceAccumulator::accumulate(std::span<const double> sample) {
  if (sample.size() != dim_) {
    throw std::invalid_argument("accumulate: sample length " +
                                std::to_string(sample.size()) + " != dim " +
                                std::to_string(dim_));
  }
  ++count_;
  const double inv_n = 1.0 / static_cast<double>(count_);
  // delta against the previous mean; the comoment update is the exact rank-1
  // term ((n-1)/n) * delta delta^T.
  std::vector<double> delta(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    delta[i] = sample[i] - mean_[i];
    mean_[i] += delta[i] * inv_n;
  }
  const double f = static_cast<double>(count_ - 1) * inv_n;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double fi = f * delta[i];
    double* row = scatter_.data() + i * dim_;
    for (std::size_t j = i; j < dim_; ++j) row[j] += fi * delta[j];
  }
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& other) {
  if (other.dim_ != dim_) {
    throw std::invalid_argument("merge: dimension mismatch");
  }
  if (other.count_ == 0) return;
  if (count_ == 0) {
    count_ = other.count_;
    mean_ = other.mean_;
    scatter_ = other.scatter_;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  std::vector<double> delta(dim_);
  for (std::size_t i = 0; i < dim_; ++i) delta[i] = other.mean_[i] - mean_[i];
  const double f = na * nb / n;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double fi = f * delta[i];
    double* row = scatter_.data() + i * dim_;
    const double* orow = other.scatter_.data() + i * dim_;
    for (std::size_t j = i; j < dim_; ++j) row[j] += orow[j] + fi * delta[j];
  }
  for (std::size_t i = 0; i < dim_; ++i) mean_[i] += delta[i] * (nb / n);
  count_ += other.count_;
}

std::vector<double> CovarianceAccumulator::covariance() const {
  std::vector<double> cov(dim_ * dim_, 0.0);
  if (count_ == 0) return cov;
  const double inv_n = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = i; j < dim_; ++j) {
      const double v = scatter_[i * dim_ + j] * inv_n;
      cov[i * dim_ + j] = v;
      cov[j * dim_ + i] = v;
    }
  }
  return cov;
}

}  // namespace saak
