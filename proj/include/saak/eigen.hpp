#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "saak/covariance.hpp"
#include "saak/matrix.hpp"

namespace saak {

// Orthonormal basis from a symmetric eigendecomposition. Eigenvalues are
// non-increasing; each eigenvector is a row, sign-fixed so its
// largest-magnitude entry is positive (lowest index wins ties).
struct EigenBasis {
  std::size_t dim = 0;
  std::vector<double> mean;         // dim
  std::vector<double> eigenvalues;  // kept(), non-increasing, >= 0
  std::vector<double> rows;         // kept() x dim, row-major

  std::size_t kept() const { return eigenvalues.size(); }
  std::span<const double> row(std::size_t i) const {
    return {rows.data() + i * dim, dim};
  }
};

struct TruncationPolicy {
  enum class Kind { KeepAll, KeepCount, EnergyFraction };
  Kind kind = Kind::KeepAll;
  std::size_t count = 0;
  double tau = 0.0;

  static TruncationPolicy all() { return {}; }
  static TruncationPolicy keep_count(std::size_t k) {
    return {Kind::KeepCount, k, 0.0};
  }
  // Keeps kernels whose eigenvalue exceeds tau * (total eigenvalue sum),
  // never fewer than one.
  static TruncationPolicy energy(double tau) {
    return {Kind::EnergyFraction, 0, tau};
  }
};

// Cyclic Jacobi sweeps on a symmetric matrix. Stops when the off-diagonal
// Frobenius norm drops below tol * ||A||_F or after max_sweeps.
struct JacobiResult {
  std::vector<double> values;   // unsorted
  std::vector<double> vectors;  // d x d, eigenvector i is row i
};
JacobiResult jacobi_eigensystem(std::span<const double> sym, std::size_t dim,
                                double tol = 1e-12, int max_sweeps = 100);

// Full decomposition of the accumulated population covariance; deterministic
// under the sign/tie convention plus 1e-10 output rounding.
EigenBasis eigen_decompose(const CovarianceAccumulator& acc);

// Decomposition of an explicit symmetric matrix with a given mean vector.
EigenBasis eigen_decompose_matrix(std::span<const double> sym,
                                  std::span<const double> mean, std::size_t dim);

EigenBasis truncate(const EigenBasis& basis, const TruncationPolicy& policy);

// Snapshot path for sample counts below the dimension: eigenpairs of the
// n x n Gram matrix mapped back to feature space and re-orthonormalized.
// Eigenvalues match the population covariance's; directions with relative
// eigenvalue below the internal rank cutoff are dropped.
struct SnapshotEigen {
  std::size_t rank = 0;
  double trace = 0.0;               // total eigenvalue mass
  std::vector<double> eigenvalues;  // rank entries, descending
  std::vector<double> rows;         // rank x dim
  std::vector<double> mean;         // dim
};
SnapshotEigen snapshot_eigen(const Matrix& samples);

// Sign convention: the peak-magnitude entry is made positive, with entries
// within 5% of the peak treated as tied and the lowest tied index deciding.
double sign_convention_factor(std::span<const double> row);
void apply_sign_convention(std::vector<double>& rows, std::size_t kept,
                           std::size_t dim);

// Rounds every entry to `step` granularity (determinism across accumulation
// orders).
void quantize(std::span<double> values, double step = 1e-10);

}  // namespace saak
