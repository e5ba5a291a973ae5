#pragma once

// Dense real linear algebra: matrix aliases over Eigen, a reproducible random
// stream, Haar-random orthogonal matrices, Cholesky and triangular solves.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace deglab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// splitmix64 finalizer applied to (base, stream); used to give every
/// independent consumer (init, shuffling, probes, ...) its own seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Random stream over std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniforms take the top 53 bits; Gaussians use Box-Muller
/// (std::normal_distribution is implementation-defined, so it is avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev = 1.0);
Vector gaussian_vector(Eigen::Index size, Rng& rng, double stddev = 1.0);

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// each column of Q multiplied by the sign of the matching diagonal of R.
Matrix random_orthogonal(Eigen::Index n, Rng& rng);

/// Lower-triangular T with T T^T = s. Throws decomposition_failure naming the
/// first non-positive pivot.
Matrix cholesky(const Matrix& s);

enum class Triangle { lower, upper };

/// Solves t X = b for triangular t by substitution.
Matrix solve_triangular(const Matrix& t, const Matrix& b, Triangle side);

/// Largest absolute entry.
double max_abs(const Matrix& m);

/// Rank by fully pivoted elimination; pivots below tol * max|m| count as zero.
Eigen::Index numerical_rank(const Matrix& m, double tol = 1e-10);

/// Determinant via partially pivoted LU.
double determinant(const Matrix& m);

/// Eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const Matrix& m);

/// A symmetric linear map v -> A v over R^dim, applied without materializing A.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index dim() const = 0;
  virtual Vector apply(const Vector& v) const = 0;
};

/// Wraps an explicit matrix as a LinearOperator.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix m);
  Eigen::Index dim() const override { return matrix_.rows(); }
  Vector apply(const Vector& v) const override;

 private:
  Matrix matrix_;
};

}  // namespace deglab
