#include "deglab/linalg.hpp"

#include "deglab/error.hpp"
#include "deglab/numfmt.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace deglab {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorKind::config, "Rng::below called with bound 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(below(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stddev * rng.normal();
  return m;
}

Vector gaussian_vector(Eigen::Index size, Rng& rng, double stddev) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = stddev * rng.normal();
  return v;
}

Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::invalid_dimension, "orthogonal matrix dimension must be >= 1");
  const Matrix g = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

Matrix cholesky(const Matrix& s) {
  if (s.rows() != s.cols()) throw Error(ErrorKind::shape, "cholesky needs a square matrix");
  const Eigen::Index n = s.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-10)
        throw Error(ErrorKind::decomposition_failure,
                    "input is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");

  Matrix t = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = s(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= t(j, k) * t(j, k);
    if (!(pivot > 0.0))
      throw Error(ErrorKind::decomposition_failure,
                  "non-positive pivot " + format_double(pivot) + " at index " + std::to_string(j),
                  static_cast<std::size_t>(j));
    const double d = std::sqrt(pivot);
    t(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= t(i, k) * t(j, k);
      t(i, j) = acc / d;
    }
  }
  return t;
}

Matrix solve_triangular(const Matrix& t, const Matrix& b, Triangle side) {
  if (t.rows() != t.cols() || t.rows() != b.rows())
    throw Error(ErrorKind::shape, "solve_triangular: incompatible shapes");
  const Eigen::Index n = t.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (t(i, i) == 0.0)
      throw Error(ErrorKind::singular_matrix, "zero diagonal entry at index " + std::to_string(i),
                  static_cast<std::size_t>(i));

  Matrix x = b;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    if (side == Triangle::lower) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double acc = x(i, c);
        for (Eigen::Index k = 0; k < i; ++k) acc -= t(i, k) * x(k, c);
        x(i, c) = acc / t(i, i);
      }
    } else {
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        double acc = x(i, c);
        for (Eigen::Index k = i + 1; k < n; ++k) acc -= t(i, k) * x(k, c);
        x(i, c) = acc / t(i, i);
      }
    }
  }
  return x;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::Index numerical_rank(const Matrix& m, double tol) {
  Eigen::FullPivLU<Matrix> lu(m);
  lu.setThreshold(tol);
  return lu.rank();
}

double determinant(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::shape, "determinant needs a square matrix");
  return Eigen::PartialPivLU<Matrix>(m).determinant();
}

Vector symmetric_eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::shape, "eigenvalues need a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

DenseOperator::DenseOperator(Matrix m) : matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols()) throw Error(ErrorKind::shape, "operator matrix must be square");
}

Vector DenseOperator::apply(const Vector& v) const {
  if (v.size() != matrix_.cols()) throw Error(ErrorKind::shape, "operator dimension mismatch");
  return matrix_ * v;
}

}  // namespace deglab
