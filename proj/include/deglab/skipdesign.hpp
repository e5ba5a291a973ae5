#pragma once

// Skip-connectivity matrices: identity, dense random orthogonal, degraded
// (k distinct orthonormal columns) and designed (unit-circle spectrum with
// correlated eigenvectors).

#include "deglab/linalg.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deglab {

enum class SkipKind { identity, dense_orthogonal, degraded, designed };

std::string to_string(SkipKind k);
SkipKind parse_skip_kind(std::string_view s);

struct SkipSpec {
  SkipKind kind = SkipKind::identity;
  int n = 1;
  int k = 0;         // degraded: number of distinct columns, must divide n
  double tau = 0.0;  // designed: eigenvalue decay of the eigenvector covariance
  std::uint64_t seed = 0;

  void validate() const;
};

/// Columns of a random orthogonal Q with column c replaced by column c mod k.
/// For k = n / 2^m this is exactly m rounds of copying the first half of the
/// columns onto the second half.
Matrix degraded_skip(int n, int k, std::uint64_t seed);

struct DesignedSkip {
  Matrix sigma;   // T O T^-1
  Matrix t;       // Cholesky factor of the correlation matrix R
  Matrix o;       // random orthogonal matrix sharing sigma's spectrum
  Matrix r;       // correlation matrix of the eigenvectors
  Vector lambda;  // exp(-tau (i - 1))
};

/// S = Q diag(lambda) Q^T, R = D^-1/2 S D^-1/2, R = T T^T, sigma = T O T^-1.
/// Q is drawn from derive_seed(seed, 0) and O from derive_seed(seed, 1).
/// T^-1 is applied by a triangular solve. Throws decomposition_failure when R
/// is not numerically positive definite.
DesignedSkip designed_skip(int n, double tau, std::uint64_t seed);

Matrix build_skip(const SkipSpec& spec);

struct SimilarityReport {
  double residual = 0.0;  // ||sigma T - T O||_inf (max entry)
  double tolerance = 1e-8;
  double det_sigma = 0.0;
  double det_o = 0.0;
  bool passed = false;
};

SimilarityReport verify_similarity(const Matrix& sigma, const Matrix& t, const Matrix& o, double tolerance = 1e-8);

struct CorrelationSpectrum {
  Vector lambda;      // construction spectrum exp(-tau (i - 1))
  Vector recomputed;  // eigenvalues of R, ascending
  bool positive_definite = false;
};

/// Never throws on loss of definiteness; reports it instead.
CorrelationSpectrum eigvec_correlation_spectrum(double tau, int n, std::uint64_t seed);

/// L - 2 matrices, each degraded(n / 4) with seed derive_seed(seed, k).
std::vector<Matrix> hyper_skip_bank(int n, int hidden_layers, std::uint64_t seed);

std::string to_json(const SimilarityReport& r);

}  // namespace deglab
