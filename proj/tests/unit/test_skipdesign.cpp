#include "deglab/error.hpp"
#include "deglab/skipdesign.hpp"

#include <doctest.h>

#include <cmath>

using namespace deglab;

TEST_CASE("degraded skips") {
  for (int k : {128, 64, 32, 16, 8, 4, 2, 1}) {
    const Matrix s = degraded_skip(128, k, 3);
    CAPTURE(k);
    CHECK(numerical_rank(s) == k);
    for (Eigen::Index c = 0; c < 128; ++c) CHECK(std::abs(s.col(c).norm() - 1.0) < 1e-14);
  }
  const Matrix full = degraded_skip(16, 16, 1);
  CHECK(max_abs(full.transpose() * full - Matrix::Identity(16, 16)) < 1e-10);
  const Matrix one = degraded_skip(16, 1, 1);
  for (Eigen::Index c = 1; c < 16; ++c) CHECK(max_abs(one.col(c) - one.col(0)) == 0.0);

  // k = n / 4 equals two rounds of copying the first half onto the second half.
  Matrix halved = degraded_skip(16, 16, 9);
  for (int round = 0; round < 2; ++round) {
    const Eigen::Index half = 16 >> (round + 1);
    for (Eigen::Index c = 0; c < 16; ++c)
      if (c % (2 * half) >= half) halved.col(c) = halved.col(c - half);
  }
  CHECK(max_abs(halved - degraded_skip(16, 4, 9)) == 0.0);

  CHECK_THROWS_AS(degraded_skip(12, 5, 0), Error);
  CHECK(numerical_rank(degraded_skip(12, 3, 0)) == 3);
}

TEST_CASE("designed skips") {
  for (double tau : {0.0, 0.01, 0.1}) {
    const DesignedSkip d = designed_skip(128, tau, 5);
    const SimilarityReport r = verify_similarity(d.sigma, d.t, d.o);
    CAPTURE(tau);
    CHECK(r.residual < 1e-8);
    CHECK(r.passed);
    CHECK(std::abs(std::abs(r.det_sigma) - 1.0) < 1e-6);
    CHECK(std::abs(r.det_sigma - r.det_o) < 1e-6);
  }
  const DesignedSkip zero = designed_skip(32, 0.0, 2);
  CHECK(max_abs(zero.sigma.transpose() * zero.sigma - Matrix::Identity(32, 32)) < 1e-10);
  CHECK(max_abs(zero.t - Matrix::Identity(32, 32)) < 1e-12);

  SUBCASE("perturbed sigma fails") {
    const DesignedSkip d = designed_skip(16, 0.1, 3);
    Rng r(1);
    const Matrix noisy = d.sigma + gaussian_matrix(16, 16, r, 1e-4);
    CHECK_FALSE(verify_similarity(noisy, d.t, d.o).passed);
  }
}

TEST_CASE("eigenvector correlation spectrum") {
  const CorrelationSpectrum z = eigvec_correlation_spectrum(0.0, 16, 1);
  for (Eigen::Index i = 0; i < 16; ++i) CHECK(z.lambda[i] == 1.0);
  const CorrelationSpectrum c = eigvec_correlation_spectrum(0.1, 16, 1);
  CHECK(c.lambda[10] == doctest::Approx(std::exp(-1.0)));
  CHECK(c.positive_definite);
}

// Lambda_min = exp(-127 tau) underflows relative to machine epsilon for tau >= 0.5,
// so Cholesky on the recomputed R is expected to fail there.
TEST_CASE("recomputed correlation stays positive definite at n = 128") {
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (double tau : {0.5, 1.0, 5.0}) {
      const CorrelationSpectrum s = eigvec_correlation_spectrum(tau, 128, seed);
      CAPTURE(tau);
      CHECK(s.positive_definite);
    }
}

TEST_CASE("off-diagonal mass of R grows with tau") {
  double prev = -1.0;
  for (double tau : {0.0, 0.01, 0.05, 0.1, 0.5, 1.0}) {
    const DesignedSkip d = designed_skip(32, tau, 4);
    Matrix off = d.r;
    off.diagonal().setZero();
    CHECK(off.norm() >= prev);
    prev = off.norm();
  }
}

TEST_CASE("hyper skip bank") {
  const auto bank = hyper_skip_bank(128, 5, 7);
  REQUIRE(bank.size() == 3);
  for (const auto& q : bank) CHECK(numerical_rank(q) == 32);
  const auto small = hyper_skip_bank(8, 4, 7);
  for (const auto& q : small) {
    CHECK(numerical_rank(q) == 2);
    for (Eigen::Index c = 2; c < 8; ++c) CHECK(max_abs(q.col(c) - q.col(c % 2)) == 0.0);
  }
  CHECK(max_abs(small[0] - small[1]) > 0.0);
  CHECK_THROWS_AS(hyper_skip_bank(10, 4, 0), Error);
}

TEST_CASE("build_skip") {
  CHECK(max_abs(build_skip({SkipKind::identity, 5, 0, 0.0, 0}) - Matrix::Identity(5, 5)) == 0.0);
  const Matrix q = build_skip({SkipKind::dense_orthogonal, 6, 0, 0.0, 3});
  CHECK(max_abs(q.transpose() * q - Matrix::Identity(6, 6)) < 1e-10);
  CHECK(parse_skip_kind("designed") == SkipKind::designed);
  CHECK_THROWS_AS(parse_skip_kind("bogus"), Error);
  CHECK_THROWS_AS(build_skip({SkipKind::designed, 4, 0, -1.0, 0}), Error);
}
