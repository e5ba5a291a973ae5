#include "deglab/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace deglab;

namespace {

ArchitectureConfig square_arch(int L, int n, SkipMode m = SkipMode::plain) {
  ArchitectureConfig a;
  a.hidden_layers = L;
  a.width = n;
  a.input_dim = n;
  a.class_count = 3;
  a.skip_mode = m;
  return a;
}

}  // namespace

TEST_CASE("incoming norms") {
  const auto a = square_arch(2, 5);
  ModelParams p = zero_params(a);
  p.weights[0] = Matrix::Identity(5, 5);
  const auto n = incoming_norms(p, a);
  CHECK(n[0] == 1.0);
  CHECK(n[1] == 0.0);

  const auto big = square_arch(2, 128);
  Rng r(1);
  const ModelParams g = init_params(big, InitScheme::glorot, r);
  CHECK(std::abs(incoming_norms(g, big)[1] - 1.0) < 0.05);
}

TEST_CASE("weight overlap") {
  CHECK(mean_positive_overlap(Matrix::Identity(4, 4)) == 0.0);
  Matrix same(3, 4);
  for (int c = 0; c < 4; ++c) same.col(c) << 1.0, -2.0, 0.5;
  CHECK(mean_positive_overlap(same) == doctest::Approx(1.0).epsilon(1e-15));
  Matrix scaled = same;
  scaled.col(2) *= 7.0;
  CHECK(mean_positive_overlap(scaled) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix zeros = Matrix::Zero(3, 3);
  zeros(0, 2) = 1.0;  // columns 0 and 1 zero, column 2 not
  CHECK(mean_positive_overlap(zeros) == doctest::Approx(1.0 / 3.0));
  CHECK(mean_positive_overlap(Matrix::Ones(3, 1)) == 0.0);

  // Rescaling a column by a positive factor never changes the statistic.
  Rng r(3);
  Matrix w = gaussian_matrix(10, 6, r);
  const double base = mean_positive_overlap(w);
  w.col(3) *= 4.5;
  CHECK(mean_positive_overlap(w) == doctest::Approx(base).epsilon(1e-12));

  // Pearson centres each vector first.
  Matrix shifted(3, 2);
  shifted << 1, 11, 2, 12, 3, 13;
  CHECK(mean_positive_overlap(shifted, OverlapKind::pearson) == doctest::Approx(1.0));

  // Glorot 128 x 128 against a Monte Carlo estimate of E[max(0, cos)] for
  // independent Gaussian pairs in R^128.
  const auto big = square_arch(2, 128);
  Rng gr(4);
  const ModelParams g = init_params(big, InitScheme::glorot, gr);
  Rng mc(5);
  double acc = 0.0;
  const int pairs = 20000;
  for (int i = 0; i < pairs; ++i) {
    const Vector x = gaussian_vector(128, mc), y = gaussian_vector(128, mc);
    acc += std::max(0.0, x.dot(y) / (x.norm() * y.norm()));
  }
  CHECK(std::abs(weight_overlap(g, big)[1] - acc / pairs) < 0.05 * acc / pairs);
}

TEST_CASE("zero responses") {
  const auto a = square_arch(3, 4);
  Rng r(2);
  Dataset d;
  d.features = (gaussian_matrix(10, 4, r).array().abs() + 0.1).matrix();
  d.labels.assign(10, 0);
  d.class_count = 3;
  CHECK(zero_response_prob(zero_params(a), a, d) == 1.0);

  ModelParams p = zero_params(a);
  for (int l = 0; l < 3; ++l) {
    p.weights[static_cast<std::size_t>(l)] = Matrix::Identity(4, 4);
    p.biases[static_cast<std::size_t>(l)].setConstant(0.5);
  }
  CHECK(zero_response_prob(p, a, d) == 0.0);
  CHECK(zero_response_prob(p, a, d, 3) == 0.0);

  // Residual nets count post-skip values: a dead unit whose skip input is
  // nonzero is not a zero response.
  const auto res = square_arch(2, 4, SkipMode::residual);
  ModelParams q = zero_params(res);
  q.weights[0] = Matrix::Identity(4, 4);
  const ForwardTrace t = forward(q, res, make_batch(d));
  const ZeroCount c = count_zero_responses(t);
  CHECK(c.total == 2 * 10 * 4);
  CHECK(c.zeros == 0);
}

TEST_CASE("activity gradients decay geometrically through a linear chain") {
  // Positive inputs and weights keep every ReLU active, so the chain is linear
  // and each hidden layer multiplies the backward signal by s.
  const int L = 6, n = 4;
  auto a = square_arch(L, n);
  ModelParams p = zero_params(a);
  const double s = 0.5;
  p.weights[0] = Matrix::Constant(n, n, 0.3);
  for (int l = 1; l < L; ++l) p.weights[static_cast<std::size_t>(l)] = s * Matrix::Identity(n, n);
  Rng r(6);
  p.weights[static_cast<std::size_t>(L)] = gaussian_matrix(n, 3, r);
  Batch b;
  b.inputs = (gaussian_matrix(5, n, r).array().abs() + 0.1).matrix();
  b.labels = {0, 1, 2, 0, 1};
  const BackwardResult back = backward(forward(p, a, b), p, a, b);
  const auto norms = activity_gradient_norms(back);
  REQUIRE(norms.size() == static_cast<std::size_t>(L));
  for (int l = 0; l + 1 < L; ++l) CHECK(norms[static_cast<std::size_t>(l)] / norms[static_cast<std::size_t>(l + 1)] == doctest::Approx(s).epsilon(1e-12));
  CHECK(norms.back() > 0.0);
}

TEST_CASE("snapshots and csv") {
  const auto a = square_arch(3, 5, SkipMode::residual);
  Rng r(7);
  const Dataset d = synthetic_clusters(3, 5, 8, 0.3, r);
  const ModelParams p = testing::random_params(a, 8);
  const Batch monitor = make_batch(head(d, 10));
  const SingularitySnapshot s = take_snapshot(2, p, a, d, monitor);
  CHECK(s.epoch == 2);
  CHECK(s.incoming_norm == incoming_norms(p, a));
  CHECK(s.overlap == weight_overlap(p, a));
  CHECK(s.zero_response_prob == zero_response_prob(p, a, d));
  CHECK(s.grad_norm.size() == 3);
  CHECK(s.zero_response_prob >= 0.0);
  CHECK(s.zero_response_prob <= 1.0);

  std::ostringstream out;
  write_metrics_csv(out, {s});
  CHECK(out.str().rfind("epoch,layer,mean_incoming_norm,mean_overlap,grad_norm,zero_response_prob\n", 0) == 0);
  std::istringstream in(out.str());
  const auto back = read_metrics_csv(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].incoming_norm == s.incoming_norm);
  CHECK(back[0].grad_norm == s.grad_norm);
  CHECK(back[0].zero_response_prob == s.zero_response_prob);
}
