#include "deglab/skipdesign.hpp"

#include "deglab/error.hpp"

#include <json.hpp>

#include <cmath>

namespace deglab {

std::string to_string(SkipKind k) {
  switch (k) {
    case SkipKind::identity: return "identity";
    case SkipKind::dense_orthogonal: return "dense_orthogonal";
    case SkipKind::degraded: return "degraded";
    case SkipKind::designed: return "designed";
  }
  return "identity";
}

SkipKind parse_skip_kind(std::string_view s) {
  if (s == "identity") return SkipKind::identity;
  if (s == "dense_orthogonal" || s == "dense-orthogonal" || s == "orthogonal") return SkipKind::dense_orthogonal;
  if (s == "degraded") return SkipKind::degraded;
  if (s == "designed") return SkipKind::designed;
  throw Error(ErrorKind::config, "unknown skip kind '" + std::string(s) + "'");
}

void SkipSpec::validate() const {
  if (n < 1) throw Error(ErrorKind::config, "skip dimension must be >= 1");
  if (kind == SkipKind::degraded && (k < 1 || k > n || n % k != 0))
    throw Error(ErrorKind::config, "degraded skip needs k dividing n (n=" + std::to_string(n) + ", k=" +
                                       std::to_string(k) + ")");
  if (kind == SkipKind::designed && !(tau >= 0.0)) throw Error(ErrorKind::config, "designed skip needs tau >= 0");
}

Matrix degraded_skip(int n, int k, std::uint64_t seed) {
  SkipSpec{SkipKind::degraded, n, k, 0.0, seed}.validate();
  Rng rng(seed);
  const Matrix q = random_orthogonal(n, rng);
  Matrix out(n, n);
  for (int c = 0; c < n; ++c) out.col(c) = q.col(c % k);
  return out;
}

namespace {

Matrix correlation_from(double tau, int n, std::uint64_t seed, Vector& lambda) {
  lambda.resize(n);
  for (int i = 0; i < n; ++i) lambda[i] = std::exp(-tau * i);
  Rng rq(derive_seed(seed, 0));
  const Matrix q = random_orthogonal(n, rq);
  const Matrix s = q * lambda.asDiagonal() * q.transpose();
  const Vector inv_sqrt = s.diagonal().cwiseSqrt().cwiseInverse();
  Matrix r = inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal();
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  return r;
}

}  // namespace

DesignedSkip designed_skip(int n, double tau, std::uint64_t seed) {
  SkipSpec{SkipKind::designed, n, 0, tau, seed}.validate();
  DesignedSkip d;
  d.r = correlation_from(tau, n, seed, d.lambda);
  d.t = cholesky(d.r);
  Rng ro(derive_seed(seed, 1));
  d.o = random_orthogonal(n, ro);
  // sigma T = T O  <=>  T^T sigma^T = (T O)^T, an upper-triangular system.
  const Matrix to = d.t * d.o;
  d.sigma = solve_triangular(d.t.transpose(), to.transpose(), Triangle::upper).transpose();
  return d;
}

Matrix build_skip(const SkipSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case SkipKind::identity: return Matrix::Identity(spec.n, spec.n);
    case SkipKind::dense_orthogonal: {
      Rng rng(spec.seed);
      return random_orthogonal(spec.n, rng);
    }
    case SkipKind::degraded: return degraded_skip(spec.n, spec.k, spec.seed);
    case SkipKind::designed: return designed_skip(spec.n, spec.tau, spec.seed).sigma;
  }
  return Matrix::Identity(spec.n, spec.n);
}

SimilarityReport verify_similarity(const Matrix& sigma, const Matrix& t, const Matrix& o, double tolerance) {
  if (sigma.rows() != sigma.cols() || t.rows() != sigma.rows() || t.cols() != sigma.cols() ||
      o.rows() != sigma.rows() || o.cols() != sigma.cols())
    throw Error(ErrorKind::shape, "similarity check needs square matrices of one size");
  SimilarityReport r;
  r.tolerance = tolerance;
  r.residual = max_abs(sigma * t - t * o);
  r.det_sigma = determinant(sigma);
  r.det_o = determinant(o);
  r.passed = std::isfinite(r.residual) && r.residual < tolerance;
  return r;
}

CorrelationSpectrum eigvec_correlation_spectrum(double tau, int n, std::uint64_t seed) {
  SkipSpec{SkipKind::designed, n, 0, tau, seed}.validate();
  CorrelationSpectrum c;
  const Matrix r = correlation_from(tau, n, seed, c.lambda);
  c.recomputed = symmetric_eigenvalues(r);
  try {
    (void)cholesky(r);
    c.positive_definite = true;
  } catch (const Error&) {
    c.positive_definite = false;
  }
  return c;
}

std::vector<Matrix> hyper_skip_bank(int n, int hidden_layers, std::uint64_t seed) {
  if (n < 4 || n % 4 != 0) throw Error(ErrorKind::config, "hyper skip bank needs width divisible by 4");
  std::vector<Matrix> bank;
  for (int k = 1; k <= hidden_layers - 2; ++k)
    bank.push_back(degraded_skip(n, n / 4, derive_seed(seed, static_cast<std::uint64_t>(k))));
  return bank;
}

std::string to_json(const SimilarityReport& r) {
  nlohmann::ordered_json j;
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["det_sigma"] = r.det_sigma;
  j["det_o"] = r.det_o;
  j["passed"] = r.passed;
  return j.dump(2);
}

}  // namespace deglab
