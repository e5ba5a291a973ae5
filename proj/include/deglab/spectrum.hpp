#pragma once

// Stochastic estimates of the first four spectral moments of a symmetric
// operator and a grid fit of a narrow Gaussian + skew-normal mixture to them.

#include "deglab/linalg.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace deglab {

using Moments = std::array<double, 4>;  // m1..m4, non-central

struct SpectralMoments {
  Moments m{};
  Moments stderr_{};  // standard error over probes (0 when P = 1)
  Eigen::Index dim = 0;
  int probes = 0;

  double m1() const noexcept { return m[0]; }
  double m2() const noexcept { return m[1]; }
  double m3() const noexcept { return m[2]; }
  double m4() const noexcept { return m[3]; }
};

/// Probe p draws r ~ N(0, I) from derive_seed(seed, p), then v1 = H r and
/// v2 = H v1 give m1 = r.v1/N, m2 = v1.v1/N, m3 = v1.v2/N, m4 = v2.v2/N.
/// Exactly 2P operator applications. Probes run on up to `jobs` threads; the
/// result does not depend on the thread count.
SpectralMoments estimate_moments(const LinearOperator& op, int probes, std::uint64_t seed, int jobs = 1);
SpectralMoments estimate_moments(const LinearOperator& op, int probes, Rng& rng, int jobs = 1);

/// Raw moments E[X^k], k = 1..4, of SN(xi, omega, alpha).
Moments skew_normal_moments(double xi, double omega, double alpha);

/// Density of SN(xi, omega, alpha) (omega > 0).
double skew_normal_pdf(double x, double xi, double omega, double alpha);

inline constexpr double kBulkStd = 0.001;

struct MixtureParams {
  double w = 0.0;
  double xi = 0.0;
  double omega = 1.0;
  double alpha = 0.0;
};

/// w * SN(xi, omega, alpha) + (1 - w) * N(0, kBulkStd^2).
Moments mixture_moments(const MixtureParams& p);

/// The tail probability is the skew-normal weight.
inline double tail_probability(const MixtureParams& p) noexcept { return p.w; }

struct GridSpec {
  std::vector<double> w;
  std::vector<double> alpha;
  std::vector<double> xi;
  std::vector<double> omega;

  /// w log-spaced in [1e-9, 1e-3], alpha linear in [-100, 100], xi linear in
  /// [-10, 10], omega log-spaced in [0.1, 1000]; `points` per axis.
  static GridSpec standard(int points = 54);
  std::size_t size() const noexcept { return w.size() * alpha.size() * xi.size() * omega.size(); }
};

std::vector<double> linspace(double lo, double hi, int count);
std::vector<double> logspace(double lo, double hi, int count);

/// sum_k |model_k - target_k| / |target_k|; a denominator below 1e-300 is
/// replaced by 1.
double fit_objective(const Moments& model, const Moments& target) noexcept;

struct FitResult {
  MixtureParams params;
  double objective = 0.0;
  std::array<std::size_t, 4> index{};  // (w, alpha, xi, omega) grid indices
};

/// Exhaustive search over the grid, visiting (w, alpha, xi, omega) in
/// lexicographic index order; ties keep the smallest index. Throws
/// degenerate_target when every target moment is zero (or any is non-finite).
FitResult fit_mixture(const Moments& target, const GridSpec& grid, int jobs = 1);

std::string to_json(const SpectralMoments& m, const FitResult& fit, int epoch);

}  // namespace deglab
