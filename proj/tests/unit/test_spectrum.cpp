#include "deglab/error.hpp"
#include "deglab/spectrum.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <numbers>

using namespace deglab;

namespace {

// Quadrature oracle: E[X^k] of SN(xi, omega, alpha) by integrating the
// density written out here, not through the library.
double quad_moment(int k, double xi, double omega, double alpha) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double z) {
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-alpha * z / std::sqrt(2.0));
    return std::pow(xi + omega * z, k) * 2.0 * phi * cdf;
  };
  const double inf = std::numeric_limits<double>::infinity();
  // Split at the kink of Phi(alpha z) so large |alpha| stays well resolved.
  return gauss_kronrod<double, 61>::integrate(f, -inf, 0.0, 15, 1e-14) +
         gauss_kronrod<double, 61>::integrate(f, 0.0, inf, 15, 1e-14);
}

}  // namespace

TEST_CASE("skew-normal moments") {
  SUBCASE("alpha = 0 is Gaussian") {
    const double xi = -1.3, w = 0.7;
    const Moments m = skew_normal_moments(xi, w, 0.0);
    CHECK(m[0] == doctest::Approx(xi));
    CHECK(m[1] == doctest::Approx(xi * xi + w * w));
    CHECK(m[2] == doctest::Approx(xi * xi * xi + 3 * xi * w * w));
    CHECK(m[3] == doctest::Approx(std::pow(xi, 4) + 6 * xi * xi * w * w + 3 * std::pow(w, 4)));
  }
  SUBCASE("xi = 0, omega = 1, alpha = 1") {
    const Moments m = skew_normal_moments(0, 1, 1);
    CHECK(m[0] == doctest::Approx(std::sqrt(1 / std::numbers::pi)).epsilon(1e-14));
    CHECK(m[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(quad_moment(1, 0, 1, 1) - std::sqrt(1 / std::numbers::pi)) < 1e-12);
  }
  SUBCASE("omega = 0 is a point mass") {
    const Moments m = skew_normal_moments(2.0, 0.0, 5.0);
    CHECK(m == Moments{2.0, 4.0, 8.0, 16.0});
  }
  SUBCASE("density integrates to one") {
    using boost::math::quadrature::gauss_kronrod;
    const double inf = std::numeric_limits<double>::infinity();
    auto f = [](double x) { return skew_normal_pdf(x, 0.5, 2.0, -3.0); };
    CHECK(gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-13) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("quadrature sweep") {
    Rng r(2024);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double xi = r.uniform(-10, 10), alpha = r.uniform(-100, 100);
      const double omega = std::exp(r.uniform(std::log(0.1), std::log(1000.0)));
      const Moments m = skew_normal_moments(xi, omega, alpha);
      for (int k = 1; k <= 4; ++k) {
        const double q = quad_moment(k, xi, omega, alpha);
        worst = std::max(worst, std::abs(m[static_cast<std::size_t>(k - 1)] - q) / std::abs(q));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("mixture moments") {
  const Moments sn = skew_normal_moments(0.3, 2.0, 4.0);
  CHECK(mixture_moments({1.0, 0.3, 2.0, 4.0}) == sn);
  CHECK(mixture_moments({0.0, 0.3, 2.0, 4.0}) == Moments{0.0, 1e-6, 0.0, 3e-12});
  CHECK(mixture_moments({0.5, 0.0, 1.0, 0.0})[1] == doctest::Approx(0.5 + 0.5e-6).epsilon(1e-15));
  CHECK(tail_probability({1e-5, 0, 1, 0}) == 1e-5);
}

TEST_CASE("grid") {
  const GridSpec g = GridSpec::standard();
  CHECK(g.size() == 8503056);
  CHECK(g.w.front() == doctest::Approx(1e-9));
  CHECK(g.w.back() == doctest::Approx(1e-3));
  CHECK(g.alpha.front() == -100.0);
  CHECK(g.alpha.back() == 100.0);
  CHECK(g.xi.front() == -10.0);
  CHECK(g.omega.back() == doctest::Approx(1000.0));
  CHECK(std::abs(std::log(g.w[1] / g.w[0]) - std::log(g.w[53] / g.w[52])) < 1e-12);
}

TEST_CASE("fit objective guard") {
  CHECK(fit_objective({1, 2, 3, 4}, {1, 2, 3, 4}) == 0.0);
  CHECK(fit_objective({0.5, 1, 1, 1}, {0, 1, 1, 1}) == 0.5);
}

TEST_CASE("fit self-recovery on a reduced grid") {
  const GridSpec g = GridSpec::standard(9);
  Rng r(3);
  for (int t = 0; t < 15; ++t) {
    const std::array<std::size_t, 4> idx{r.below(9), r.below(9), r.below(9), r.below(9)};
    const MixtureParams p{g.w[idx[0]], g.xi[idx[2]], g.omega[idx[3]], g.alpha[idx[1]]};
    const FitResult f = fit_mixture(mixture_moments(p), g);
    CHECK(f.index == idx);
    CHECK(f.objective < 1e-12);
    CHECK(tail_probability(f.params) == p.w);
  }
}

TEST_CASE("0.1% moment perturbation keeps the fitted tail weight") {
  const GridSpec g = GridSpec::standard(9);
  Rng r(3);
  for (int t = 0; t < 15; ++t) {
    const std::array<std::size_t, 4> idx{r.below(9), r.below(9), r.below(9), r.below(9)};
    Moments target = mixture_moments({g.w[idx[0]], g.xi[idx[2]], g.omega[idx[3]], g.alpha[idx[1]]});
    for (auto& m : target) m *= 1.001;
    CHECK(fit_mixture(target, g).index[0] == idx[0]);
  }
}

// Exhaustive check of the full-grid stability claim. The alpha axis is nearly
// unidentifiable from four moments, so this is expected to fail.
TEST_CASE("0.1% moment perturbation keeps the full grid index") {
  const GridSpec g = GridSpec::standard(54);
  Rng r(3);
  int moved = 0;
  for (int t = 0; t < 4; ++t) {
    const std::array<std::size_t, 4> idx{r.below(54), r.below(54), r.below(54), r.below(54)};
    Moments target = mixture_moments({g.w[idx[0]], g.xi[idx[2]], g.omega[idx[3]], g.alpha[idx[1]]});
    for (auto& m : target) m *= 1.001;
    if (fit_mixture(target, g, 4).index != idx) ++moved;
  }
  CHECK(moved == 0);
}

TEST_CASE("fit is independent of thread count") {
  const GridSpec g = GridSpec::standard(12);
  const Moments target{0.01, 0.5, 0.2, 3.0};
  const FitResult a = fit_mixture(target, g, 1), b = fit_mixture(target, g, 4);
  CHECK(a.index == b.index);
  CHECK(a.objective == b.objective);
  CHECK(a.params.w >= 1e-9);
  CHECK(a.params.w <= 1e-3);
}

TEST_CASE("fit rejects all-zero targets") {
  try {
    fit_mixture({0, 0, 0, 0}, GridSpec::standard(3));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_target);
  }
}

TEST_CASE("moment estimator") {
  SUBCASE("identity operator") {
    const DenseOperator id(Matrix::Identity(1000, 1000));
    const SpectralMoments m = estimate_moments(id, 100, 7);
    for (double v : m.m) CHECK(std::abs(v - 1.0) < 0.05);
  }
  SUBCASE("zero operator") {
    const SpectralMoments m = estimate_moments(DenseOperator(Matrix::Zero(20, 20)), 5, 1);
    CHECK(m.m == Moments{0, 0, 0, 0});
  }
  SUBCASE("diag(1,2,3) within 3 standard errors, thread independent") {
    Matrix d = Matrix::Zero(30, 30);
    for (int i = 0; i < 30; ++i) d(i, i) = 1 + i % 3;
    const DenseOperator op(d);
    const SpectralMoments m = estimate_moments(op, 1000, 11);
    const Moments exact{2.0, 14.0 / 3.0, 12.0, 98.0 / 3.0};
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(m.m[k] - exact[k]) <= 3 * m.stderr_[k]);
    const SpectralMoments m4 = estimate_moments(op, 1000, 11, 4);
    CHECK(m4.m == m.m);
    CHECK(m.probes == 1000);
    CHECK(m.dim == 30);
  }
  SUBCASE("json output") {
    const SpectralMoments m = estimate_moments(DenseOperator(Matrix::Identity(4, 4)), 2, 1);
    const FitResult f = fit_mixture(m.m, GridSpec::standard(3));
    const auto j = nlohmann::json::parse(to_json(m, f, 3));
    for (const char* k : {"epoch", "m1", "m2", "m3", "m4", "w", "xi", "omega", "alpha", "objective", "probes"})
      CHECK(j.contains(k));
  }
}
