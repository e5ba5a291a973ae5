#include "deglab/error.hpp"
#include "deglab/hvp.hpp"
#include "deglab/lineardyn.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace deglab;

namespace {

double max_abs_state(const TwoModeState& s) {
  return std::max({s.a1.cwiseAbs().maxCoeff(), s.a2.cwiseAbs().maxCoeff(), s.b1.cwiseAbs().maxCoeff(),
                   s.b2.cwiseAbs().maxCoeff()});
}

// Fig S1b initial states: plain a = [1, 1]/sqrt 2, b = [1, -1]/sqrt 2; residual zeros.
TwoModeState s1b_plain() {
  const double h = 1.0 / std::numbers::sqrt2;
  return {Vector{{h, h}}, Vector{{h, h}}, Vector{{h, -h}}, Vector{{h, -h}}};
}

}  // namespace

TEST_CASE("two-mode right-hand side") {
  const TwoModeSystem sys = TwoModeSystem::standard();
  CHECK(sys.u1.dot(sys.u2) == doctest::Approx(0.0));
  CHECK(max_abs_state(two_mode_rhs(TwoModeState::zeros(2), sys, SkipMode::plain)) == 0.0);
  const TwoModeState ghost{-sys.v1, -sys.v2, -sys.u1, -sys.u2};
  CHECK(max_abs_state(two_mode_rhs(ghost, sys, SkipMode::residual)) == 0.0);
  const TwoModeState d = two_mode_rhs(TwoModeState::zeros(2), sys, SkipMode::residual);
  CHECK(d.a1[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(d.a1[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(two_mode_rhs(TwoModeState::zeros(2), sys, SkipMode::hyper_residual), Error);
}

TEST_CASE("two-mode integration") {
  const TwoModeSystem sys = TwoModeSystem::standard();
  SUBCASE("zero state is a plain fixed point") {
    const auto traj = integrate_two_mode(TwoModeState::zeros(2), sys, SkipMode::plain, 0.1, 50);
    CHECK(traj.size() == 51);
    for (const auto& s : traj) CHECK(max_abs_state(s) == 0.0);
  }
  SUBCASE("Fig S1a: residual reaches the threshold first") {
    Rng r(0);
    const TwoModeState init = TwoModeState::random(2, 1e-4, r);
    const int plain = iterations_to_threshold(integrate_two_mode(init, sys, SkipMode::plain, 0.1, 3000), sys, SkipMode::plain);
    const int res = iterations_to_threshold(integrate_two_mode(init, sys, SkipMode::residual, 0.1, 3000), sys, SkipMode::residual);
    REQUIRE(plain > 0);
    REQUIRE(res >= 0);
    CHECK(res < plain);
  }
  SUBCASE("halving the step about doubles the iteration count") {
    Rng r(1);
    const TwoModeState init = TwoModeState::random(2, 1e-4, r);
    const int n1 = iterations_to_threshold(integrate_two_mode(init, sys, SkipMode::plain, 0.1, 4000), sys, SkipMode::plain);
    const int n2 = iterations_to_threshold(integrate_two_mode(init, sys, SkipMode::plain, 0.05, 8000), sys, SkipMode::plain);
    REQUIRE(n1 > 0);
    CHECK(std::abs(static_cast<double>(n2) / n1 - 2.0) <= 0.5);
  }
  SUBCASE("divergence is reported with the iteration") {
    TwoModeState big = TwoModeState::zeros(2);
    big.a1.setConstant(1e3);
    big.b1.setConstant(1e3);
    try {
      integrate_two_mode(big, sys, SkipMode::plain, 10.0, 100);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::divergence);
      CHECK(e.index().has_value());
    }
  }
}

TEST_CASE("cooperative and competitive terms at the Fig S1b start") {
  const TwoModeSystem sys = TwoModeSystem::standard();
  // Residual: the two terms point along b1 + u1 and b2 + u2 (or the a
  // analogues), which start orthogonal.
  for (int eq = 0; eq < 4; ++eq) {
    const TwoModeTerms t = two_mode_terms(TwoModeState::zeros(2), sys, SkipMode::residual, eq);
    CHECK(std::abs(t.cooperative.dot(t.competitive)) < 1e-10);
  }
  // Plain: the term directions b1 and b2 coincide, so once the competitive
  // coefficient becomes nonzero the terms overlap.
  const TwoModeState p = s1b_plain();
  CHECK(p.b1.dot(p.b2) == doctest::Approx(1.0));
  const auto traj = integrate_two_mode(p, sys, SkipMode::plain, 0.01, 1);
  bool nonzero = false;
  for (int eq = 0; eq < 4; ++eq) {
    const TwoModeTerms t = two_mode_terms(traj.back(), sys, SkipMode::plain, eq);
    nonzero = nonzero || std::abs(t.cooperative.dot(t.competitive)) > 1e-6;
  }
  CHECK(nonzero);
}

TEST_CASE("mode-strength saddles have exactly zero rhs") {
  CHECK(mode_strength_rhs({Vector::Zero(2), 3.0, SkipMode::plain}).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mode_strength_rhs({Vector::Constant(2, -1.0), 3.0, SkipMode::residual}).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mode_strength_rhs({Vector{{-1.0, -2.0}}, 3.0, SkipMode::hyper_residual}).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mode_strength_rhs({Vector::Zero(5), 3.0, SkipMode::plain}).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mode_strength_rhs({Vector::Constant(5, -1.0), 3.0, SkipMode::residual}).cwiseAbs().maxCoeff() == 0.0);
  const Vector d = mode_strength_rhs({Vector::Zero(2), 3.0, SkipMode::residual});
  CHECK(d[0] == 2.0);
  CHECK(d[1] == 2.0);
}

TEST_CASE("mode-strength rhs is minus the energy gradient") {
  Rng r(3);
  for (SkipMode m : {SkipMode::plain, SkipMode::residual, SkipMode::hyper_residual})
    for (int t = 0; t < 10; ++t) {
      ModeStrengthState st{gaussian_vector(4, r, 0.5), 3.0, m};
      const Vector rhs = mode_strength_rhs(st);
      for (Eigen::Index i = 0; i < 4; ++i) {
        const double h = 1e-6;
        ModeStrengthState up = st, down = st;
        up.a[i] += h;
        down.a[i] -= h;
        const double fd = -(mode_energy(up) - mode_energy(down)) / (2 * h);
        CHECK(std::abs(fd - rhs[i]) <= 1e-8 * std::max(1.0, std::abs(rhs[i])));
      }
    }
}

TEST_CASE("reduced hessian") {
  Rng r(4);
  for (SkipMode m : {SkipMode::plain, SkipMode::residual, SkipMode::hyper_residual})
    for (int t = 0; t < 20; ++t) {
      const ModeStrengthState st{gaussian_vector(4, r, 0.5), 3.0, m};
      const Matrix fd = fd_hessian(
          [&](const Vector& a) { return Vector(-mode_strength_rhs({a, st.s, st.arch})); }, st.a, 1e-5);
      CHECK(max_abs(fd - reduced_hessian(st)) < 1e-6);
    }
  // Equal a_i, a_j: entries outside the {i, j} block agree and the block is symmetric.
  ModeStrengthState eq{Vector{{0.3, 0.3, -0.2}}, 3.0, SkipMode::residual};
  const Matrix h = reduced_hessian(eq);
  CHECK(h(2, 0) == doctest::Approx(h(2, 1)).epsilon(1e-14));
  CHECK(h(0, 0) == doctest::Approx(h(1, 1)).epsilon(1e-14));
  CHECK(h(0, 1) == h(1, 0));
  // On the solution manifold u = s the two columns coincide and the Hessian is singular.
  ModeStrengthState sol{Vector{{0.3, 0.3, 3.0 / 1.69 - 1.0}}, 3.0, SkipMode::residual};
  const Matrix hs = reduced_hessian(sol);
  CHECK(max_abs(hs.col(0) - hs.col(1)) < 1e-12);
  CHECK(std::abs(hs.determinant()) < 1e-12);
  CHECK(max_abs(reduced_hessian({Vector::Constant(4, -1.0), 3.0, SkipMode::residual})) == 0.0);
}

TEST_CASE("mode-strength integration") {
  SUBCASE("origin is invariant for plain nets") {
    const ModeTrajectory t = integrate_mode_strength({Vector::Zero(5), 3.0, SkipMode::plain}, 0.1, 100);
    for (double u : t.u) CHECK(u == 0.0);
  }
  SUBCASE("residual converges to s") {
    const ModeTrajectory t = integrate_mode_strength({Vector::Constant(3, 0.01), 3.0, SkipMode::residual}, 0.01, 20000);
    CHECK(std::abs(t.u.back() - 3.0) < 1e-3);
  }
  SUBCASE("energy is non-increasing for small steps") {
    Rng r(5);
    for (SkipMode m : {SkipMode::plain, SkipMode::residual}) {
      ModeStrengthState st{Vector::Constant(4, 0.2) + gaussian_vector(4, r, 0.05), 3.0, m};
      double prev = mode_energy(st);
      for (int it = 0; it < 2000; ++it) {
        st.a += 0.01 * mode_strength_rhs(st);
        const double e = mode_energy(st);
        REQUIRE(e <= prev + 1e-15);
        prev = e;
      }
    }
  }
  SUBCASE("ten-layer timing: hyper < residual < plain") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng r(seed);
      const Vector a0 = gaussian_vector(9, r, 1e-4);
      const double tp = time_to_band({a0, 3.0, SkipMode::plain}, 0.1, 1e4);
      const double tr = time_to_band({a0, 3.0, SkipMode::residual}, 0.1, 1e4);
      const double th = time_to_band({a0, 3.0, SkipMode::hyper_residual}, 0.1, 1e4);
      CAPTURE(seed);
      CHECK(th >= 0.0);
      CHECK(tr > th);
      CHECK((tp < 0.0 || tp > tr));
    }
  }
}

TEST_CASE("phase portrait") {
  const auto plain = phase_portrait(SkipMode::plain, 3.0, -3.0, 3.0, 7);
  CHECK(plain.size() == 49);
  int zeros = 0;
  for (const auto& p : plain)
    if (p.grad_norm == 0.0) {
      ++zeros;
      CHECK(((p.a == 0.0 && p.b == 0.0) || p.a * p.b == 3.0));
    }
  CHECK(zeros >= 1);
  bool hyper_saddle = false;
  for (const auto& p : phase_portrait(SkipMode::hyper_residual, 3.0, -3.0, 3.0, 7))
    if (p.a == -1.0 && p.b == -2.0) hyper_saddle = p.grad_norm == 0.0;
  CHECK(hyper_saddle);
  // The field vanishes on the solution hyperbola (a + 1)(b + 1) = s.
  for (double a : {0.5, 1.0, 2.0}) {
    const double b = 3.0 / (a + 1.0) - 1.0;
    CHECK(mode_strength_rhs({Vector{{a, b}}, 3.0, SkipMode::residual}).norm() < 1e-14);
  }
}
