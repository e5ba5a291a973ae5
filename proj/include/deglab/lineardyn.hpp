#pragma once

// Learning dynamics of linear networks: the two-mode three-layer system
// (plain and residual) and the decoupled multilayer mode-strength flows.

#include "deglab/linalg.hpp"
#include "deglab/network.hpp"

#include <iosfwd>
#include <vector>

namespace deglab {

struct TwoModeSystem {
  double s1 = 3.0;
  double s2 = 1.5;
  Vector u1, u2, v1, v2;  // orthonormal skip vectors (residual only)

  /// Two hidden units, s = (3, 1.5), u1 = v1 = [1, 1]/sqrt 2, u2 = v2 = [1, -1]/sqrt 2.
  static TwoModeSystem standard();
  int hidden() const noexcept { return static_cast<int>(u1.size()); }
};

struct TwoModeState {
  Vector a1, a2, b1, b2;

  static TwoModeState zeros(int n);
  static TwoModeState random(int n, double stddev, Rng& rng);
  bool finite() const;
};

/// Time derivatives; for residual nets every a (b) inside the products is
/// replaced by a + v (b + u). Only plain and residual are defined.
TwoModeState two_mode_rhs(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch);

/// Cooperative and competitive terms of one equation, e.g. for a1:
/// (s1 - a1.b1) b1 and (a1.b2) b2 (the latter enters with a minus sign).
struct TwoModeTerms {
  Vector cooperative;
  Vector competitive;
};
/// Index 0..3 selects the a1, a2, b1, b2 equation.
TwoModeTerms two_mode_terms(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch, int equation);

/// Effective strength of mode 1 or 2: (a + v).(b + u) for residual, a.b plain.
double mode_strength(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch, int mode);

/// Explicit Euler; states[0] is the initial state. Throws divergence with the
/// iteration index on non-finite values.
std::vector<TwoModeState> integrate_two_mode(const TwoModeState& init, const TwoModeSystem& sys, SkipMode arch,
                                             double step, int iterations);

/// First iteration whose mode-1 strength reaches fraction * s1, or -1.
int iterations_to_threshold(const std::vector<TwoModeState>& traj, const TwoModeSystem& sys, SkipMode arch,
                            double fraction = 0.9);

struct ModeStrengthState {
  Vector a;  // a_1 .. a_{N_l - 1}
  double s = 3.0;
  SkipMode arch = SkipMode::plain;
};

/// c_l = 0 (plain), 1 (residual), l (hyper-residual), l = 1-based.
double mode_offset(SkipMode arch, int l) noexcept;
/// u = prod_l (a_l + c_l).
double mode_product(const ModeStrengthState& st);
/// E = (s - u)^2 / 2 with tau = 1.
double mode_energy(const ModeStrengthState& st);
/// -dE/da_i = (s - u) prod_{l != i} (a_l + c_l).
Vector mode_strength_rhs(const ModeStrengthState& st);
/// d2E/da_i^2 = P_i^2, d2E/da_i da_k = (2u - s) P_ik.
Matrix reduced_hessian(const ModeStrengthState& st);

struct ModeTrajectory {
  std::vector<double> time;
  std::vector<double> u;
  ModeStrengthState final_state;
};

/// Fixed-step Euler, u recorded at every iteration (including the start).
ModeTrajectory integrate_mode_strength(const ModeStrengthState& init, double step, int iterations);

/// Euler with the step capped at `stability / max(1, ||grad u||^2)` so stiff
/// starts (hyper-residual u = (N_l - 1)!) stay stable. Stops once
/// |u - s| <= band * s or the time budget is spent; returns the flow time at
/// which the band was entered, or a negative value if it never was.
double time_to_band(const ModeStrengthState& init, double step, double max_time, double band = 0.1,
                    double stability = 0.5);

struct PortraitSample {
  double a, b, da, db, grad_norm;
};

/// Three-layer reduction (a = a_1, b = a_2) on a points x points grid over
/// [lo, hi]^2.
std::vector<PortraitSample> phase_portrait(SkipMode arch, double s, double lo, double hi, int points);

void write_two_mode_csv(std::ostream& out, const std::vector<TwoModeState>& traj, const TwoModeSystem& sys,
                        SkipMode arch);
void write_mode_csv(std::ostream& out, const ModeTrajectory& traj);
void write_portrait_csv(std::ostream& out, const std::vector<PortraitSample>& samples);

}  // namespace deglab
