#include "deglab/lineardyn.hpp"

#include "deglab/error.hpp"
#include "deglab/numfmt.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace deglab {

TwoModeSystem TwoModeSystem::standard() {
  TwoModeSystem sys;
  const double h = 1.0 / std::numbers::sqrt2;
  sys.u1 = Vector{{h, h}};
  sys.u2 = Vector{{h, -h}};
  sys.v1 = sys.u1;
  sys.v2 = sys.u2;
  return sys;
}

TwoModeState TwoModeState::zeros(int n) {
  return {Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
}

TwoModeState TwoModeState::random(int n, double stddev, Rng& rng) {
  TwoModeState s;
  s.a1 = gaussian_vector(n, rng, stddev);
  s.a2 = gaussian_vector(n, rng, stddev);
  s.b1 = gaussian_vector(n, rng, stddev);
  s.b2 = gaussian_vector(n, rng, stddev);
  return s;
}

bool TwoModeState::finite() const { return a1.allFinite() && a2.allFinite() && b1.allFinite() && b2.allFinite(); }

namespace {

struct Effective {
  Vector a1, a2, b1, b2;
};

Effective effective(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch) {
  if (arch == SkipMode::plain) return {s.a1, s.a2, s.b1, s.b2};
  if (arch == SkipMode::residual) return {s.a1 + sys.v1, s.a2 + sys.v2, s.b1 + sys.u1, s.b2 + sys.u2};
  throw Error(ErrorKind::unsupported_scheme, "the two-mode system is defined for plain and residual nets");
}

}  // namespace

TwoModeTerms two_mode_terms(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch, int equation) {
  const Effective e = effective(s, sys, arch);
  switch (equation) {
    case 0: return {(sys.s1 - e.a1.dot(e.b1)) * e.b1, e.a1.dot(e.b2) * e.b2};
    case 1: return {(sys.s2 - e.a2.dot(e.b2)) * e.b2, e.a2.dot(e.b1) * e.b1};
    case 2: return {(sys.s1 - e.a1.dot(e.b1)) * e.a1, e.a1.dot(e.b2) * e.a2};
    case 3: return {(sys.s2 - e.a2.dot(e.b2)) * e.a2, e.a2.dot(e.b1) * e.a1};
    default: throw Error(ErrorKind::config, "two-mode equation index must be 0..3");
  }
}

TwoModeState two_mode_rhs(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch) {
  TwoModeState d;
  Vector* out[4] = {&d.a1, &d.a2, &d.b1, &d.b2};
  for (int k = 0; k < 4; ++k) {
    const TwoModeTerms t = two_mode_terms(s, sys, arch, k);
    *out[k] = t.cooperative - t.competitive;
  }
  return d;
}

double mode_strength(const TwoModeState& s, const TwoModeSystem& sys, SkipMode arch, int mode) {
  const Effective e = effective(s, sys, arch);
  return mode == 1 ? e.a1.dot(e.b1) : e.a2.dot(e.b2);
}

std::vector<TwoModeState> integrate_two_mode(const TwoModeState& init, const TwoModeSystem& sys, SkipMode arch,
                                             double step, int iterations) {
  if (!(step > 0.0)) throw Error(ErrorKind::config, "step must be > 0");
  std::vector<TwoModeState> traj;
  traj.reserve(static_cast<std::size_t>(iterations) + 1);
  traj.push_back(init);
  for (int it = 1; it <= iterations; ++it) {
    const TwoModeState& s = traj.back();
    const TwoModeState d = two_mode_rhs(s, sys, arch);
    TwoModeState next{s.a1 + step * d.a1, s.a2 + step * d.a2, s.b1 + step * d.b1, s.b2 + step * d.b2};
    if (!next.finite())
      throw Error(ErrorKind::divergence, "two-mode dynamics diverged at iteration " + std::to_string(it),
                  static_cast<std::size_t>(it));
    traj.push_back(std::move(next));
  }
  return traj;
}

int iterations_to_threshold(const std::vector<TwoModeState>& traj, const TwoModeSystem& sys, SkipMode arch,
                            double fraction) {
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (mode_strength(traj[i], sys, arch, 1) >= fraction * sys.s1) return static_cast<int>(i);
  return -1;
}

double mode_offset(SkipMode arch, int l) noexcept {
  switch (arch) {
    case SkipMode::plain: return 0.0;
    case SkipMode::residual: return 1.0;
    case SkipMode::hyper_residual: return static_cast<double>(l);
  }
  return 0.0;
}

namespace {

Vector shifted(const ModeStrengthState& st) {
  Vector f(st.a.size());
  for (Eigen::Index i = 0; i < st.a.size(); ++i) f[i] = st.a[i] + mode_offset(st.arch, static_cast<int>(i) + 1);
  return f;
}

// Product of f over all indices except those listed (no division, so exact zeros stay exact).
double product_except(const Vector& f, Eigen::Index skip1, Eigen::Index skip2 = -1) {
  double p = 1.0;
  for (Eigen::Index l = 0; l < f.size(); ++l)
    if (l != skip1 && l != skip2) p *= f[l];
  return p;
}

}  // namespace

double mode_product(const ModeStrengthState& st) { return product_except(shifted(st), -1); }

double mode_energy(const ModeStrengthState& st) {
  const double r = st.s - mode_product(st);
  return 0.5 * r * r;
}

Vector mode_strength_rhs(const ModeStrengthState& st) {
  const Vector f = shifted(st);
  const double r = st.s - product_except(f, -1);
  Vector d(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) d[i] = r * product_except(f, i);
  return d;
}

Matrix reduced_hessian(const ModeStrengthState& st) {
  const Vector f = shifted(st);
  const double u = product_except(f, -1);
  const Eigen::Index n = f.size();
  Matrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      if (i == k) {
        const double p = product_except(f, i);
        h(i, i) = p * p;
      } else {
        h(i, k) = (2.0 * u - st.s) * product_except(f, i, k);
      }
    }
  return h;
}

ModeTrajectory integrate_mode_strength(const ModeStrengthState& init, double step, int iterations) {
  if (!(step > 0.0)) throw Error(ErrorKind::config, "step must be > 0");
  ModeTrajectory t;
  t.final_state = init;
  t.time.push_back(0.0);
  t.u.push_back(mode_product(init));
  for (int it = 1; it <= iterations; ++it) {
    t.final_state.a += step * mode_strength_rhs(t.final_state);
    const double u = mode_product(t.final_state);
    if (!t.final_state.a.allFinite() || !std::isfinite(u))
      throw Error(ErrorKind::divergence, "mode-strength dynamics diverged at iteration " + std::to_string(it),
                  static_cast<std::size_t>(it));
    t.time.push_back(step * it);
    t.u.push_back(u);
  }
  return t;
}

double time_to_band(const ModeStrengthState& init, double step, double max_time, double band, double stability) {
  if (!(step > 0.0) || !(max_time >= 0.0)) throw Error(ErrorKind::config, "step must be > 0 and max_time >= 0");
  ModeStrengthState st = init;
  double t = 0.0;
  std::size_t it = 0;
  while (true) {
    const Vector f = shifted(st);
    const double u = product_except(f, -1);
    if (std::abs(u - st.s) <= band * std::abs(st.s)) return t;
    if (t >= max_time) return -1.0;
    Vector grad_u(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) grad_u[i] = product_except(f, i);
    const double h = std::min(step, stability / std::max(1.0, grad_u.squaredNorm()));
    st.a += h * (st.s - u) * grad_u;
    t += h;
    ++it;
    if (!st.a.allFinite())
      throw Error(ErrorKind::divergence, "mode-strength dynamics diverged at iteration " + std::to_string(it), it);
  }
}

std::vector<PortraitSample> phase_portrait(SkipMode arch, double s, double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw Error(ErrorKind::config, "portrait needs >= 2 points and hi > lo");
  std::vector<PortraitSample> out;
  ModeStrengthState st{Vector::Zero(2), s, arch};
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j) {
      st.a[0] = lo + (hi - lo) * i / (points - 1);
      st.a[1] = lo + (hi - lo) * j / (points - 1);
      const Vector d = mode_strength_rhs(st);
      out.push_back({st.a[0], st.a[1], d[0], d[1], d.norm()});
    }
  return out;
}

void write_two_mode_csv(std::ostream& out, const std::vector<TwoModeState>& traj, const TwoModeSystem& sys,
                        SkipMode arch) {
  const int n = sys.hidden();
  out << "iteration";
  for (const char* name : {"a1", "a2", "b1", "b2"})
    for (int i = 0; i < n; ++i) out << ',' << name << '_' << i;
  out << ",strength1,strength2\n";
  for (std::size_t it = 0; it < traj.size(); ++it) {
    const auto& s = traj[it];
    out << it;
    for (const Vector* v : {&s.a1, &s.a2, &s.b1, &s.b2})
      for (int i = 0; i < n; ++i) out << ',' << format_double((*v)[i]);
    out << ',' << format_double(mode_strength(s, sys, arch, 1)) << ','
        << format_double(mode_strength(s, sys, arch, 2)) << '\n';
  }
}

void write_mode_csv(std::ostream& out, const ModeTrajectory& traj) {
  out << "iteration,time,u\n";
  for (std::size_t i = 0; i < traj.u.size(); ++i)
    out << i << ',' << format_double(traj.time[i]) << ',' << format_double(traj.u[i]) << '\n';
}

void write_portrait_csv(std::ostream& out, const std::vector<PortraitSample>& samples) {
  out << "a,b,da,db,grad_norm\n";
  for (const auto& p : samples)
    out << format_double(p.a) << ',' << format_double(p.b) << ',' << format_double(p.da) << ','
        << format_double(p.db) << ',' << format_double(p.grad_norm) << '\n';
}

}  // namespace deglab
