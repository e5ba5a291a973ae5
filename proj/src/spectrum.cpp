#include "deglab/spectrum.hpp"

#include "deglab/error.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace deglab {

SpectralMoments estimate_moments(const LinearOperator& op, int probes, std::uint64_t seed, int jobs) {
  if (probes < 1) throw Error(ErrorKind::config, "probe count must be >= 1");
  const Eigen::Index n = op.dim();
  std::vector<Moments> per_probe(static_cast<std::size_t>(probes));
  detail::parallel_for(per_probe.size(), jobs, [&](std::size_t p) {
    Rng rng(derive_seed(seed, p));
    const Vector r = gaussian_vector(n, rng);
    const Vector v1 = op.apply(r);
    const Vector v2 = op.apply(v1);
    const auto nd = static_cast<double>(n);
    per_probe[p] = {r.dot(v1) / nd, v1.dot(v1) / nd, v1.dot(v2) / nd, v2.dot(v2) / nd};
  });

  SpectralMoments out;
  out.dim = n;
  out.probes = probes;
  for (int k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (const auto& m : per_probe) mean += m[k];
    mean /= probes;
    double var = 0.0;
    for (const auto& m : per_probe) var += (m[k] - mean) * (m[k] - mean);
    out.m[k] = mean;
    out.stderr_[k] = probes > 1 ? std::sqrt(var / (probes - 1) / probes) : 0.0;
  }
  return out;
}

SpectralMoments estimate_moments(const LinearOperator& op, int probes, Rng& rng, int jobs) {
  return estimate_moments(op, probes, rng.next_u64(), jobs);
}

Moments skew_normal_moments(double xi, double omega, double alpha) {
  // Standard skew-normal Z: E Z = b d, E Z^2 = 1, E Z^3 = b d (3 - d^2),
  // E Z^4 = 3, with d = alpha / sqrt(1 + alpha^2) and b = sqrt(2 / pi).
  const double d = alpha / std::sqrt(1.0 + alpha * alpha);
  const double b = std::sqrt(2.0 / std::numbers::pi);
  const double z1 = b * d;
  const double z3 = b * d * (3.0 - d * d);
  const double x = xi, w = omega;
  const double x2 = x * x, w2 = w * w;
  return {
      x + w * z1,
      x2 + 2.0 * x * w * z1 + w2,
      x2 * x + 3.0 * x2 * w * z1 + 3.0 * x * w2 + w2 * w * z3,
      x2 * x2 + 4.0 * x2 * x * w * z1 + 6.0 * x2 * w2 + 4.0 * x * w2 * w * z3 + 3.0 * w2 * w2,
  };
}

double skew_normal_pdf(double x, double xi, double omega, double alpha) {
  const double z = (x - xi) / omega;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-alpha * z / std::numbers::sqrt2);
  return 2.0 / omega * phi * cdf;
}

namespace {

constexpr Moments kBulk{0.0, kBulkStd * kBulkStd, 0.0, 3.0 * kBulkStd * kBulkStd * kBulkStd * kBulkStd};

inline Moments mix(double w, const Moments& sn) noexcept {
  Moments m;
  for (int k = 0; k < 4; ++k) m[k] = w * sn[k] + (1.0 - w) * kBulk[k];
  return m;
}

}  // namespace

Moments mixture_moments(const MixtureParams& p) { return mix(p.w, skew_normal_moments(p.xi, p.omega, p.alpha)); }

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(static_cast<std::size_t>(std::max(count, 0)));
  if (count == 1) v[0] = lo;
  for (int i = 0; count > 1 && i < count; ++i)
    v[static_cast<std::size_t>(i)] = i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, int count) {
  auto v = linspace(std::log10(lo), std::log10(hi), count);
  for (auto& x : v) x = std::pow(10.0, x);
  return v;
}

GridSpec GridSpec::standard(int points) {
  if (points < 1) throw Error(ErrorKind::config, "grid needs at least one point per axis");
  return {logspace(1e-9, 1e-3, points), linspace(-100.0, 100.0, points), linspace(-10.0, 10.0, points),
          logspace(0.1, 1000.0, points)};
}

double fit_objective(const Moments& model, const Moments& target) noexcept {
  double obj = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double den = std::abs(target[k]) < 1e-300 ? 1.0 : std::abs(target[k]);
    obj += std::abs(model[k] - target[k]) / den;
  }
  return obj;
}

FitResult fit_mixture(const Moments& target, const GridSpec& grid, int jobs) {
  bool all_zero = true;
  for (double m : target) {
    if (!std::isfinite(m)) throw Error(ErrorKind::degenerate_target, "target moments must be finite");
    if (std::abs(m) >= 1e-300) all_zero = false;
  }
  if (all_zero) throw Error(ErrorKind::degenerate_target, "all target moments are zero");
  if (grid.size() == 0) throw Error(ErrorKind::config, "empty fit grid");

  const std::size_t na = grid.alpha.size(), nx = grid.xi.size(), no = grid.omega.size();
  std::vector<Moments> sn(na * nx * no);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t o = 0; o < no; ++o)
        sn[(a * nx + x) * no + o] = skew_normal_moments(grid.xi[x], grid.omega[o], grid.alpha[a]);

  struct Best {
    double objective = std::numeric_limits<double>::infinity();
    std::size_t flat = 0;
  };
  std::vector<Best> per_w(grid.w.size());
  detail::parallel_for(grid.w.size(), jobs, [&](std::size_t wi) {
    Best best;
    const double w = grid.w[wi];
    for (std::size_t j = 0; j < sn.size(); ++j) {
      const double obj = fit_objective(mix(w, sn[j]), target);
      if (obj < best.objective) best = {obj, j};
    }
    per_w[wi] = best;
  });

  std::size_t best_w = 0;
  for (std::size_t wi = 1; wi < per_w.size(); ++wi)
    if (per_w[wi].objective < per_w[best_w].objective) best_w = wi;
  const Best& b = per_w[best_w];
  if (!std::isfinite(b.objective)) throw Error(ErrorKind::degenerate_target, "no finite objective on the grid");

  FitResult r;
  r.objective = b.objective;
  r.index = {best_w, b.flat / (nx * no), (b.flat / no) % nx, b.flat % no};
  r.params = {grid.w[r.index[0]], grid.xi[r.index[2]], grid.omega[r.index[3]], grid.alpha[r.index[1]]};
  return r;
}

std::string to_json(const SpectralMoments& m, const FitResult& fit, int epoch) {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["m1"] = m.m[0];
  j["m2"] = m.m[1];
  j["m3"] = m.m[2];
  j["m4"] = m.m[3];
  j["stderr"] = m.stderr_;
  j["w"] = fit.params.w;
  j["xi"] = fit.params.xi;
  j["omega"] = fit.params.omega;
  j["alpha"] = fit.params.alpha;
  j["objective"] = fit.objective;
  j["probes"] = m.probes;
  j["dim"] = m.dim;
  return j.dump(2);
}

}  // namespace deglab
