#pragma once

// Hessian-vector products by the R-operator, a finite-difference Hessian for
// tiny nets, and exact checks of the overlap / elimination degeneracies.

#include "deglab/network.hpp"

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace deglab {

struct PassCounts {
  std::size_t forward = 0;
  std::size_t backward = 0;
  std::size_t r_forward = 0;
  std::size_t r_backward = 0;
  std::size_t calls = 0;
};

/// v -> H v for the training loss (mean data loss + optional bias penalty) at
/// fixed parameters. Each call costs one forward, one backward, one R-forward
/// and one R-backward pass. Thread-safe: calls share only atomic counters.
class HvpOracle final : public LinearOperator {
 public:
  HvpOracle(ModelParams params, ArchitectureConfig arch, Batch batch,
            std::optional<BiasRegConfig> bias_reg = std::nullopt);

  Eigen::Index dim() const override { return static_cast<Eigen::Index>(params_.size()); }
  Vector apply(const Vector& v) const override;

  /// Plain gradient of the same loss (flattened).
  Vector gradient() const;

  PassCounts passes() const noexcept;
  void reset_counters() noexcept;

  const ModelParams& params() const noexcept { return params_; }
  const ArchitectureConfig& arch() const noexcept { return arch_; }

 private:
  ModelParams params_;
  ArchitectureConfig arch_;
  Batch batch_;
  std::optional<BiasRegConfig> bias_reg_;
  mutable std::atomic<std::size_t> forward_{0}, backward_{0}, r_forward_{0}, r_backward_{0}, calls_{0};
};

/// Central differences of `grad` around theta, column by column, then
/// symmetrized. Throws size_guard when theta has more than max_dim entries.
Matrix fd_hessian(const std::function<Vector(const Vector&)>& grad, const Vector& theta, double eps = 1e-5,
                  std::size_t max_dim = 2000);

/// fd_hessian of the network loss.
Matrix full_hessian_fd(const ModelParams& params, const ArchitectureConfig& arch, const Batch& batch,
                       const BiasRegConfig* bias_reg = nullptr, double eps = 1e-5);

/// Columns H e_i from any operator (exact for the R-operator). Size-guarded.
Matrix hessian_from_operator(const LinearOperator& op, std::size_t max_dim = 2000);

/// Flat index of weight W_layer(row, col) in ModelParams::flatten order.
std::size_t flat_weight_index(const ArchitectureConfig& arch, int layer, Eigen::Index row, Eigen::Index col);

// Tiny squared-error ReLU net used by the degeneracy checks.
inline constexpr int kTinyInput = 3;
inline constexpr int kTinyWidth = 4;
inline constexpr int kTinyLayers = 3;
inline constexpr int kTinyClasses = 2;
inline constexpr int kTinyBatch = 128;

struct DegeneracyCase {
  SkipMode skip_mode = SkipMode::plain;
  int layer = 2;           // hidden layer of the unit(s), 1..L
  int unit_a = 0;
  int unit_b = 1;          // overlap partner
  double perturbation = 0.0;       // overlap control: added to one copied incoming weight
  bool keep_one_incoming = false;  // elimination control: leave one incoming weight nonzero
  std::uint64_t seed = 12;  // fixed test seed
};

struct DegeneracyReport {
  std::string check;  // "overlap" or "elimination"
  SkipMode skip_mode = SkipMode::plain;
  int layer = 0;
  std::vector<int> units;
  std::size_t parameter_count = 0;
  /// overlap: max |H[:, a] - H[:, b]| over the outgoing-weight column pairs;
  /// elimination: max |H[:, c]| over the outgoing-weight columns.
  double max_column_mismatch = 0.0;
  double min_abs_eigenvalue = 0.0;        // finite-difference Hessian
  double min_abs_eigenvalue_exact = 0.0;  // R-operator Hessian
  bool expected_degenerate = false;
  bool degenerate = false;
  bool passed = false;
  std::string detail;
};

struct DegeneracySetup {
  ArchitectureConfig arch;
  ModelParams params;
  Batch batch;
};

/// Builds the tiny net for a check. Overlap copies unit_a's incoming weights
/// and bias onto unit_b; plain nets then use their own outputs as targets
/// (zero residual, so H = J^T J), skip nets keep random targets. Elimination
/// zeroes unit_a's incoming weights and bias and uses random targets.
DegeneracySetup overlap_setup(const DegeneracyCase& c);
DegeneracySetup elimination_setup(const DegeneracyCase& c);

/// Plain nets are expected degenerate, residual nets and the perturbation
/// controls are not; `passed` is observed == expected.
DegeneracyReport verify_overlap_degeneracy(const DegeneracyCase& c);
DegeneracyReport verify_elimination_degeneracy(const DegeneracyCase& c);

std::string to_json(const DegeneracyReport& r);

}  // namespace deglab
