#pragma once

// Shared pieces of the forward/backward machinery, reused by the R-operator.

#include "deglab/network.hpp"

namespace deglab::detail {

inline constexpr double kMidNormEpsilon = 1e-5;

/// f'(h) elementwise. ReLU uses f'(0) = 0.
Matrix activation_slope(const Matrix& pre, Activation a);
/// f''(h) elementwise (zero for ReLU).
Matrix activation_curvature(const Matrix& pre, Activation a);
Matrix activate(const Matrix& pre, Activation a);

/// Adds the skip inputs of layer l + 1 (l >= 1) to `out`, reading source
/// activities from `xs` (x_1..x_L at [k - 1]).
void add_skip_inputs(Matrix& out, const std::vector<Matrix>& xs, int l, const ArchitectureConfig& arch);

/// Transposed skip map: distributes dE/dx_{l} (at grads[l - 1]) back onto the
/// skip sources of layer l. Requires l >= 2.
void add_skip_adjoints(std::vector<Matrix>& grads, int l, const ArchitectureConfig& arch);

}  // namespace deglab::detail
