#pragma once

// Small fixtures shared by the unit and acceptance tests.

#include "deglab/hvp.hpp"
#include "deglab/network.hpp"

#include <cmath>
#include <filesystem>
#include <string>

namespace deglab::testing {

/// tanh net with squared-error or cross-entropy loss and at most ~500 params.
inline ArchitectureConfig tiny_tanh_arch(SkipMode mode, LossKind loss = LossKind::cross_entropy) {
  ArchitectureConfig a;
  a.hidden_layers = 4;
  a.width = 6;
  a.input_dim = 5;
  a.class_count = 3;
  a.skip_mode = mode;
  a.activation = Activation::tanh;
  a.loss = loss;
  if (mode == SkipMode::hyper_residual) {
    Rng rng(77);
    for (int k = 0; k < a.hidden_layers - 2; ++k) a.hyper_skips.push_back(gaussian_matrix(6, 6, rng, 0.3));
  }
  return a;
}

inline Batch random_batch(const ArchitectureConfig& a, int rows, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.inputs = gaussian_matrix(rows, a.input_dim, rng);
  for (int i = 0; i < rows; ++i) b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(a.class_count))));
  b.targets = gaussian_matrix(rows, a.class_count, rng);
  return b;
}

/// Parameters with nonzero biases so every term of the gradient is exercised.
inline ModelParams random_params(const ArchitectureConfig& a, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams p = init_params(a, InitScheme::glorot, rng);
  for (auto& b : p.biases) b = gaussian_vector(b.size(), rng, 0.1);
  return p;
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("deglab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace deglab::testing
