#pragma once

#include "deglab/linalg.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace deglab {

/// Labelled examples, one per row of `features`.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int class_count = 0;
  std::string name;

  std::size_t size() const noexcept { return labels.size(); }
  Eigen::Index dim() const noexcept { return features.cols(); }

  /// Throws shape/format errors when the invariants do not hold.
  void validate() const;
};

inline constexpr int kCifarSide = 32;
inline constexpr int kCifarChannels = 3;
inline constexpr int kCifarPixels = kCifarSide * kCifarSide * kCifarChannels;

/// CIFAR-10 binary batch: 3073-byte records (label, 3072 channel-major pixels).
/// Pixels are scaled by 1/255.
Dataset load_cifar10(const std::filesystem::path& path);

/// CIFAR-100 binary batch: 3074-byte records (coarse, fine, pixels); keeps the
/// coarse label (20 classes).
Dataset load_cifar100_coarse(const std::filesystem::path& path);

/// Writes `d` in the CIFAR-10 record layout (features rounded to bytes).
void write_cifar10(const Dataset& d, const std::filesystem::path& path);

/// Originals followed by their horizontal mirror images, labels duplicated.
/// Features are laid out channel-major, each channel row-major.
Dataset augment_mirror(const Dataset& d, int width, int height, int channels);

/// Gaussian blobs around unit-separated means: class c is centred on
/// (1 + c / dim) * e_{c mod dim}. Examples are grouped by class.
Dataset synthetic_clusters(int class_count, int dim, int per_class, double spread, Rng& rng);

/// CIFAR-shaped stand-in for when the real files are absent: each class owns a
/// smooth colour template; examples mix their template with a random smooth
/// background, random contrast and pixel noise, clipped to [0, 1].
Dataset synthetic_images(int class_count, int per_class, Rng& rng);

/// First `count` examples (or all of them).
Dataset head(const Dataset& d, std::size_t count);

/// Rows selected by `indices`, in that order.
Dataset select(const Dataset& d, std::span<const std::size_t> indices);

/// CSV with header `label,f0,f1,...`; values written with round-trip precision.
void write_csv(const Dataset& d, const std::filesystem::path& path);

/// Reads the CSV layout above. When class_count is 0 it is inferred as max label + 1.
Dataset read_csv(const std::filesystem::path& path, int class_count = 0);

/// Index of the nearest class centroid for each example (brute force).
std::vector<int> nearest_centroid_predict(const Dataset& train, const Matrix& inputs);

}  // namespace deglab
