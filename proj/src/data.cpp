#include "deglab/data.hpp"

#include "deglab/error.hpp"
#include "deglab/numfmt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace deglab {

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw Error(ErrorKind::shape, "dataset '" + name + "': feature rows and labels differ in length");
  if (class_count < 1) throw Error(ErrorKind::config, "dataset '" + name + "': class_count must be >= 1");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= class_count)
      throw Error(ErrorKind::corrupt_record, "dataset '" + name + "': label out of range at example " +
                                                 std::to_string(i), i);
  if (!features.allFinite()) throw Error(ErrorKind::format, "dataset '" + name + "': non-finite feature");
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset load_cifar_records(const std::filesystem::path& path, std::size_t label_bytes,
                           std::size_t label_offset, int class_count, const std::string& name) {
  const auto bytes = read_bytes(path);
  const std::size_t record = label_bytes + kCifarPixels;
  if (bytes.size() % record != 0)
    throw Error(ErrorKind::format, path.string() + ": size " + std::to_string(bytes.size()) +
                                       " is not a multiple of " + std::to_string(record));
  const std::size_t count = bytes.size() / record;
  Dataset d;
  d.name = name;
  d.class_count = class_count;
  d.features.resize(static_cast<Eigen::Index>(count), kCifarPixels);
  d.labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    const unsigned char* rec = bytes.data() + r * record;
    const int label = rec[label_offset];
    if (label >= class_count)
      throw Error(ErrorKind::corrupt_record, path.string() + ": label " + std::to_string(label) +
                                                 " out of range in record " + std::to_string(r), r);
    d.labels[r] = label;
    const unsigned char* px = rec + label_bytes;
    for (int j = 0; j < kCifarPixels; ++j) d.features(static_cast<Eigen::Index>(r), j) = px[j] / 255.0;
  }
  return d;
}

}  // namespace

Dataset load_cifar10(const std::filesystem::path& path) {
  return load_cifar_records(path, 1, 0, 10, "cifar10:" + path.filename().string());
}

Dataset load_cifar100_coarse(const std::filesystem::path& path) {
  return load_cifar_records(path, 2, 0, 20, "cifar100-coarse:" + path.filename().string());
}

void write_cifar10(const Dataset& d, const std::filesystem::path& path) {
  if (d.dim() != kCifarPixels) throw Error(ErrorKind::shape, "write_cifar10 needs 3072 features");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  std::vector<char> rec(1 + kCifarPixels);
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (d.labels[r] < 0 || d.labels[r] > 255) throw Error(ErrorKind::format, "label does not fit a byte");
    rec[0] = static_cast<char>(d.labels[r]);
    for (int j = 0; j < kCifarPixels; ++j) {
      const double v = std::clamp(d.features(static_cast<Eigen::Index>(r), j), 0.0, 1.0);
      rec[1 + j] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

Dataset augment_mirror(const Dataset& d, int width, int height, int channels) {
  if (width < 1 || height < 1 || channels < 1 || d.dim() != static_cast<Eigen::Index>(width) * height * channels)
    throw Error(ErrorKind::shape, "augment_mirror: feature length " + std::to_string(d.dim()) +
                                      " does not match " + std::to_string(width) + "x" +
                                      std::to_string(height) + "x" + std::to_string(channels));
  const auto n = static_cast<Eigen::Index>(d.size());
  Dataset out;
  out.name = d.name + "+mirror";
  out.class_count = d.class_count;
  out.features.resize(2 * n, d.dim());
  out.features.topRows(n) = d.features;
  for (Eigen::Index r = 0; r < n; ++r)
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < height; ++y) {
        const Eigen::Index base = (static_cast<Eigen::Index>(c) * height + y) * width;
        for (int x = 0; x < width; ++x)
          out.features(n + r, base + x) = d.features(r, base + (width - 1 - x));
      }
  out.labels = d.labels;
  out.labels.insert(out.labels.end(), d.labels.begin(), d.labels.end());
  return out;
}

Dataset synthetic_clusters(int class_count, int dim, int per_class, double spread, Rng& rng) {
  if (class_count < 1 || dim < 1 || per_class < 1 || !(spread > 0.0))
    throw Error(ErrorKind::config, "synthetic_clusters: counts must be >= 1 and spread > 0");
  Dataset d;
  d.name = "clusters";
  d.class_count = class_count;
  d.features = Matrix::Zero(static_cast<Eigen::Index>(class_count) * per_class, dim);
  d.labels.reserve(static_cast<std::size_t>(class_count) * per_class);
  Eigen::Index row = 0;
  for (int c = 0; c < class_count; ++c) {
    const int axis = c % dim;
    const double scale = 1.0 + c / dim;
    for (int i = 0; i < per_class; ++i, ++row) {
      for (int j = 0; j < dim; ++j) d.features(row, j) = spread * rng.normal();
      d.features(row, axis) += scale;
      d.labels.push_back(c);
    }
  }
  return d;
}

namespace {

// Sum of a few random low-frequency plane waves per channel.
Matrix smooth_pattern(Rng& rng, int waves, double amplitude) {
  Matrix p = Matrix::Zero(kCifarChannels, kCifarSide * kCifarSide);
  for (int c = 0; c < kCifarChannels; ++c)
    for (int w = 0; w < waves; ++w) {
      const double kx = rng.uniform(-3.0, 3.0);
      const double ky = rng.uniform(-3.0, 3.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double a = amplitude * rng.uniform(0.5, 1.0);
      for (int y = 0; y < kCifarSide; ++y)
        for (int x = 0; x < kCifarSide; ++x)
          p(c, y * kCifarSide + x) +=
              a * std::cos(2.0 * std::numbers::pi * (kx * x + ky * y) / kCifarSide + phase);
    }
  return p;
}

}  // namespace

Dataset synthetic_images(int class_count, int per_class, Rng& rng) {
  if (class_count < 1 || per_class < 1) throw Error(ErrorKind::config, "synthetic_images: counts must be >= 1");
  std::vector<Matrix> templates;
  for (int c = 0; c < class_count; ++c) templates.push_back(smooth_pattern(rng, 3, 0.22));

  Dataset d;
  d.name = "synthetic-images";
  d.class_count = class_count;
  const Eigen::Index n = static_cast<Eigen::Index>(class_count) * per_class;
  d.features.resize(n, kCifarPixels);
  d.labels.resize(static_cast<std::size_t>(n));
  // Interleave classes so that prefixes stay balanced.
  for (Eigen::Index r = 0; r < n; ++r) {
    const int c = static_cast<int>(r % class_count);
    d.labels[static_cast<std::size_t>(r)] = c;
    const double contrast = rng.uniform(0.25, 1.0);
    const double brightness = rng.uniform(-0.15, 0.15);
    const Matrix background = smooth_pattern(rng, 2, 0.18);
    for (int ch = 0; ch < kCifarChannels; ++ch)
      for (int j = 0; j < kCifarSide * kCifarSide; ++j) {
        const double v = 0.5 + brightness + contrast * templates[c](ch, j) + background(ch, j) +
                         0.08 * rng.normal();
        d.features(r, ch * kCifarSide * kCifarSide + j) = std::clamp(v, 0.0, 1.0);
      }
  }
  return d;
}

Dataset head(const Dataset& d, std::size_t count) {
  count = std::min(count, d.size());
  Dataset out;
  out.name = d.name;
  out.class_count = d.class_count;
  out.features = d.features.topRows(static_cast<Eigen::Index>(count));
  out.labels.assign(d.labels.begin(), d.labels.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

Dataset select(const Dataset& d, std::span<const std::size_t> indices) {
  Dataset out;
  out.name = d.name;
  out.class_count = d.class_count;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), d.dim());
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= d.size()) throw Error(ErrorKind::shape, "select: index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = d.features.row(static_cast<Eigen::Index>(indices[i]));
    out.labels[i] = d.labels[indices[i]];
  }
  return out;
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "label";
  for (Eigen::Index j = 0; j < d.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t r = 0; r < d.size(); ++r) {
    out << d.labels[r];
    for (Eigen::Index j = 0; j < d.dim(); ++j) out << ',' << format_double(d.features(static_cast<Eigen::Index>(r), j));
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

Dataset read_csv(const std::filesystem::path& path, int class_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::format, path.string() + ": empty file");
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "label") throw Error(ErrorKind::format, path.string() + ": header must start with 'label'");
  const auto dim = static_cast<Eigen::Index>(header.size() - 1);

  std::vector<int> labels;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line, ',');
    if (static_cast<Eigen::Index>(fields.size()) != dim + 1)
      throw Error(ErrorKind::format, path.string() + ": wrong field count on data row " + std::to_string(row), row);
    labels.push_back(static_cast<int>(parse_int(fields[0])));
    for (std::size_t j = 1; j < fields.size(); ++j) values.push_back(parse_double(fields[j]));
    ++row;
  }
  Dataset d;
  d.name = "csv:" + path.filename().string();
  d.labels = std::move(labels);
  d.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(d.labels.size()), dim);
  d.class_count = class_count > 0 ? class_count
                                  : (d.labels.empty() ? 1 : *std::max_element(d.labels.begin(), d.labels.end()) + 1);
  d.validate();
  return d;
}

std::vector<int> nearest_centroid_predict(const Dataset& train, const Matrix& inputs) {
  Matrix centroids = Matrix::Zero(train.class_count, train.dim());
  std::vector<int> counts(static_cast<std::size_t>(train.class_count), 0);
  for (std::size_t r = 0; r < train.size(); ++r) {
    centroids.row(train.labels[r]) += train.features.row(static_cast<Eigen::Index>(r));
    ++counts[static_cast<std::size_t>(train.labels[r])];
  }
  for (int c = 0; c < train.class_count; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
  std::vector<int> out(static_cast<std::size_t>(inputs.rows()));
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    double best = INFINITY;
    int arg = 0;
    for (int c = 0; c < train.class_count; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      const double dist = (inputs.row(r) - centroids.row(c)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = c;
      }
    }
    out[static_cast<std::size_t>(r)] = arg;
  }
  return out;
}

}  // namespace deglab
