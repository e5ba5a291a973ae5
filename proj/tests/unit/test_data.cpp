#include "deglab/data.hpp"
#include "deglab/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace deglab;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> record(std::initializer_list<unsigned char> head, unsigned char fill) {
  std::vector<unsigned char> r(head);
  for (int i = 0; i < kCifarPixels; ++i) r.push_back(static_cast<unsigned char>((fill + i) % 256));
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::config;
}

}  // namespace

TEST_CASE("cifar10 loader") {
  const auto dir = testing::scratch_dir("cifar10");
  auto bytes = record({7}, 0);
  auto second = record({2}, 255);
  bytes.insert(bytes.end(), second.begin(), second.end());
  REQUIRE(bytes.size() == 6146);
  write_bytes(dir / "two.bin", bytes);

  const Dataset d = load_cifar10(dir / "two.bin");
  CHECK(d.size() == 2);
  CHECK(d.class_count == 10);
  CHECK(d.labels[0] == 7);
  CHECK(d.labels[1] == 2);
  CHECK(d.features(1, 0) == 1.0);  // byte 255
  CHECK(d.features(0, 0) == 0.0);
  for (int i = 0; i < kCifarPixels; ++i) REQUIRE(d.features(0, i) == static_cast<double>(i % 256) / 255.0);

  bytes.pop_back();
  write_bytes(dir / "short.bin", bytes);
  CHECK(kind_of([&] { load_cifar10(dir / "short.bin"); }) == ErrorKind::format);

  write_bytes(dir / "badlabel.bin", record({10}, 0));
  try {
    load_cifar10(dir / "badlabel.bin");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::corrupt_record);
    CHECK(e.index() == std::optional<std::size_t>(0));
  }
  CHECK(kind_of([&] { load_cifar10(dir / "missing.bin"); }) == ErrorKind::io);
}

TEST_CASE("cifar10 write/read round trip") {
  const auto dir = testing::scratch_dir("cifar10_rt");
  Rng rng(1);
  const Dataset d = synthetic_images(3, 2, rng);
  write_cifar10(d, dir / "d.bin");
  const Dataset back = load_cifar10(dir / "d.bin");
  CHECK(back.labels == d.labels);
  CHECK(max_abs(back.features - d.features) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("cifar100 coarse loader") {
  const auto dir = testing::scratch_dir("cifar100");
  write_bytes(dir / "one.bin", record({19, 3}, 0));
  const Dataset d = load_cifar100_coarse(dir / "one.bin");
  CHECK(d.size() == 1);
  CHECK(d.class_count == 20);
  CHECK(d.labels[0] == 19);
  write_bytes(dir / "bad.bin", record({25, 3}, 0));
  CHECK(kind_of([&] { load_cifar100_coarse(dir / "bad.bin"); }) == ErrorKind::corrupt_record);
}

TEST_CASE("augment_mirror") {
  Rng rng(2);
  Dataset d;
  d.features = gaussian_matrix(4, 3 * 4 * 2, rng);  // width 3, height 4, 2 channels
  d.labels = {0, 1, 1, 0};
  d.class_count = 2;
  const Dataset m = augment_mirror(d, 3, 4, 2);
  CHECK(m.size() == 8);
  CHECK(m.class_count == 2);
  CHECK(std::vector<int>(m.labels.begin() + 4, m.labels.end()) == d.labels);
  CHECK(max_abs(m.features.topRows(4) - d.features) == 0.0);
  // pixel (channel 1, row 2, col 0) moves to col 2
  CHECK(m.features(4 + 1, 1 * 12 + 2 * 3 + 2) == d.features(1, 1 * 12 + 2 * 3 + 0));

  const Dataset mirrored = head(select(m, std::vector<std::size_t>{4, 5, 6, 7}), 4);
  const Dataset twice = augment_mirror(mirrored, 3, 4, 2);
  CHECK(max_abs(twice.features.bottomRows(4) - d.features) == 0.0);

  Dataset sym = d;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < 4; ++y) sym.features(r, c * 12 + y * 3 + 2) = sym.features(r, c * 12 + y * 3 + 0);
  const Dataset sm = augment_mirror(sym, 3, 4, 2);
  CHECK(max_abs(sm.features.bottomRows(4) - sym.features) == 0.0);

  CHECK(kind_of([&] { augment_mirror(d, 5, 5, 1); }) == ErrorKind::shape);
}

TEST_CASE("synthetic clusters") {
  Rng a(11), b(11);
  const Dataset d = synthetic_clusters(2, 5, 10, 0.3, a);
  CHECK(d.size() == 20);
  CHECK(std::count(d.labels.begin(), d.labels.end(), 0) == 10);
  const Dataset e = synthetic_clusters(2, 5, 10, 0.3, b);
  CHECK(max_abs(d.features - e.features) == 0.0);
  CHECK(d.labels == e.labels);

  Rng c(12);
  const Dataset tight = synthetic_clusters(6, 8, 40, 0.01, c);
  const auto pred = nearest_centroid_predict(tight, tight.features);
  CHECK(pred == tight.labels);

  Rng z(0);
  CHECK(kind_of([&] { synthetic_clusters(0, 2, 2, 0.1, z); }) == ErrorKind::config);
}

TEST_CASE("nearest-centroid oracle on a hand example") {
  Dataset d;
  d.features.resize(4, 1);
  d.features << 0.0, 1.0, 10.0, 12.0;
  d.labels = {0, 0, 1, 1};
  d.class_count = 2;
  Matrix q(2, 1);
  q << 5.4, 5.6;  // centroids 0.5 and 11, midpoint 5.75
  CHECK(nearest_centroid_predict(d, q) == std::vector<int>{0, 0});
}

TEST_CASE("csv round trip is exact") {
  const auto dir = testing::scratch_dir("csv");
  Rng rng(5);
  const Dataset d = synthetic_clusters(3, 4, 5, 0.2, rng);
  write_csv(d, dir / "d.csv");
  const Dataset back = read_csv(dir / "d.csv");
  CHECK(back.labels == d.labels);
  CHECK(back.class_count == 3);
  CHECK(max_abs(back.features - d.features) == 0.0);
  std::ifstream in(dir / "d.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "label,f0,f1,f2,f3");
}

TEST_CASE("synthetic images are CIFAR shaped and bounded") {
  Rng rng(3);
  const Dataset d = synthetic_images(10, 3, rng);
  CHECK(d.dim() == kCifarPixels);
  CHECK(d.size() == 30);
  CHECK(d.features.minCoeff() >= 0.0);
  CHECK(d.features.maxCoeff() <= 1.0);
}
