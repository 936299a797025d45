#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "scenefuse/error.hpp"
#include "scenefuse/feature_store.hpp"
#include "test_util.hpp"

using namespace scenefuse;

namespace {

std::vector<LabeledVector> random_rows(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<LabeledVector> rows;
  for (std::size_t i = 0; i < count; ++i) {
    LabeledVector row{static_cast<std::uint32_t>(i % 3), std::vector<double>(dim)};
    for (auto& v : row.values) v = dist(rng);
    rows.push_back(std::move(row));
  }
  return rows;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("round trip to 32-bit precision") {
  testutil::TempDir dir("store");
  const auto rows = random_rows(3, 1536, 1);
  store_write(dir / "a.sfv", rows, 1536, "foreground/p5");
  const auto header = read_store_header(dir / "a.sfv");
  CHECK(header.version == 1);
  CHECK(header.dim == 1536);
  CHECK(header.count == 3);
  CHECK(header.descriptor == "foreground/p5");

  const auto data = store_read(dir / "a.sfv");
  REQUIRE(data.size() == 3);
  CHECK(data.class_count == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(data.labels[i] == static_cast<int>(rows[i].label));
    for (std::size_t j = 0; j < 1536; ++j) {
      CHECK(data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            static_cast<double>(static_cast<float>(rows[i].values[j])));
    }
  }
  CHECK(std::filesystem::file_size(dir / "a.sfv") == 4 + 12 + 4 + 13 + 3 * (4 + 4 * 1536));
}

TEST_CASE("identical inputs give identical bytes") {
  testutil::TempDir dir("det");
  const auto rows = random_rows(20, 64, 2);
  store_write(dir / "a.sfv", rows, 64, "x");
  store_write(dir / "b.sfv", rows, 64, "x");
  CHECK(testutil::read_file(dir / "a.sfv") == testutil::read_file(dir / "b.sfv"));
}

TEST_CASE("header starts with the magic and little-endian fields") {
  testutil::TempDir dir("layout");
  store_write(dir / "a.sfv", random_rows(2, 5, 3), 5, "");
  const auto bytes = testutil::read_file(dir / "a.sfv");
  CHECK(bytes.substr(0, 4) == "SFV1");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 5);
  CHECK(bytes[12] == 2);
}

TEST_CASE("truncation and trailing bytes are detected") {
  testutil::TempDir dir("corrupt");
  store_write(dir / "a.sfv", random_rows(3, 16, 4), 16, "d");
  const auto bytes = testutil::read_file(dir / "a.sfv");

  testutil::write_file(dir / "short.sfv", bytes.substr(0, bytes.size() - 1));
  CHECK(kind_of([&] { store_read(dir / "short.sfv"); }) == ErrorKind::Truncated);
  try {
    store_read(dir / "short.sfv");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
  testutil::write_file(dir / "long.sfv", bytes + "z");
  CHECK(kind_of([&] { store_read(dir / "long.sfv"); }) == ErrorKind::Format);
  testutil::write_file(dir / "magic.sfv", "XXXX" + bytes.substr(4));
  CHECK(kind_of([&] { store_read(dir / "magic.sfv"); }) == ErrorKind::Format);
  auto versioned = bytes;
  versioned[4] = 2;
  testutil::write_file(dir / "version.sfv", versioned);
  CHECK(kind_of([&] { store_read(dir / "version.sfv"); }) == ErrorKind::Format);
  testutil::write_file(dir / "tiny.sfv", "SF");
  CHECK(kind_of([&] { store_read(dir / "tiny.sfv"); }) == ErrorKind::Truncated);
  CHECK(kind_of([&] { store_read(dir / "missing.sfv"); }) == ErrorKind::Io);
}

TEST_CASE("writer rejects wrong dimensions and non-finite values") {
  testutil::TempDir dir("writer");
  FeatureStoreWriter writer(dir / "a.sfv", 4, "d");
  const std::vector<double> good = {1, 2, 3, 4};
  const std::vector<double> wrong = {1, 2, 3};
  const std::vector<double> nan = {1, std::numeric_limits<double>::quiet_NaN(), 3, 4};
  writer.append(0, good);
  CHECK(kind_of([&] { writer.append(0, wrong); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { writer.append(0, nan); }) == ErrorKind::NonFinite);
  CHECK(writer.count() == 1);
  writer.close();
  CHECK(kind_of([&] { writer.append(0, good); }) == ErrorKind::InvalidArgument);
  CHECK(read_store_header(dir / "a.sfv").count == 1);
}

TEST_CASE("destructor finalises the count") {
  testutil::TempDir dir("dtor");
  {
    FeatureStoreWriter writer(dir / "a.sfv", 2, "d");
    const std::vector<double> v = {0.5, 0.25};
    for (int i = 0; i < 7; ++i) writer.append(1, v);
  }
  CHECK(store_read(dir / "a.sfv").size() == 7);
}

TEST_CASE("an empty store is valid") {
  testutil::TempDir dir("empty");
  store_write(dir / "a.sfv", std::vector<LabeledVector>{}, 8, "d");
  const auto data = store_read(dir / "a.sfv");
  CHECK(data.size() == 0);
  CHECK(data.dim() == 8);
}

TEST_CASE("concurrent readers see the same rows") {
  testutil::TempDir dir("readers");
  store_write(dir / "a.sfv", random_rows(10, 8, 5), 8, "d");
  FeatureStoreReader a(dir / "a.sfv");
  FeatureStoreReader b(dir / "a.sfv");
  std::uint32_t la = 0, lb = 0;
  std::vector<double> va, vb;
  int rows = 0;
  while (a.next(la, va)) {
    REQUIRE(b.next(lb, vb));
    CHECK(la == lb);
    CHECK(va == vb);
    ++rows;
  }
  CHECK_FALSE(b.next(lb, vb));
  CHECK(rows == 10);
}
