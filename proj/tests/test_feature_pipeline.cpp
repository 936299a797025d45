#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scenefuse/error.hpp"
#include "scenefuse/feature_pipeline.hpp"

using namespace scenefuse;

namespace {

FeatureVector vec(std::vector<double> values, Stage stage = Stage::Gap) { return FeatureVector{stage, std::move(values)}; }

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double hi = 10.0) {
  std::uniform_real_distribution<double> dist(0.0, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("gap of a 2x2 map is its mean") {
  FeatureTensor t(2, 2, 1, {1, 3, 2, 2});
  const auto g = gap(t);
  CHECK(g.stage == Stage::Gap);
  REQUIRE(g.dim() == 1);
  CHECK(g.values[0] == 2.0);
}

TEST_CASE("gap of constant maps returns the constants") {
  std::vector<double> values;
  for (double c : {0.5, 7.0, 3.25}) values.insert(values.end(), 49, c);
  const auto g = gap(FeatureTensor(7, 7, 3, values));
  CHECK(g.values == std::vector<double>{0.5, 7.0, 3.25});
}

TEST_CASE("gap matches the per-map summation oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto raw = oracle::random_tensor(rng, 7, 7, 512);
    CHECK(oracle::max_abs_diff(gap(oracle::to_feature_tensor(raw)).values, oracle::gap(raw)) <= 1e-12);
  }
}

TEST_CASE("gap rejects non-finite activations") {
  FeatureTensor t(1, 2, 1, {1.0, std::nan("")});
  CHECK_THROWS_AS(gap(t), Error);
  try {
    gap(t);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("feature tensor validates its size") {
  CHECK_THROWS_AS(FeatureTensor(2, 2, 2, std::vector<double>(7)), Error);
  CHECK_THROWS_AS(FeatureTensor(0, 2, 2, {}), Error);
}

TEST_CASE("encode worked examples") {
  CHECK(encode(vec({0, 4})).values == std::vector<double>{0, 1});
  CHECK(encode(vec({2, 2, 2, 2})).values == std::vector<double>{1, 1, 1, 1});
  CHECK(encode(vec({1, 2, 3, 4})).values == std::vector<double>{0, 0, 0.75, 1});
  CHECK(encode(vec({0, 4})).stage == Stage::Encoded);
}

TEST_CASE("encode of the zero vector is the zero vector") {
  Diagnostics diag;
  CHECK(encode(vec({0, 0, 0}), &diag).values == std::vector<double>{0, 0, 0});
  CHECK(diag.warnings.empty());
}

TEST_CASE("encode warns on negative input but applies the formula") {
  Diagnostics diag;
  const auto e = encode(vec({-2, 1, 4}), &diag);
  CHECK(diag.warnings.size() == 1);
  CHECK(e.values == std::vector<double>{0, 0.25, 1});
}

TEST_CASE("encode rejects empty and non-finite input") {
  CHECK_THROWS_AS(encode(vec({})), Error);
  CHECK_THROWS_AS(encode(vec({1, INFINITY})), Error);
}

TEST_CASE("encode properties on random non-negative vectors") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(rng, 1 + trial % 64);
    const auto e = encode(vec(v)).values;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      CHECK(e[j] >= 0.0);
      CHECK(e[j] <= 1.0);
      CHECK((e[j] == 0.0) == (v[j] < mean));
    }
    for (double s : {0.5, 3.0, 100.0}) {
      std::vector<double> scaled(v);
      for (double& x : scaled) x *= s;
      CHECK(oracle::max_abs_diff(encode(vec(scaled)).values, e) <= 1e-12);
    }
  }
}

TEST_CASE("l2_normalize worked examples") {
  const auto n = l2_normalize(vec({3, 4}, Stage::Encoded));
  CHECK(n.stage == Stage::Normalized);
  CHECK(n.values[0] == doctest::Approx(3.0 / (5.0 + 1e-7)).epsilon(1e-15));
  CHECK(n.values[1] == doctest::Approx(4.0 / (5.0 + 1e-7)).epsilon(1e-15));
  CHECK(l2_normalize(vec({0, 0, 0})).values == std::vector<double>{0, 0, 0});

  std::vector<double> e1(512, 0.0);
  e1[0] = 1.0;
  const auto u = l2_normalize(vec(e1)).values;
  CHECK(u[0] == 1.0 / (1.0 + 1e-7));
  CHECK(std::count(u.begin(), u.end(), 0.0) == 511);
}

TEST_CASE("l2_normalize norm is ||v|| / (||v|| + eps)") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const double scale = std::pow(10.0, trial % 12 - 6);
    const auto v = random_vector(rng, 32, scale);
    const double before = norm(v);
    const double after = norm(l2_normalize(vec(v)).values);
    CHECK(after < 1.0);
    CHECK(after == doctest::Approx(before / (before + 1e-7)).epsilon(1e-12));
  }
  CHECK(norm(l2_normalize(vec({1e9, 1e9})).values) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("l2_normalize rejects a non-positive epsilon") {
  CHECK_THROWS_AS(l2_normalize(vec({1}), EncodingConfig{0.0}), Error);
}

TEST_CASE("describe_stream on constant and zero tensors") {
  const auto c = describe_stream(FeatureTensor::filled(7, 7, 512, 5.0)).values;
  const double expected = 1.0 / (std::sqrt(512.0) + 1e-7);
  for (double x : c) CHECK(x == doctest::Approx(expected).epsilon(1e-14));
  const auto z = describe_stream(FeatureTensor::filled(7, 7, 512, 0.0)).values;
  CHECK(std::all_of(z.begin(), z.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("describe_stream matches the three-stage oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto raw = oracle::random_tensor(rng, 7, 7, 512);
    CHECK(oracle::max_abs_diff(describe_stream(oracle::to_feature_tensor(raw)).values, oracle::describe(raw)) <= 1e-12);
  }
}

TEST_CASE("pipeline stages commute with depth permutations") {
  std::mt19937_64 rng(4);
  const auto raw = oracle::random_tensor(rng, 3, 4, 16);
  std::vector<std::size_t> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  oracle::RawTensor permuted = raw;
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t j = 0; j < 16; ++j) permuted.hwc[(y * 4 + x) * 16 + j] = raw.at(y, x, perm[j]);
  const auto a = describe_stream(oracle::to_feature_tensor(raw)).values;
  const auto b = describe_stream(oracle::to_feature_tensor(permuted)).values;
  for (std::size_t j = 0; j < 16; ++j) CHECK(b[j] == doctest::Approx(a[perm[j]]).epsilon(1e-14));
}

TEST_CASE("aggregate dimensions") {
  std::mt19937_64 rng(2);
  std::vector<StreamFeature> streams;
  for (Stream s : kCanonicalStreams) streams.push_back({s, vec(random_vector(rng, 512), Stage::Normalized)});
  CHECK(aggregate(streams, Aggregation::Concat).dim() == 1536);
  for (auto m : {Aggregation::Min, Aggregation::Max, Aggregation::Mean}) CHECK(aggregate(streams, m).dim() == 512);
}

TEST_CASE("aggregate elementwise methods") {
  std::vector<StreamFeature> pair = {{Stream::Foreground, vec({1, 0})}, {Stream::Background, vec({0, 1})}};
  CHECK(aggregate(pair, Aggregation::Mean).values == std::vector<double>{0.5, 0.5});
  CHECK(aggregate(pair, Aggregation::Min).values == std::vector<double>{0, 0});
  CHECK(aggregate(pair, Aggregation::Max).values == std::vector<double>{1, 1});

  std::mt19937_64 rng(3);
  const auto v = random_vector(rng, 64);
  std::vector<StreamFeature> same = {{Stream::Foreground, vec(v)}, {Stream::Background, vec(v)}};
  CHECK(aggregate(same, Aggregation::Min).values == v);
  CHECK(aggregate(same, Aggregation::Max).values == v);
}

TEST_CASE("aggregate records composition and order") {
  std::vector<StreamFeature> streams = {{Stream::Hybrid, vec({3})}, {Stream::Foreground, vec({1, 2})}};
  const auto f = aggregate(streams, Aggregation::Concat);
  CHECK(f.values == std::vector<double>{3, 1, 2});
  CHECK(f.composition == std::vector<Stream>{Stream::Hybrid, Stream::Foreground});
  CHECK(f.offsets == std::vector<std::size_t>{0, 1});
}

TEST_CASE("aggregate errors") {
  CHECK_THROWS_AS(aggregate(std::vector<StreamFeature>{}, Aggregation::Concat), Error);
  std::vector<StreamFeature> ragged = {{Stream::Foreground, vec({1, 2})}, {Stream::Background, vec({1})}};
  try {
    aggregate(ragged, Aggregation::Mean);
    FAIL("expected a dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
  CHECK(aggregate(ragged, Aggregation::Concat).dim() == 3);
}

TEST_CASE("concat split round trip is bit exact") {
  std::mt19937_64 rng(8);
  std::vector<StreamFeature> streams;
  for (Stream s : kCanonicalStreams) streams.push_back({s, vec(random_vector(rng, 512, 1.0), Stage::Normalized)});
  const auto parts = split(aggregate(streams, Aggregation::Concat));
  REQUIRE(parts.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(parts[k].stream == streams[k].stream);
    CHECK(parts[k].vector.values == streams[k].vector.values);
  }
  CHECK_THROWS_AS(split(aggregate(streams, Aggregation::Mean)), Error);
}

TEST_CASE("extract_proposed composes the per-stream oracle") {
  std::mt19937_64 rng(13);
  std::map<Stream, oracle::RawTensor> raw;
  for (Stream s : kCanonicalStreams) raw.emplace(s, oracle::random_tensor(rng, 7, 7, 512));
  const auto f = extract_proposed([&](Stream s) { return oracle::to_feature_tensor(raw.at(s)); });
  REQUIRE(f.dim() == 1536);
  CHECK(f.composition == std::vector<Stream>(std::begin(kCanonicalStreams), std::end(kCanonicalStreams)));
  std::vector<double> expected;
  for (Stream s : kCanonicalStreams) {
    const auto d = oracle::describe(raw.at(s));
    expected.insert(expected.end(), d.begin(), d.end());
  }
  CHECK(f.values == expected);
}

TEST_CASE("extract_proposed with identical streams repeats one block") {
  std::mt19937_64 rng(14);
  const auto raw = oracle::random_tensor(rng, 7, 7, 512);
  const auto f = extract_proposed([&](Stream) { return oracle::to_feature_tensor(raw); });
  for (std::size_t j = 0; j < 512; ++j) {
    CHECK(f.values[j] == f.values[512 + j]);
    CHECK(f.values[j] == f.values[1024 + j]);
  }
  const auto zero = extract_proposed([](Stream) { return FeatureTensor::filled(7, 7, 512, 0.0); });
  CHECK(std::all_of(zero.values.begin(), zero.values.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("extract_proposed names the failing stream") {
  try {
    extract_proposed([](Stream s) {
      if (s == Stream::Background) return FeatureTensor(1, 1, 1, {std::nan("")});
      return FeatureTensor::filled(1, 1, 2, 1.0);
    });
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("background") != std::string::npos);
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("stream and aggregation parsing") {
  CHECK(parse_stream_list("f,b,h") == std::vector<Stream>{Stream::Foreground, Stream::Background, Stream::Hybrid});
  CHECK(parse_stream_list("hybrid") == std::vector<Stream>{Stream::Hybrid});
  CHECK_THROWS_AS(parse_stream_list("f,f"), Error);
  CHECK_THROWS_AS(parse_stream_list("f,x"), Error);
  CHECK(parse_aggregation("min") == Aggregation::Min);
  CHECK_THROWS_AS(parse_aggregation("sum"), Error);
}
