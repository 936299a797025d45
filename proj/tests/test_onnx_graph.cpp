#include <doctest.h>

#include <random>

#include "scenefuse/error.hpp"
#include "scenefuse/mock_assets.hpp"
#include "scenefuse/onnx_graph.hpp"

using namespace scenefuse;
using namespace scenefuse::onnx;

namespace {

Attribute ints(std::vector<std::int64_t> v) {
  Attribute a;
  a.kind = Attribute::Kind::Ints;
  a.ints = std::move(v);
  return a;
}

Attribute integer(std::int64_t v) {
  Attribute a;
  a.kind = Attribute::Kind::Int;
  a.i = v;
  return a;
}

Attribute real(float v) {
  Attribute a;
  a.kind = Attribute::Kind::Float;
  a.f = v;
  return a;
}

Node node(std::string op, std::map<std::string, Attribute, std::less<>> attributes = {}) {
  Node n;
  n.op_type = std::move(op);
  n.name = n.op_type;
  n.attributes = std::move(attributes);
  return n;
}

Tensor tensor(Shape shape, std::vector<float> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.values = std::move(values);
  return t;
}

Tensor run1(const Node& n, std::vector<const Tensor*> inputs, std::int64_t opset = 13) {
  auto out = execute_node(n, inputs, opset);
  REQUIRE(out.size() == 1);
  return out.front();
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.values) v = dist(rng);
  return t;
}

// Direct-summation convolution, NCHW, batch 1.
std::vector<float> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::int64_t group, std::int64_t pad,
                              std::int64_t stride) {
  const auto c_in = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const auto maps = w.shape[0], gc = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  const auto oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  (void)c_in;
  std::vector<float> out(static_cast<std::size_t>(maps * oh * ow));
  for (std::int64_t m = 0; m < maps; ++m) {
    const auto g = m / (maps / group);
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        double acc = b.values[static_cast<std::size_t>(m)];
        for (std::int64_t c = 0; c < gc; ++c)
          for (std::int64_t ky = 0; ky < kh; ++ky)
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              const auto iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += static_cast<double>(x.values[static_cast<std::size_t>(((g * gc + c) * h + iy) * wd + ix)]) *
                     w.values[static_cast<std::size_t>(((m * gc + c) * kh + ky) * kw + kx)];
            }
        out[static_cast<std::size_t>((m * oh + oy) * ow + ox)] = static_cast<float>(acc);
      }
  }
  return out;
}

}  // namespace

TEST_CASE("conv with a box kernel and padding") {
  const Tensor x = tensor({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor w = tensor({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  const auto out = run1(node("Conv", {{"pads", ints({1, 1, 1, 1})}}), {&x, &w});
  CHECK(out.shape == Shape{1, 1, 3, 3});
  CHECK(out.values == std::vector<float>{12, 21, 16, 27, 45, 33, 24, 39, 28});
}

TEST_CASE("conv matches direct summation") {
  std::mt19937_64 rng(3);
  struct Case {
    std::int64_t c_in, maps, k, group, pad, stride;
  };
  for (const Case& c : {Case{3, 4, 3, 1, 1, 1}, Case{8, 8, 1, 4, 0, 1}, Case{4, 6, 3, 2, 0, 2}, Case{2, 2, 2, 1, 1, 1}}) {
    const Tensor x = random_tensor(rng, {1, c.c_in, 6, 5});
    const Tensor w = random_tensor(rng, {c.maps, c.c_in / c.group, c.k, c.k});
    const Tensor b = random_tensor(rng, {c.maps});
    const auto n = node("Conv", {{"pads", ints({c.pad, c.pad, c.pad, c.pad})},
                                 {"strides", ints({c.stride, c.stride})},
                                 {"group", integer(c.group)}});
    const auto out = run1(n, {&x, &w, &b});
    const auto expected = naive_conv(x, w, b, c.group, c.pad, c.stride);
    REQUIRE(out.values.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(out.values[k] == doctest::Approx(expected[k]).epsilon(1e-5));
  }
}

TEST_CASE("conv rejects inconsistent channels") {
  const Tensor x = Tensor::zeros({1, 3, 4, 4});
  const Tensor w = Tensor::zeros({2, 2, 1, 1});
  CHECK_THROWS_AS(run1(node("Conv"), {&x, &w}), Error);
}

TEST_CASE("max and average pooling") {
  const Tensor x = tensor({1, 1, 4, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  const auto max = run1(node("MaxPool", {{"kernel_shape", ints({2, 2})}, {"strides", ints({2, 2})}}), {&x});
  CHECK(max.shape == Shape{1, 1, 2, 2});
  CHECK(max.values == std::vector<float>{6, 8, 14, 16});
  const auto avg = run1(node("AveragePool", {{"kernel_shape", ints({2, 2})}, {"strides", ints({2, 2})}}), {&x});
  CHECK(avg.values == std::vector<float>{3.5, 5.5, 11.5, 13.5});

  const Tensor y = tensor({1, 1, 2, 2}, {4, 4, 4, 4});
  const auto padded = run1(node("AveragePool", {{"kernel_shape", ints({2, 2})}, {"pads", ints({1, 1, 0, 0})}}), {&y});
  CHECK(padded.values == std::vector<float>{4, 4, 4, 4});
  const auto counted = run1(node("AveragePool", {{"kernel_shape", ints({2, 2})},
                                                 {"pads", ints({1, 1, 0, 0})},
                                                 {"count_include_pad", integer(1)}}),
                            {&y});
  CHECK(counted.values == std::vector<float>{1, 2, 2, 4});
  const auto padded_max = run1(node("MaxPool", {{"kernel_shape", ints({3, 3})}, {"pads", ints({1, 1, 1, 1})}}), {&x});
  CHECK(padded_max.values[0] == 6);
  CHECK(padded_max.values[15] == 16);
}

TEST_CASE("global average pool, relu and flatten") {
  const Tensor x = tensor({1, 2, 1, 2}, {1, -3, 2, 4});
  CHECK(run1(node("GlobalAveragePool"), {&x}).values == std::vector<float>{-1, 3});
  CHECK(run1(node("Relu"), {&x}).values == std::vector<float>{1, 0, 2, 4});
  const auto flat = run1(node("Flatten", {{"axis", integer(1)}}), {&x});
  CHECK(flat.shape == Shape{1, 4});
}

TEST_CASE("transpose to channels last") {
  const Tensor x = tensor({1, 2, 1, 3}, {1, 2, 3, 4, 5, 6});
  const auto t = run1(node("Transpose", {{"perm", ints({0, 2, 3, 1})}}), {&x});
  CHECK(t.shape == Shape{1, 1, 3, 2});
  CHECK(t.values == std::vector<float>{1, 4, 2, 5, 3, 6});
}

TEST_CASE("gemm with transposition, alpha and beta") {
  const Tensor a = tensor({1, 2}, {1, 2});
  const Tensor b = tensor({3, 2}, {1, 0, 0, 1, 1, 1});
  const Tensor c = tensor({3}, {10, 20, 30});
  const auto n = node("Gemm", {{"transB", integer(1)}, {"alpha", real(2.0f)}, {"beta", real(0.5f)}});
  const auto out = run1(n, {&a, &b, &c});
  CHECK(out.shape == Shape{1, 3});
  CHECK(out.values == std::vector<float>{7, 14, 21});
}

TEST_CASE("matmul, broadcasting arithmetic and softmax") {
  const Tensor a = tensor({2, 2}, {1, 2, 3, 4});
  const Tensor b = tensor({2, 1}, {1, 1});
  CHECK(run1(node("MatMul"), {&a, &b}).values == std::vector<float>{3, 7});
  const Tensor row = tensor({2}, {10, 20});
  CHECK(run1(node("Add"), {&a, &row}).values == std::vector<float>{11, 22, 13, 24});
  CHECK(run1(node("Mul"), {&a, &row}).values == std::vector<float>{10, 40, 30, 80});
  const auto s = run1(node("Softmax"), {&a});
  CHECK(s.values[0] + s.values[1] == doctest::Approx(1.0));
  CHECK(s.values[1] > s.values[0]);
}

TEST_CASE("reshape infers and copies dimensions") {
  const Tensor x = Tensor::zeros({2, 3, 4});
  Tensor shape;
  shape.type = Tensor::Type::Int64;
  shape.shape = {2};
  shape.ints = {0, -1};
  CHECK(run1(node("Reshape"), {&x, &shape}).shape == Shape{2, 12});
}

TEST_CASE("unsupported operators are reported") {
  const Tensor x = Tensor::zeros({1});
  try {
    run1(node("LSTM"), {&x});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Model);
    CHECK(std::string(e.what()).find("LSTM") != std::string::npos);
  }
}

TEST_CASE("mock graph parses and exposes every pooling layer") {
  const auto graph = Graph::parse(mock::backbone_bytes({}), "mock");
  CHECK(graph.input().shape == Shape{1, 3, 224, 224});
  CHECK(graph.opset() == 13);
  for (int k = 1; k <= 5; ++k) {
    const std::string name = "block" + std::to_string(k) + "_pool";
    REQUIRE(graph.find_layer(name).has_value());
    CHECK(*graph.find_layer(name) == name);
  }
  CHECK_FALSE(graph.find_layer("block6_pool").has_value());
}

TEST_CASE("exporter-style names resolve to pooling outputs") {
  mock::BackboneOptions options;
  options.channels_last = true;
  const auto graph = Graph::parse(mock::backbone_bytes(options), "mock");
  CHECK(graph.input().shape == Shape{1, 224, 224, 3});
  CHECK(*graph.find_layer("block3_pool") == "model/block3_pool/MaxPool:0");
  CHECK(*graph.find_layer("block5_pool") == "block5_pool");
}

TEST_CASE("graph run returns requested tensors only and checks the input shape") {
  const auto graph = Graph::parse(mock::backbone_bytes({}), "mock");
  std::mt19937_64 rng(1);
  const Tensor input = random_tensor(rng, {1, 3, 224, 224});
  const std::vector<std::string> names = {"block5_pool", "block3_pool"};
  const auto out = graph.run(input, names);
  REQUIRE(out.size() == 2);
  CHECK(out[0].shape == Shape{1, 512, 7, 7});
  CHECK(out[1].shape == Shape{1, 256, 28, 28});

  const auto again = graph.run(input, names);
  CHECK(again[0].values == out[0].values);

  const Tensor wrong = Tensor::zeros({1, 3, 112, 112});
  CHECK_THROWS_AS(graph.run(wrong, names), Error);
  const std::vector<std::string> missing = {"nope"};
  CHECK_THROWS_AS(graph.run(input, missing), Error);
}

TEST_CASE("garbage bytes are rejected") {
  CHECK_THROWS_AS(Graph::parse("definitely not a model", "junk"), Error);
  CHECK_THROWS_AS(Graph::load("/nonexistent/model.onnx"), Error);
}
