#pragma once

// Minimal executor for feed-forward ONNX graphs of the VGG family.
//
// The loader keeps the node list in file order (ONNX requires topological
// order) and only evaluates the nodes needed for the requested outputs, so a
// full classifier graph can be queried for one intermediate pooling layer
// without running the fully connected head.
//
// Supported operators: Conv, Relu, MaxPool, AveragePool, GlobalAveragePool,
// Transpose, Identity, Dropout, Add, Sub, Mul, Div, Constant, Flatten,
// Reshape, Gemm, MatMul, Softmax.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scenefuse::onnx {

using Shape = std::vector<std::int64_t>;

std::int64_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense tensor. Float graphs carry `values`; integer tensors (shape inputs of
/// Reshape and similar) carry `ints`.
struct Tensor {
  enum class Type { Float, Int64 };

  Type type = Type::Float;
  Shape shape;
  std::vector<float> values;
  std::vector<std::int64_t> ints;

  static Tensor zeros(Shape shape);
  std::int64_t size() const { return element_count(shape); }
};

struct Attribute {
  enum class Kind { Float, Int, String, Tensor, Floats, Ints, Strings };
  Kind kind = Kind::Int;
  float f = 0.0f;
  std::int64_t i = 0;
  std::string s;
  std::shared_ptr<const scenefuse::onnx::Tensor> t;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  std::vector<std::string> strings;
};

struct Node {
  std::string name;
  std::string op_type;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attribute, std::less<>> attributes;

  const Attribute* find(std::string_view key) const;
  std::int64_t int_attr(std::string_view key, std::int64_t fallback) const;
  float float_attr(std::string_view key, float fallback) const;
  std::string string_attr(std::string_view key, std::string fallback) const;
  std::vector<std::int64_t> ints_attr(std::string_view key, std::vector<std::int64_t> fallback = {}) const;
};

/// Declared input of the graph. Unknown or symbolic dimensions are -1.
struct InputSpec {
  std::string name;
  Shape shape;
};

class Graph {
 public:
  static Graph load(const std::filesystem::path& path);
  static Graph parse(std::string_view bytes, std::string_view origin = "<memory>");

  const InputSpec& input() const noexcept { return input_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::int64_t opset() const noexcept { return opset_; }

  bool produces(std::string_view tensor_name) const;

  /// Resolves a layer name such as "block5_pool" to a tensor of the graph.
  /// Matches an exact tensor name first, then node names and tensor names
  /// whose '/'- or ':'-separated components contain the layer name (the
  /// naming produced by common exporters, e.g. "model/block5_pool/MaxPool:0").
  /// Among several candidates the last pooling node wins.
  std::optional<std::string> find_layer(std::string_view layer_name) const;

  /// Evaluates the graph on `input` and returns the requested tensors in the
  /// order given. The graph is immutable; concurrent calls are safe.
  std::vector<Tensor> run(const Tensor& input, std::span<const std::string> outputs) const;

 private:
  InputSpec input_;
  std::vector<Node> nodes_;
  std::map<std::string, std::shared_ptr<const Tensor>, std::less<>> initializers_;
  std::int64_t opset_ = 0;
};

/// Executes one node. Exposed for operator unit tests.
std::vector<Tensor> execute_node(const Node& node, std::span<const Tensor* const> inputs, std::int64_t opset);

}  // namespace scenefuse::onnx
