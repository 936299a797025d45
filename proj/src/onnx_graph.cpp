#include "scenefuse/onnx_graph.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "onnx_subset.pb.h"
#include "scenefuse/error.hpp"

namespace scenefuse::onnx {
namespace {

static_assert(std::endian::native == std::endian::little, "raw tensor decoding assumes a little-endian host");

template <typename T>
std::vector<T> decode_raw(const std::string& raw, std::int64_t count, const std::string& name) {
  if (static_cast<std::int64_t>(raw.size()) != count * static_cast<std::int64_t>(sizeof(T))) {
    throw Error(ErrorKind::Model, "initializer '" + name + "' raw data has " + std::to_string(raw.size()) +
                                      " bytes, expected " + std::to_string(count * sizeof(T)));
  }
  std::vector<T> out(static_cast<std::size_t>(count));
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

Tensor convert_tensor(const ::onnx::TensorProto& proto) {
  if (proto.data_location() == ::onnx::TensorProto::EXTERNAL || proto.external_data_size() > 0) {
    throw Error(ErrorKind::Model, "tensor '" + proto.name() + "' uses external data, which is not supported");
  }
  Tensor t;
  t.shape.assign(proto.dims().begin(), proto.dims().end());
  const std::int64_t count = element_count(t.shape);
  const bool raw = proto.has_raw_data();

  auto check_count = [&](std::size_t got) {
    if (static_cast<std::int64_t>(got) != count) {
      throw Error(ErrorKind::Model, "tensor '" + proto.name() + "' holds " + std::to_string(got) +
                                        " values, shape " + shape_to_string(t.shape) + " needs " +
                                        std::to_string(count));
    }
  };

  switch (proto.data_type()) {
    case ::onnx::TensorProto::FLOAT:
      t.type = Tensor::Type::Float;
      if (raw) {
        t.values = decode_raw<float>(proto.raw_data(), count, proto.name());
      } else {
        t.values.assign(proto.float_data().begin(), proto.float_data().end());
      }
      check_count(t.values.size());
      break;
    case ::onnx::TensorProto::DOUBLE: {
      t.type = Tensor::Type::Float;
      std::vector<double> d = raw ? decode_raw<double>(proto.raw_data(), count, proto.name())
                                  : std::vector<double>(proto.double_data().begin(), proto.double_data().end());
      t.values.assign(d.begin(), d.end());
      check_count(t.values.size());
      break;
    }
    case ::onnx::TensorProto::INT64:
      t.type = Tensor::Type::Int64;
      if (raw) {
        t.ints = decode_raw<std::int64_t>(proto.raw_data(), count, proto.name());
      } else {
        t.ints.assign(proto.int64_data().begin(), proto.int64_data().end());
      }
      check_count(t.ints.size());
      break;
    case ::onnx::TensorProto::INT32: {
      t.type = Tensor::Type::Int64;
      std::vector<std::int32_t> d = raw ? decode_raw<std::int32_t>(proto.raw_data(), count, proto.name())
                                        : std::vector<std::int32_t>(proto.int32_data().begin(),
                                                                    proto.int32_data().end());
      t.ints.assign(d.begin(), d.end());
      check_count(t.ints.size());
      break;
    }
    default:
      throw Error(ErrorKind::Model, "tensor '" + proto.name() + "' has unsupported data type " +
                                        std::to_string(proto.data_type()));
  }
  return t;
}

Attribute convert_attribute(const ::onnx::AttributeProto& proto) {
  Attribute a;
  using P = ::onnx::AttributeProto;
  P::AttributeType type = proto.type();
  if (type == P::UNDEFINED) {
    // Old exporters omit the type field; infer it from whichever value is set.
    if (proto.has_f()) type = P::FLOAT;
    else if (proto.has_i()) type = P::INT;
    else if (proto.has_s()) type = P::STRING;
    else if (proto.has_t()) type = P::TENSOR;
    else if (proto.floats_size() > 0) type = P::FLOATS;
    else if (proto.ints_size() > 0) type = P::INTS;
    else if (proto.strings_size() > 0) type = P::STRINGS;
  }
  switch (type) {
    case P::FLOAT: a.kind = Attribute::Kind::Float; a.f = proto.f(); break;
    case P::INT: a.kind = Attribute::Kind::Int; a.i = proto.i(); break;
    case P::STRING: a.kind = Attribute::Kind::String; a.s = proto.s(); break;
    case P::TENSOR:
      a.kind = Attribute::Kind::Tensor;
      a.t = std::make_shared<const Tensor>(convert_tensor(proto.t()));
      break;
    case P::FLOATS:
      a.kind = Attribute::Kind::Floats;
      a.floats.assign(proto.floats().begin(), proto.floats().end());
      break;
    case P::INTS:
      a.kind = Attribute::Kind::Ints;
      a.ints.assign(proto.ints().begin(), proto.ints().end());
      break;
    case P::STRINGS:
      a.kind = Attribute::Kind::Strings;
      a.strings.assign(proto.strings().begin(), proto.strings().end());
      break;
    default:
      // Graph-valued and sparse attributes belong to operators this runner
      // does not support; the node fails at execution if it is ever needed.
      a.kind = Attribute::Kind::String;
      break;
  }
  return a;
}

// Splits "model/block5_pool/MaxPool:0" into {"model", "block5_pool", "MaxPool", "0"}.
std::vector<std::string_view> name_components(std::string_view name) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= name.size(); ++k) {
    if (k == name.size() || name[k] == '/' || name[k] == ':') {
      if (k > start) parts.push_back(name.substr(start, k - start));
      start = k + 1;
    }
  }
  return parts;
}

bool has_component(std::string_view name, std::string_view component) {
  const auto parts = name_components(name);
  return std::find(parts.begin(), parts.end(), component) != parts.end();
}

}  // namespace

std::int64_t element_count(const Shape& shape) {
  std::int64_t count = 1;
  for (auto d : shape) count *= d;
  return count;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) out << 'x';
    out << shape[k];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(Shape shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(static_cast<std::size_t>(element_count(t.shape)), 0.0f);
  return t;
}

const Attribute* Node::find(std::string_view key) const {
  auto it = attributes.find(key);
  return it == attributes.end() ? nullptr : &it->second;
}

std::int64_t Node::int_attr(std::string_view key, std::int64_t fallback) const {
  const Attribute* a = find(key);
  return a ? a->i : fallback;
}

float Node::float_attr(std::string_view key, float fallback) const {
  const Attribute* a = find(key);
  return a ? a->f : fallback;
}

std::string Node::string_attr(std::string_view key, std::string fallback) const {
  const Attribute* a = find(key);
  return a ? a->s : fallback;
}

std::vector<std::int64_t> Node::ints_attr(std::string_view key, std::vector<std::int64_t> fallback) const {
  const Attribute* a = find(key);
  return a ? a->ints : fallback;
}

Graph Graph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open model file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

Graph Graph::parse(std::string_view bytes, std::string_view origin) {
  ::onnx::ModelProto model;
  if (bytes.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()) ||
      !model.ParseFromArray(bytes.data(), static_cast<int>(bytes.size()))) {
    throw Error(ErrorKind::Model, "cannot parse ONNX model " + std::string(origin));
  }
  if (!model.has_graph()) {
    throw Error(ErrorKind::Model, "ONNX model " + std::string(origin) + " has no graph");
  }

  Graph graph;
  for (const auto& opset : model.opset_import()) {
    if (opset.domain().empty() || opset.domain() == "ai.onnx") graph.opset_ = opset.version();
  }

  const auto& g = model.graph();
  for (const auto& init : g.initializer()) {
    graph.initializers_.emplace(init.name(), std::make_shared<const Tensor>(convert_tensor(init)));
  }

  std::vector<InputSpec> inputs;
  for (const auto& value : g.input()) {
    if (graph.initializers_.contains(value.name())) continue;
    InputSpec spec{value.name(), {}};
    if (value.type().has_tensor_type()) {
      for (const auto& dim : value.type().tensor_type().shape().dim()) {
        spec.shape.push_back(dim.has_dim_value() && dim.dim_value() > 0 ? dim.dim_value() : -1);
      }
    }
    inputs.push_back(std::move(spec));
  }
  if (inputs.size() != 1) {
    throw Error(ErrorKind::Model, "ONNX model " + std::string(origin) + " must have exactly one non-initializer input, found " +
                                      std::to_string(inputs.size()));
  }
  graph.input_ = std::move(inputs.front());

  graph.nodes_.reserve(static_cast<std::size_t>(g.node_size()));
  for (const auto& proto : g.node()) {
    if (!proto.domain().empty() && proto.domain() != "ai.onnx") {
      throw Error(ErrorKind::Model, "node '" + proto.name() + "' uses custom domain '" + proto.domain() + "'");
    }
    Node node;
    node.name = proto.name();
    node.op_type = proto.op_type();
    node.inputs.assign(proto.input().begin(), proto.input().end());
    node.outputs.assign(proto.output().begin(), proto.output().end());
    for (const auto& attr : proto.attribute()) {
      node.attributes.emplace(attr.name(), convert_attribute(attr));
    }
    graph.nodes_.push_back(std::move(node));
  }
  return graph;
}

bool Graph::produces(std::string_view tensor_name) const {
  if (tensor_name == input_.name || initializers_.contains(tensor_name)) return true;
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return std::find(n.outputs.begin(), n.outputs.end(), tensor_name) != n.outputs.end();
  });
}

std::optional<std::string> Graph::find_layer(std::string_view layer_name) const {
  for (const auto& node : nodes_) {
    for (const auto& out : node.outputs) {
      if (out == layer_name) return out;
    }
  }
  const Node* best = nullptr;
  for (const auto& node : nodes_) {
    if (node.outputs.empty()) continue;
    const bool matches = has_component(node.name, layer_name) || has_component(node.outputs.front(), layer_name);
    if (!matches) continue;
    const bool pooling = node.op_type == "MaxPool" || node.op_type == "AveragePool";
    if (best == nullptr || pooling || !(best->op_type == "MaxPool" || best->op_type == "AveragePool")) {
      best = &node;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->outputs.front();
}

std::vector<Tensor> Graph::run(const Tensor& input, std::span<const std::string> outputs) const {
  if (input.type != Tensor::Type::Float || static_cast<std::int64_t>(input.values.size()) != input.size()) {
    throw Error(ErrorKind::InvalidArgument, "graph input must be a float tensor with consistent shape");
  }
  if (!input_.shape.empty()) {
    bool ok = input.shape.size() == input_.shape.size();
    for (std::size_t k = 0; ok && k < input.shape.size(); ++k) {
      ok = input_.shape[k] < 0 || input_.shape[k] == input.shape[k];
    }
    if (!ok) {
      throw Error(ErrorKind::Shape, "input shape " + shape_to_string(input.shape) + " does not match declared " +
                                        shape_to_string(input_.shape));
    }
  }

  std::unordered_map<std::string_view, std::size_t> producer;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    for (const auto& out : nodes_[k].outputs) producer[out] = k;
  }

  // Mark the nodes the requested outputs depend on.
  std::vector<char> needed(nodes_.size(), 0);
  std::vector<std::string_view> pending(outputs.begin(), outputs.end());
  while (!pending.empty()) {
    const std::string_view name = pending.back();
    pending.pop_back();
    if (name.empty() || name == input_.name || initializers_.contains(name)) continue;
    auto it = producer.find(name);
    if (it == producer.end()) {
      throw Error(ErrorKind::Model, "tensor '" + std::string(name) + "' is not produced by the graph");
    }
    if (needed[it->second]) continue;
    needed[it->second] = 1;
    for (const auto& in : nodes_[it->second].inputs) pending.push_back(in);
  }

  // Remaining consumers per intermediate tensor so buffers can be released
  // as soon as the last consumer ran.
  std::unordered_map<std::string_view, int> uses;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (!needed[k]) continue;
    for (const auto& in : nodes_[k].inputs) ++uses[in];
  }
  std::unordered_set<std::string_view> pinned(outputs.begin(), outputs.end());

  std::unordered_map<std::string_view, Tensor> live;
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (name == input_.name) return &input;
    if (auto it = initializers_.find(name); it != initializers_.end()) return it->second.get();
    if (auto it = live.find(name); it != live.end()) return &it->second;
    throw Error(ErrorKind::Model, "tensor '" + name + "' used before it was produced");
  };

  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (!needed[k]) continue;
    const Node& node = nodes_[k];
    std::vector<const Tensor*> args;
    args.reserve(node.inputs.size());
    for (const auto& in : node.inputs) args.push_back(lookup(in));

    std::vector<Tensor> results;
    try {
      results = execute_node(node, args, opset_);
    } catch (const Error& e) {
      throw Error(e.kind(), "node '" + node.name + "' (" + node.op_type + "): " + e.what());
    }
    for (std::size_t o = 0; o < node.outputs.size() && o < results.size(); ++o) {
      if (!node.outputs[o].empty()) live[node.outputs[o]] = std::move(results[o]);
    }
    for (const auto& in : node.inputs) {
      auto it = uses.find(in);
      if (it != uses.end() && --it->second == 0 && !pinned.contains(in)) live.erase(in);
    }
  }

  std::vector<Tensor> result;
  result.reserve(outputs.size());
  for (const auto& name : outputs) result.push_back(*lookup(name));
  return result;
}

}  // namespace scenefuse::onnx
