#include "scenefuse/mock_assets.hpp"

#include <opencv2/imgcodecs.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "onnx_subset.pb.h"
#include "scenefuse/checksum.hpp"
#include "scenefuse/error.hpp"

namespace scenefuse::mock {
namespace {

// Portable normal draws: the engine output is fixed by the standard, the
// distribution adaptors of the standard library are not.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void add_ints(::onnx::NodeProto* node, const std::string& name, std::initializer_list<std::int64_t> values) {
  auto* attr = node->add_attribute();
  attr->set_name(name);
  attr->set_type(::onnx::AttributeProto::INTS);
  for (auto v : values) attr->add_ints(v);
}

void add_int(::onnx::NodeProto* node, const std::string& name, std::int64_t value) {
  auto* attr = node->add_attribute();
  attr->set_name(name);
  attr->set_type(::onnx::AttributeProto::INT);
  attr->set_i(value);
}

::onnx::NodeProto* add_node(::onnx::GraphProto* graph, const std::string& op, const std::string& name,
                            std::initializer_list<std::string> inputs, std::initializer_list<std::string> outputs) {
  auto* node = graph->add_node();
  node->set_op_type(op);
  node->set_name(name);
  for (const auto& in : inputs) node->add_input(in);
  for (const auto& out : outputs) node->add_output(out);
  return node;
}

void add_initializer(::onnx::GraphProto* graph, const std::string& name, std::vector<std::int64_t> dims,
                     const std::vector<float>& values) {
  auto* t = graph->add_initializer();
  t->set_name(name);
  t->set_data_type(::onnx::TensorProto::FLOAT);
  for (auto d : dims) t->add_dims(d);
  t->set_raw_data(std::string(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float)));
}

void set_tensor_type(::onnx::ValueInfoProto* value, const std::string& name, std::initializer_list<std::int64_t> dims) {
  value->set_name(name);
  auto* tensor_type = value->mutable_type()->mutable_tensor_type();
  tensor_type->set_elem_type(::onnx::TensorProto::FLOAT);
  for (auto d : dims) tensor_type->mutable_shape()->add_dim()->set_dim_value(d);
}

std::vector<float> he_weights(Gaussian& rng, std::size_t count, std::size_t fan_in) {
  const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<float> w(count);
  for (auto& v : w) v = static_cast<float>(rng.next() * scale);
  return w;
}

}  // namespace

std::string backbone_bytes(const BackboneOptions& options) {
  ::onnx::ModelProto model;
  model.set_ir_version(7);
  model.set_producer_name("scenefuse-mock");
  auto* opset = model.add_opset_import();
  opset->set_domain("");
  opset->set_version(13);

  auto* graph = model.mutable_graph();
  graph->set_name("mock_vgg16");
  Gaussian rng(options.seed);

  const int first_kernel = options.first_pool_kernel;
  std::string current = "input";
  if (options.channels_last) {
    set_tensor_type(graph->add_input(), "input", {1, 224, 224, 3});
    auto* t = add_node(graph, "Transpose", "model/input_nchw", {"input"}, {"input_nchw"});
    add_ints(t, "perm", {0, 3, 1, 2});
    current = "input_nchw";
  } else {
    set_tensor_type(graph->add_input(), "input", {1, 3, 224, 224});
  }

  const std::int64_t channels[] = {3, 64, 128, 256, 512, 512};
  for (int block = 1; block <= 5; ++block) {
    const auto in_c = channels[block - 1];
    const auto out_c = channels[block];
    const std::int64_t k = block == 1 ? 3 : 1;
    const std::int64_t groups = block == 1 ? 1 : 4;
    const std::int64_t group_c = in_c / groups;
    const std::string prefix = "block" + std::to_string(block);
    const std::string weight = prefix + "_conv1/kernel";
    const std::string bias = prefix + "_conv1/bias";
    add_initializer(graph, weight, {out_c, group_c, k, k},
                    he_weights(rng, static_cast<std::size_t>(out_c * group_c * k * k),
                               static_cast<std::size_t>(group_c * k * k)));
    std::vector<float> b(static_cast<std::size_t>(out_c));
    for (auto& v : b) v = static_cast<float>(0.05 * rng.next());
    add_initializer(graph, bias, {out_c}, b);

    auto* conv = add_node(graph, "Conv", prefix + "_conv1", {current, weight, bias}, {prefix + "_conv1_out"});
    add_ints(conv, "kernel_shape", {k, k});
    add_ints(conv, "pads", {k / 2, k / 2, k / 2, k / 2});
    add_ints(conv, "strides", {1, 1});
    add_int(conv, "group", groups);
    add_node(graph, "Relu", prefix + "_relu1", {prefix + "_conv1_out"}, {prefix + "_relu1_out"});

    const bool unnamed = options.unnamed_layer && static_cast<int>(*options.unnamed_layer) == block - 1;
    std::string pool_name = prefix + "_pool";
    std::string pool_out = prefix + "_pool";
    if (unnamed) {
      pool_name = "pool_stage_" + std::to_string(block);
      pool_out = pool_name + "_out";
    } else if (options.channels_last) {
      pool_name = "model/" + prefix + "_pool/MaxPool";
      pool_out = pool_name + ":0";
    }
    const std::int64_t window = block == 1 ? first_kernel : 2;
    auto* pool = add_node(graph, "MaxPool", pool_name, {prefix + "_relu1_out"}, {pool_out});
    add_ints(pool, "kernel_shape", {window, window});
    add_ints(pool, "strides", {window, window});
    current = pool_out;
  }

  if (options.channels_last && !(options.unnamed_layer && *options.unnamed_layer == LayerId::P5)) {
    // Exporters often surface the final pooling block in channels-last order.
    auto* t = add_node(graph, "Transpose", "model/block5_pool/to_nhwc", {current}, {"block5_pool"});
    add_ints(t, "perm", {0, 2, 3, 1});
  }

  add_node(graph, "GlobalAveragePool", "head/gap", {current}, {"head_gap"});
  auto* flatten = add_node(graph, "Flatten", "head/flatten", {"head_gap"}, {"head_flat"});
  add_int(flatten, "axis", 1);
  constexpr std::int64_t kClasses = 10;
  add_initializer(graph, "head/kernel", {512, kClasses}, he_weights(rng, 512 * kClasses, 512));
  add_initializer(graph, "head/bias", {kClasses}, std::vector<float>(kClasses, 0.0f));
  add_node(graph, "Gemm", "head/dense", {"head_flat", "head/kernel", "head/bias"}, {"head_logits"});
  add_node(graph, "Softmax", "predictions", {"head_logits"}, {"predictions"});
  set_tensor_type(graph->add_output(), "predictions", {1, kClasses});

  std::string bytes;
  if (!model.SerializeToString(&bytes)) {
    throw Error(ErrorKind::Model, "failed to serialize mock backbone");
  }
  return bytes;
}

void write_backbone(const std::filesystem::path& path, const BackboneOptions& options) {
  const std::string bytes = backbone_bytes(options);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::filesystem::path write_registry(const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  RegistryConfig config;
  std::uint64_t offset = 0;
  for (Stream kind : kCanonicalStreams) {
    const auto path = dir / ("mock_" + std::string(to_string(kind)) + ".onnx");
    BackboneOptions options;
    options.seed = seed + offset++;
    write_backbone(path, options);
    config.entries[kind] = RegistryEntry{path, sha256_file(path)};
  }
  const auto config_path = dir / "registry.ini";
  write_registry_config(config_path, config);
  return config_path;
}

std::filesystem::path write_scene_set(const std::filesystem::path& dir, const SceneSetOptions& options) {
  if (options.classes < 2 || options.train_per_class < 1 || options.test_per_class < 1) {
    throw Error(ErrorKind::InvalidArgument, "scene set needs >= 2 classes and >= 1 train/test image per class");
  }
  const auto image_dir = dir / "images";
  std::filesystem::create_directories(image_dir);
  std::mt19937_64 rng(options.seed);

  struct Entry {
    std::string file;
    std::string category;
    int index;
    int total;
  };
  std::vector<Entry> entries;

  for (int c = 0; c < options.classes; ++c) {
    const std::string category = "class_" + std::to_string(c);
    // Well separated palette per class: hue steps around the colour wheel.
    const double hue = 2.0 * std::numbers::pi * c / options.classes;
    const double base[3] = {127.0 + 110.0 * std::cos(hue), 127.0 + 110.0 * std::cos(hue + 2.0944),
                            127.0 + 110.0 * std::cos(hue + 4.1888)};
    const double angle = std::numbers::pi * c / options.classes;
    const int total = options.train_per_class + options.test_per_class;
    for (int k = 0; k < total; ++k) {
      cv::Mat image(options.height, options.width, CV_8UC3);
      const double phase = static_cast<double>(rng() % 628) / 100.0;
      for (int y = 0; y < image.rows; ++y) {
        auto* row = image.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.cols; ++x) {
          const double stripe = std::sin(0.35 * (x * std::cos(angle) + y * std::sin(angle)) + phase);
          for (int ch = 0; ch < 3; ++ch) {
            const double noise = static_cast<double>(static_cast<int>(rng() % 31) - 15);
            const double value = base[ch] + 25.0 * stripe + noise;
            row[x][ch] = static_cast<unsigned char>(std::clamp(value, 0.0, 255.0));
          }
        }
      }
      const std::string file = category + "_" + std::to_string(k) + ".png";
      if (!cv::imwrite((image_dir / file).string(), image)) {
        throw Error(ErrorKind::Io, "cannot write synthetic image " + file);
      }
      entries.push_back({file, category, k, total});
    }
  }

  const auto manifest = dir / "manifest.tsv";
  std::ofstream out(manifest);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + manifest.string());
  out << "# synthetic scene set: path\tcategory\tsplit\n";
  // Pair p holds out a rotating window of test_per_class images per class.
  auto is_train = [&](const Entry& e, int pair) {
    return (e.index + e.total - pair % e.total) % e.total < options.train_per_class;
  };
  if (options.split_pairs <= 0) {
    for (const auto& e : entries) {
      out << "images/" << e.file << '\t' << e.category << '\t' << (is_train(e, 0) ? "train" : "test") << '\n';
    }
  } else {
    for (int pair = 0; pair < options.split_pairs; ++pair) {
      char tag[16];
      std::snprintf(tag, sizeof(tag), "split%02d", pair + 1);
      for (const auto& e : entries) {
        out << "images/" << e.file << '\t' << e.category << '\t' << tag << '/' << (is_train(e, pair) ? "train" : "test") << '\n';
      }
    }
  }
  return manifest;
}

}  // namespace scenefuse::mock
