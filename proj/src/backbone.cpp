#include "scenefuse/backbone.hpp"

#include <charconv>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scenefuse/checksum.hpp"
#include "scenefuse/error.hpp"

namespace scenefuse {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

// Inline comments are not stripped by the INI reader.
std::string config_value(std::string raw) {
  if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
  return trim(raw);
}

ResizeFilter parse_resize_filter(std::string_view text) {
  if (text == "bilinear") return ResizeFilter::Bilinear;
  if (text == "nearest") return ResizeFilter::Nearest;
  if (text == "area") return ResizeFilter::Area;
  if (text == "bicubic") return ResizeFilter::Bicubic;
  throw Error(ErrorKind::Parse, "unknown resize_filter '" + std::string(text) + "'");
}

ChannelOrder parse_channel_order(std::string_view text) {
  if (text == "bgr") return ChannelOrder::Bgr;
  if (text == "rgb") return ChannelOrder::Rgb;
  throw Error(ErrorKind::Parse, "unknown channel_order '" + std::string(text) + "'");
}

int cv_interpolation(ResizeFilter filter) {
  switch (filter) {
    case ResizeFilter::Bilinear: return cv::INTER_LINEAR;
    case ResizeFilter::Nearest: return cv::INTER_NEAREST;
    case ResizeFilter::Area: return cv::INTER_AREA;
    case ResizeFilter::Bicubic: return cv::INTER_CUBIC;
  }
  return cv::INTER_LINEAR;
}

}  // namespace

std::string_view canonical_name(LayerId layer) {
  switch (layer) {
    case LayerId::P1: return "block1_pool";
    case LayerId::P2: return "block2_pool";
    case LayerId::P3: return "block3_pool";
    case LayerId::P4: return "block4_pool";
    case LayerId::P5: return "block5_pool";
  }
  return "unknown";
}

std::string_view short_name(LayerId layer) {
  switch (layer) {
    case LayerId::P1: return "p1";
    case LayerId::P2: return "p2";
    case LayerId::P3: return "p3";
    case LayerId::P4: return "p4";
    case LayerId::P5: return "p5";
  }
  return "unknown";
}

LayerShape expected_shape(LayerId layer) {
  switch (layer) {
    case LayerId::P1: return {112, 112, 64};
    case LayerId::P2: return {56, 56, 128};
    case LayerId::P3: return {28, 28, 256};
    case LayerId::P4: return {14, 14, 512};
    case LayerId::P5: return {7, 7, 512};
  }
  return {0, 0, 0};
}

LayerId parse_layer(std::string_view text) {
  for (LayerId layer : kAllLayers) {
    if (text == short_name(layer) || text == canonical_name(layer)) return layer;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown layer '" + std::string(text) + "' (expected p1..p5)");
}

std::string_view to_string(ResizeFilter filter) {
  switch (filter) {
    case ResizeFilter::Bilinear: return "bilinear";
    case ResizeFilter::Nearest: return "nearest";
    case ResizeFilter::Area: return "area";
    case ResizeFilter::Bicubic: return "bicubic";
  }
  return "unknown";
}

std::string_view to_string(ChannelOrder order) { return order == ChannelOrder::Bgr ? "bgr" : "rgb"; }

ImageSample ImageSample::load(const std::filesystem::path& path, std::string id) {
  cv::Mat pixels = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (pixels.empty()) {
    throw Error(ErrorKind::Io, "cannot decode image " + path.string());
  }
  return ImageSample{id.empty() ? path.string() : std::move(id), path, std::move(pixels)};
}

ImageTensor preprocess(const ImageSample& image, const PreprocessSpec& spec) {
  if (image.pixels.empty() || image.pixels.rows == 0 || image.pixels.cols == 0) {
    throw Error(ErrorKind::InvalidArgument, "image '" + image.id + "' has zero area");
  }
  if (image.pixels.type() != CV_8UC3) {
    throw Error(ErrorKind::InvalidArgument, "image '" + image.id + "' is not an 8-bit 3-channel image");
  }
  if (spec.target_size <= 0) {
    throw Error(ErrorKind::InvalidArgument, "preprocess target size must be positive");
  }

  cv::Mat resized;
  if (image.pixels.rows == spec.target_size && image.pixels.cols == spec.target_size) {
    resized = image.pixels;
  } else {
    cv::resize(image.pixels, resized, cv::Size(spec.target_size, spec.target_size), 0, 0,
               cv_interpolation(spec.resize_filter));
  }

  ImageTensor out;
  out.height = resized.rows;
  out.width = resized.cols;
  out.values.resize(static_cast<std::size_t>(out.height) * out.width * 3);
  const bool rgb = spec.channel_order == ChannelOrder::Rgb;
  std::size_t k = 0;
  for (int y = 0; y < resized.rows; ++y) {
    const auto* row = resized.ptr<cv::Vec3b>(y);
    for (int x = 0; x < resized.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int source_channel = rgb ? 2 - c : c;  // decoded pixels are BGR
        out.values[k++] = static_cast<float>(static_cast<double>(row[x][source_channel]) - spec.mean_offsets[c]);
      }
    }
  }
  return out;
}

Backbone Backbone::load(const std::filesystem::path& path, std::string_view expected_sha256) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::Io, "model file " + path.string() + " does not exist");
  }
  const std::string digest = sha256_file(path);
  if (!expected_sha256.empty() && digest != expected_sha256) {
    throw Error(ErrorKind::Checksum, "checksum mismatch for " + path.string() + ": expected " +
                                         std::string(expected_sha256) + ", got " + digest);
  }
  return from_graph(onnx::Graph::load(path), digest);
}

Backbone Backbone::from_graph(onnx::Graph graph, std::string sha256) {
  Backbone backbone;
  backbone.sha256_ = std::move(sha256);

  const auto& shape = graph.input().shape;
  if (shape.size() != 4) {
    throw Error(ErrorKind::Model, "backbone input must be rank 4, got " + onnx::shape_to_string(shape));
  }
  backbone.channels_last_input_ = shape[1] != 3 && shape[3] == 3;

  for (LayerId layer : kAllLayers) {
    auto tensor = graph.find_layer(canonical_name(layer));
    if (!tensor) {
      throw Error(ErrorKind::Model, "graph lacks pooling layer " + std::string(canonical_name(layer)));
    }
    backbone.layer_tensors_[static_cast<std::size_t>(layer)] = *tensor;
  }
  backbone.graph_ = std::make_shared<const onnx::Graph>(std::move(graph));
  backbone.validate_layers();
  return backbone;
}

void Backbone::validate_layers() {
  ImageTensor blank;
  blank.height = blank.width = 224;
  blank.values.assign(224 * 224 * 3, 0.0f);
  // to_feature_tensor enforces the shape table for every layer.
  (void)activations(kAllLayers, blank);
}

onnx::Tensor Backbone::to_input(const ImageTensor& image) const {
  const auto h = static_cast<std::int64_t>(image.height);
  const auto w = static_cast<std::int64_t>(image.width);
  if (static_cast<std::int64_t>(image.values.size()) != h * w * 3) {
    throw Error(ErrorKind::InvalidArgument, "image tensor size does not match its dimensions");
  }
  if (channels_last_input_) {
    onnx::Tensor t;
    t.shape = {1, h, w, 3};
    t.values = image.values;
    return t;
  }
  onnx::Tensor t = onnx::Tensor::zeros({1, 3, h, w});
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) {
        t.values[static_cast<std::size_t>((c * h + y) * w + x)] =
            image.values[static_cast<std::size_t>((y * w + x) * 3 + c)];
      }
    }
  }
  return t;
}

FeatureTensor Backbone::to_feature_tensor(const onnx::Tensor& raw, LayerId layer) const {
  const LayerShape want = expected_shape(layer);
  const auto& s = raw.shape;
  const auto h = static_cast<std::int64_t>(want.height);
  const auto w = static_cast<std::int64_t>(want.width);
  const auto d = static_cast<std::int64_t>(want.depth);
  const bool rank_ok = s.size() == 4 && s[0] == 1;
  const bool channels_first = rank_ok && s[1] == d && s[2] == h && s[3] == w;
  const bool channels_last = rank_ok && s[1] == h && s[2] == w && s[3] == d;
  if (!channels_first && !channels_last) {
    throw Error(ErrorKind::Shape, std::string(canonical_name(layer)) + " has shape " + onnx::shape_to_string(s) +
                                      ", expected " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                                      std::to_string(d) + " (wrong model asset?)");
  }

  std::vector<double> values(static_cast<std::size_t>(h * w * d));
  if (channels_first) {
    std::copy(raw.values.begin(), raw.values.end(), values.begin());
  } else {
    for (std::int64_t cell = 0; cell < h * w; ++cell) {
      for (std::int64_t j = 0; j < d; ++j) {
        values[static_cast<std::size_t>(j * h * w + cell)] = raw.values[static_cast<std::size_t>(cell * d + j)];
      }
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFinite, std::string(canonical_name(layer)) + " produced non-finite activations");
    }
  }
  return FeatureTensor(want.height, want.width, want.depth, std::move(values));
}

FeatureTensor Backbone::activations(LayerId layer, const ImageTensor& input) const {
  const LayerId one[] = {layer};
  return std::move(activations(one, input).front());
}

std::vector<FeatureTensor> Backbone::activations(std::span<const LayerId> layers, const ImageTensor& input) const {
  std::vector<std::string> names;
  names.reserve(layers.size());
  for (LayerId layer : layers) names.push_back(layer_tensors_[static_cast<std::size_t>(layer)]);
  const auto raw = graph_->run(to_input(input), names);

  std::vector<FeatureTensor> out;
  out.reserve(layers.size());
  for (std::size_t k = 0; k < layers.size(); ++k) out.push_back(to_feature_tensor(raw[k], layers[k]));
  return out;
}

RegistryConfig RegistryConfig::parse(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(e.line() == 0 ? ErrorKind::Io : ErrorKind::Parse, "registry config " + path.string() + ": " + e.message() +
                                                                    (e.line() ? " (line " + std::to_string(e.line()) + ")" : ""));
  }

  RegistryConfig config;
  if (auto v = tree.get_optional<std::string>("resize_filter")) {
    config.preprocess.resize_filter = parse_resize_filter(config_value(*v));
  }
  if (auto v = tree.get_optional<std::string>("channel_order")) {
    config.preprocess.channel_order = parse_channel_order(config_value(*v));
  }
  if (auto v = tree.get_optional<std::string>("mean_offsets")) {
    std::string text = config_value(*v);
    for (char& c : text) if (c == ',') c = ' ';
    std::istringstream in(text);
    std::array<double, 3> offsets{};
    for (double& o : offsets) {
      if (!(in >> o)) throw Error(ErrorKind::Parse, "mean_offsets needs three numbers");
    }
    std::string rest;
    if (in >> rest) throw Error(ErrorKind::Parse, "mean_offsets needs exactly three numbers");
    config.preprocess.mean_offsets = offsets;
  }
  if (auto v = tree.get_optional<std::string>("input_size")) {
    config.preprocess.target_size = std::stoi(config_value(*v));
  }

  const auto base = path.parent_path();
  for (Stream kind : kCanonicalStreams) {
    const std::string section(to_string(kind));
    auto child = tree.get_child_optional(section);
    if (!child) {
      throw Error(ErrorKind::Parse, "registry config " + path.string() + " is missing the " + section + " backbone");
    }
    auto model_path = child->get_optional<std::string>("path");
    if (!model_path || config_value(*model_path).empty()) {
      throw Error(ErrorKind::Parse, "registry config: " + section + " has no path");
    }
    RegistryEntry entry;
    entry.path = config_value(*model_path);
    if (entry.path.is_relative()) entry.path = base / entry.path;
    entry.sha256 = config_value(child->get<std::string>("sha256", ""));
    if (entry.sha256.empty()) {
      throw Error(ErrorKind::Parse, "registry config: " + section + " has no sha256");
    }
    config.entries.emplace(kind, std::move(entry));
  }
  return config;
}

void write_registry_config(const std::filesystem::path& path, const RegistryConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto& p = config.preprocess;
  out << "resize_filter = " << to_string(p.resize_filter) << "\n";
  out << "channel_order = " << to_string(p.channel_order) << "\n";
  auto shortest = [](double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
  };
  out << "mean_offsets = " << shortest(p.mean_offsets[0]) << ", " << shortest(p.mean_offsets[1]) << ", "
      << shortest(p.mean_offsets[2]) << "\n";
  out << "input_size = " << p.target_size << "\n";
  const auto base = std::filesystem::absolute(path).parent_path().lexically_normal();
  for (const auto& [kind, entry] : config.entries) {
    std::filesystem::path shown = std::filesystem::absolute(entry.path).lexically_normal();
    auto rel = shown.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") shown = rel;
    out << "\n[" << to_string(kind) << "]\n";
    out << "path = " << shown.string() << "\n";
    out << "sha256 = " << entry.sha256 << "\n";
  }
}

ModelRegistry ModelRegistry::load(const std::filesystem::path& config_path) {
  return from_config(RegistryConfig::parse(config_path));
}

ModelRegistry ModelRegistry::from_config(const RegistryConfig& config) {
  ModelRegistry registry;
  registry.config_ = config;
  for (Stream kind : kCanonicalStreams) {
    auto it = config.entries.find(kind);
    if (it == config.entries.end()) {
      throw Error(ErrorKind::Model, "registry has no " + std::string(to_string(kind)) + " backbone");
    }
    try {
      registry.backbones_.emplace(kind, std::make_shared<const Backbone>(Backbone::load(it->second.path, it->second.sha256)));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(to_string(kind)) + " backbone: " + e.what());
    }
  }
  return registry;
}

const Backbone& ModelRegistry::backbone(BackboneKind kind) const {
  auto it = backbones_.find(kind);
  if (it == backbones_.end()) {
    throw Error(ErrorKind::Model, "no " + std::string(to_string(kind)) + " backbone loaded");
  }
  return *it->second;
}

FeatureTensor ModelRegistry::activations(BackboneKind kind, LayerId layer, const ImageTensor& input) const {
  return backbone(kind).activations(layer, input);
}

}  // namespace scenefuse
