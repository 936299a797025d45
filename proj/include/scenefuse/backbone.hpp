#pragma once

// Pre-trained VGG-16 backbones: image preprocessing, model registry and
// pooling-layer activation extraction.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "scenefuse/feature_pipeline.hpp"
#include "scenefuse/onnx_graph.hpp"

namespace scenefuse {

using BackboneKind = Stream;

/// Output of the k-th max-pooling stage of VGG-16.
enum class LayerId { P1, P2, P3, P4, P5 };

inline constexpr LayerId kAllLayers[] = {LayerId::P1, LayerId::P2, LayerId::P3, LayerId::P4, LayerId::P5};

struct LayerShape {
  std::size_t height;
  std::size_t width;
  std::size_t depth;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// "block1_pool" .. "block5_pool".
std::string_view canonical_name(LayerId layer);
/// "p1" .. "p5".
std::string_view short_name(LayerId layer);
/// Shape for a 224 x 224 input: 112x112x64, 56x56x128, 28x28x256, 14x14x512, 7x7x512.
LayerShape expected_shape(LayerId layer);
/// Accepts "p1".."p5" and the canonical names.
LayerId parse_layer(std::string_view text);

enum class ResizeFilter { Bilinear, Nearest, Area, Bicubic };
enum class ChannelOrder { Bgr, Rgb };

std::string_view to_string(ResizeFilter filter);
std::string_view to_string(ChannelOrder order);

struct PreprocessSpec {
  int target_size = 224;
  ResizeFilter resize_filter = ResizeFilter::Bilinear;
  ChannelOrder channel_order = ChannelOrder::Bgr;
  /// Subtracted per output channel, in `channel_order`.
  std::array<double, 3> mean_offsets{103.939, 116.779, 123.68};
};

struct ImageSample {
  std::string id;
  std::filesystem::path source;
  cv::Mat pixels;  // 8-bit, 3 channels, BGR

  /// Decodes `path` into 3 channels. Throws Error{Io} when the file cannot be
  /// decoded or is empty.
  static ImageSample load(const std::filesystem::path& path, std::string id = {});
};

/// Preprocessed network input, height x width x 3, interleaved (HWC).
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::vector<float> values;
};

/// Deterministic resize to target_size x target_size (identity when the image
/// already has that size), channel reorder and mean subtraction.
ImageTensor preprocess(const ImageSample& image, const PreprocessSpec& spec);

/// One loaded backbone. Immutable after load; `activations` is thread-safe.
class Backbone {
 public:
  /// Loads and shape-checks an ONNX model. When `expected_sha256` is non-empty
  /// the file digest must match it.
  static Backbone load(const std::filesystem::path& path, std::string_view expected_sha256 = {});
  static Backbone from_graph(onnx::Graph graph, std::string sha256 = {});

  FeatureTensor activations(LayerId layer, const ImageTensor& input) const;
  /// Several layers from a single forward pass, in the order requested.
  std::vector<FeatureTensor> activations(std::span<const LayerId> layers, const ImageTensor& input) const;

  const std::string& sha256() const noexcept { return sha256_; }
  bool channels_last_input() const noexcept { return channels_last_input_; }

 private:
  Backbone() = default;

  onnx::Tensor to_input(const ImageTensor& image) const;
  FeatureTensor to_feature_tensor(const onnx::Tensor& raw, LayerId layer) const;
  void validate_layers();

  std::shared_ptr<const onnx::Graph> graph_;
  std::array<std::string, 5> layer_tensors_;
  bool channels_last_input_ = false;
  std::string sha256_;
};

struct RegistryEntry {
  std::filesystem::path path;
  std::string sha256;
};

/// Registry config contents before any model is opened.
///
/// Format (INI style, '#' or ';' comments):
///
///     resize_filter = bilinear        # bilinear | nearest | area | bicubic
///     channel_order = bgr             # bgr | rgb
///     mean_offsets = 103.939, 116.779, 123.68
///
///     [foreground]
///     path = vgg16_imagenet.onnx      # relative to the config file
///     sha256 = 3f1c...
///
/// with one section each for foreground, background and hybrid.
struct RegistryConfig {
  std::map<BackboneKind, RegistryEntry> entries;
  PreprocessSpec preprocess;

  static RegistryConfig parse(const std::filesystem::path& path);
};

/// Writes a registry config in the format `RegistryConfig::parse` reads.
void write_registry_config(const std::filesystem::path& path, const RegistryConfig& config);

class ModelRegistry {
 public:
  /// Resolves all three backbones, verifies checksums and shape-checks every
  /// pooling layer.
  static ModelRegistry load(const std::filesystem::path& config_path);
  static ModelRegistry from_config(const RegistryConfig& config);

  const PreprocessSpec& preprocess_spec() const noexcept { return config_.preprocess; }
  const RegistryConfig& config() const noexcept { return config_; }
  const Backbone& backbone(BackboneKind kind) const;

  FeatureTensor activations(BackboneKind kind, LayerId layer, const ImageTensor& input) const;

 private:
  RegistryConfig config_;
  std::map<BackboneKind, std::shared_ptr<const Backbone>> backbones_;
};

}  // namespace scenefuse
