#pragma once

// Stand-ins for the pre-trained backbones and the scene datasets: small
// random-weight ONNX graphs with the VGG-16 pooling-layer names and shapes,
// and procedurally drawn scene images with a matching manifest. Used by the
// tests and by `make_mock_assets` for trying the tool without real weights.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "scenefuse/backbone.hpp"

namespace scenefuse::mock {

struct BackboneOptions {
  std::uint64_t seed = 1;
  /// Feed NHWC input through a leading Transpose and use exporter-style node
  /// names ("model/block3_pool/MaxPool:0"); block5_pool is exposed NHWC.
  bool channels_last = false;
  /// Leave this layer unnamed, producing a graph that fails registry checks.
  std::optional<LayerId> unnamed_layer;
  /// Pooling window of the first block; 4 yields a 56x56 block1_pool, which
  /// breaks the shape table.
  int first_pool_kernel = 2;
};

/// Serialized ONNX model: per block a convolution (3x3 in block 1, grouped
/// 1x1 afterwards), ReLU and 2x2 max pooling, followed by a small softmax
/// head.
std::string backbone_bytes(const BackboneOptions& options);
void write_backbone(const std::filesystem::path& path, const BackboneOptions& options);

/// Three mock backbones (seeds seed, seed+1, seed+2) plus `registry.ini` in
/// `dir`. Returns the config path.
std::filesystem::path write_registry(const std::filesystem::path& dir, std::uint64_t seed = 1);

struct SceneSetOptions {
  int classes = 3;
  int train_per_class = 6;
  int test_per_class = 2;
  int width = 96;
  int height = 72;
  std::uint64_t seed = 7;
  /// 0 writes a plain "train"/"test" manifest; N > 0 writes N split pairs
  /// tagged "splitNN/train" and "splitNN/test" over the same images.
  int split_pairs = 0;
};

/// Writes PNG images under `dir/images` and `dir/manifest.tsv`. Each class
/// has its own colour palette and stripe orientation, so classes are visually
/// distinct. Returns the manifest path.
std::filesystem::path write_scene_set(const std::filesystem::path& dir, const SceneSetOptions& options);

}  // namespace scenefuse::mock
