#pragma once

// Per-stream scene descriptor: global average pooling over a pooling-layer
// activation block, mean-threshold / max-scale encoding, epsilon-guarded L2
// normalisation, and aggregation of the foreground, background and hybrid
// streams into one representation.
//
// All functions here are pure; they may be called concurrently.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scenefuse {

enum class Stream { Foreground, Background, Hybrid };

enum class Stage { Gap, Encoded, Normalized, Fused };

enum class Aggregation { Min, Max, Mean, Concat };

inline constexpr Stream kCanonicalStreams[] = {Stream::Foreground, Stream::Background, Stream::Hybrid};

std::string_view to_string(Stream stream);
std::string_view to_string(Stage stage);
std::string_view to_string(Aggregation method);
/// Accepts "f"/"foreground", "b"/"background", "h"/"hybrid".
Stream parse_stream(std::string_view text);
/// Comma separated list, e.g. "f,b,h". Order is preserved; duplicates are rejected.
std::vector<Stream> parse_stream_list(std::string_view text);
Aggregation parse_aggregation(std::string_view text);

/// Activation block h x w x d read from one pooling layer.
///
/// Storage is depth-major: feature map j occupies the contiguous range
/// [j*h*w, (j+1)*h*w), so `at(j, i)` is the i-th spatial cell of map j.
class FeatureTensor {
 public:
  FeatureTensor(std::size_t height, std::size_t width, std::size_t depth, std::vector<double> values);

  static FeatureTensor filled(std::size_t height, std::size_t width, std::size_t depth, double value);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t map_size() const noexcept { return height_ * width_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> feature_map(std::size_t j) const;
  double at(std::size_t j, std::size_t i) const { return values_[j * map_size() + i]; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t depth_;
  std::vector<double> values_;
};

struct FeatureVector {
  Stage stage = Stage::Gap;
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

struct EncodingConfig {
  double epsilon = 1e-7;
};

/// Collects warning-level diagnostics. When a function receives no sink the
/// warnings go to the process logger instead.
struct Diagnostics {
  std::vector<std::string> warnings;
};

struct StreamFeature {
  Stream stream;
  FeatureVector vector;
};

struct ProposedFeature {
  std::vector<double> values;
  std::vector<Stream> composition;
  Aggregation method = Aggregation::Concat;
  /// Start offset of each constituent inside `values` (Concat only; one entry
  /// per element of `composition`).
  std::vector<std::size_t> offsets;

  std::size_t dim() const noexcept { return values.size(); }
};

/// Mean of every feature map. Rejects non-finite activations.
FeatureVector gap(const FeatureTensor& tensor);

/// Elements below the vector mean become 0; the rest are divided by the
/// vector maximum. Elements equal to the mean are kept. A zero maximum
/// yields the all-zero vector. Negative inputs are encoded as written but
/// raise a diagnostic because the [0, 1] output range no longer holds.
FeatureVector encode(const FeatureVector& gap_vector, Diagnostics* diagnostics = nullptr);

/// v / (||v||_2 + epsilon).
FeatureVector l2_normalize(const FeatureVector& encoded, const EncodingConfig& config = {});

/// l2_normalize(encode(gap(tensor))).
FeatureVector describe_stream(const FeatureTensor& tensor, const EncodingConfig& config = {},
                              Diagnostics* diagnostics = nullptr);

ProposedFeature aggregate(std::span<const StreamFeature> streams, Aggregation method);

/// Inverse of a Concat aggregation: recovers each constituent stream.
std::vector<StreamFeature> split(const ProposedFeature& feature);

/// Supplies the activation block of one stream for the image being described.
using TensorProvider = std::function<FeatureTensor(Stream)>;

/// Describes each requested stream with `provider` and aggregates them.
/// Defaults reproduce the full representation: foreground, background and
/// hybrid streams concatenated in that order. Failures are rethrown with the
/// failing stream named.
ProposedFeature extract_proposed(const TensorProvider& provider, const EncodingConfig& config = {},
                                 std::span<const Stream> streams = kCanonicalStreams,
                                 Aggregation method = Aggregation::Concat,
                                 Diagnostics* diagnostics = nullptr);

}  // namespace scenefuse
