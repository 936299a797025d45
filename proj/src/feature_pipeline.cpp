#include "scenefuse/feature_pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scenefuse/error.hpp"

namespace scenefuse {
namespace {

void require_finite(std::span<const double> values, std::string_view where) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw Error(ErrorKind::NonFinite,
                  std::string(where) + ": non-finite value at index " + std::to_string(k));
    }
  }
}

void warn(Diagnostics* diagnostics, std::string message) {
  if (diagnostics != nullptr) {
    diagnostics->warnings.push_back(std::move(message));
  } else {
    spdlog::warn("{}", message);
  }
}

}  // namespace

std::string_view to_string(Stream stream) {
  switch (stream) {
    case Stream::Foreground: return "foreground";
    case Stream::Background: return "background";
    case Stream::Hybrid: return "hybrid";
  }
  return "unknown";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Gap: return "gap";
    case Stage::Encoded: return "encoded";
    case Stage::Normalized: return "normalized";
    case Stage::Fused: return "fused";
  }
  return "unknown";
}

std::string_view to_string(Aggregation method) {
  switch (method) {
    case Aggregation::Min: return "min";
    case Aggregation::Max: return "max";
    case Aggregation::Mean: return "mean";
    case Aggregation::Concat: return "concat";
  }
  return "unknown";
}

Stream parse_stream(std::string_view text) {
  if (text == "f" || text == "foreground") return Stream::Foreground;
  if (text == "b" || text == "background") return Stream::Background;
  if (text == "h" || text == "hybrid") return Stream::Hybrid;
  throw Error(ErrorKind::InvalidArgument, "unknown stream '" + std::string(text) + "'");
}

std::vector<Stream> parse_stream_list(std::string_view text) {
  std::vector<Stream> streams;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const Stream stream = parse_stream(item);
    if (std::find(streams.begin(), streams.end(), stream) != streams.end()) {
      throw Error(ErrorKind::InvalidArgument, "stream '" + std::string(item) + "' listed twice");
    }
    streams.push_back(stream);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return streams;
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "min") return Aggregation::Min;
  if (text == "max") return Aggregation::Max;
  if (text == "mean") return Aggregation::Mean;
  if (text == "concat") return Aggregation::Concat;
  throw Error(ErrorKind::InvalidArgument, "unknown aggregation '" + std::string(text) + "'");
}

FeatureTensor::FeatureTensor(std::size_t height, std::size_t width, std::size_t depth,
                             std::vector<double> values)
    : height_(height), width_(width), depth_(depth), values_(std::move(values)) {
  if (height_ == 0 || width_ == 0 || depth_ == 0) {
    throw Error(ErrorKind::InvalidArgument, "feature tensor dimensions must be positive");
  }
  if (values_.size() != height_ * width_ * depth_) {
    throw Error(ErrorKind::DimensionMismatch,
                "feature tensor holds " + std::to_string(values_.size()) + " values, expected " +
                    std::to_string(height_ * width_ * depth_));
  }
}

FeatureTensor FeatureTensor::filled(std::size_t height, std::size_t width, std::size_t depth, double value) {
  return FeatureTensor(height, width, depth, std::vector<double>(height * width * depth, value));
}

std::span<const double> FeatureTensor::feature_map(std::size_t j) const {
  return std::span<const double>(values_).subspan(j * map_size(), map_size());
}

FeatureVector gap(const FeatureTensor& tensor) {
  require_finite(tensor.values(), "gap");
  FeatureVector out{Stage::Gap, std::vector<double>(tensor.depth())};
  const double cells = static_cast<double>(tensor.map_size());
  for (std::size_t j = 0; j < tensor.depth(); ++j) {
    const auto map = tensor.feature_map(j);
    out.values[j] = std::accumulate(map.begin(), map.end(), 0.0) / cells;
  }
  return out;
}

FeatureVector encode(const FeatureVector& gap_vector, Diagnostics* diagnostics) {
  const auto& v = gap_vector.values;
  if (v.empty()) {
    throw Error(ErrorKind::InvalidArgument, "encode: empty vector");
  }
  require_finite(v, "encode");

  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double max = *std::max_element(v.begin(), v.end());

  FeatureVector out{Stage::Encoded, std::vector<double>(v.size(), 0.0)};
  if (std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; })) {
    warn(diagnostics, "encode: negative activations present; encoded values may fall outside [0, 1]");
  }
  if (max == 0.0) {
    return out;
  }
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!(v[j] < mean)) {
      out.values[j] = v[j] / max;
    }
  }
  return out;
}

FeatureVector l2_normalize(const FeatureVector& encoded, const EncodingConfig& config) {
  if (!(config.epsilon > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "l2_normalize: epsilon must be positive");
  }
  require_finite(encoded.values, "l2_normalize");
  double squares = 0.0;
  for (double x : encoded.values) squares += x * x;
  const double denominator = std::sqrt(squares) + config.epsilon;

  FeatureVector out{Stage::Normalized, encoded.values};
  for (double& x : out.values) x /= denominator;
  return out;
}

FeatureVector describe_stream(const FeatureTensor& tensor, const EncodingConfig& config,
                              Diagnostics* diagnostics) {
  return l2_normalize(encode(gap(tensor), diagnostics), config);
}

ProposedFeature aggregate(std::span<const StreamFeature> streams, Aggregation method) {
  if (streams.empty()) {
    throw Error(ErrorKind::InvalidArgument, "aggregate: no streams given");
  }

  ProposedFeature out;
  out.method = method;
  for (const auto& s : streams) out.composition.push_back(s.stream);

  if (method == Aggregation::Concat) {
    std::size_t total = 0;
    for (const auto& s : streams) total += s.vector.dim();
    out.values.reserve(total);
    for (const auto& s : streams) {
      out.offsets.push_back(out.values.size());
      out.values.insert(out.values.end(), s.vector.values.begin(), s.vector.values.end());
    }
    return out;
  }

  const std::size_t dim = streams.front().vector.dim();
  for (const auto& s : streams) {
    if (s.vector.dim() != dim) {
      throw Error(ErrorKind::DimensionMismatch,
                  "aggregate(" + std::string(to_string(method)) + "): stream " +
                      std::string(to_string(s.stream)) + " has dim " + std::to_string(s.vector.dim()) +
                      ", expected " + std::to_string(dim));
    }
  }

  out.values = streams.front().vector.values;
  for (std::size_t k = 1; k < streams.size(); ++k) {
    const auto& other = streams[k].vector.values;
    for (std::size_t j = 0; j < dim; ++j) {
      switch (method) {
        case Aggregation::Min: out.values[j] = std::min(out.values[j], other[j]); break;
        case Aggregation::Max: out.values[j] = std::max(out.values[j], other[j]); break;
        case Aggregation::Mean: out.values[j] += other[j]; break;
        case Aggregation::Concat: break;
      }
    }
  }
  if (method == Aggregation::Mean) {
    const double count = static_cast<double>(streams.size());
    for (double& x : out.values) x /= count;
  }
  return out;
}

std::vector<StreamFeature> split(const ProposedFeature& feature) {
  if (feature.method != Aggregation::Concat) {
    throw Error(ErrorKind::InvalidArgument, "split: only Concat features can be split");
  }
  if (feature.offsets.size() != feature.composition.size()) {
    throw Error(ErrorKind::InvalidArgument, "split: offsets do not match composition");
  }
  std::vector<StreamFeature> parts;
  for (std::size_t k = 0; k < feature.composition.size(); ++k) {
    const std::size_t begin = feature.offsets[k];
    const std::size_t end = k + 1 < feature.offsets.size() ? feature.offsets[k + 1] : feature.values.size();
    if (begin > end || end > feature.values.size()) {
      throw Error(ErrorKind::InvalidArgument, "split: offsets out of range");
    }
    parts.push_back({feature.composition[k],
                     FeatureVector{Stage::Normalized,
                                   std::vector<double>(feature.values.begin() + static_cast<std::ptrdiff_t>(begin),
                                                       feature.values.begin() + static_cast<std::ptrdiff_t>(end))}});
  }
  return parts;
}

ProposedFeature extract_proposed(const TensorProvider& provider, const EncodingConfig& config,
                                 std::span<const Stream> streams, Aggregation method,
                                 Diagnostics* diagnostics) {
  std::vector<StreamFeature> described;
  described.reserve(streams.size());
  for (const Stream stream : streams) {
    try {
      described.push_back({stream, describe_stream(provider(stream), config, diagnostics)});
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(to_string(stream)) + " stream: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Model, std::string(to_string(stream)) + " stream: " + e.what());
    }
  }
  return aggregate(described, method);
}

}  // namespace scenefuse
