#include "scenefuse/feature_store.hpp"

#include <algorithm>
#include <cmath>

#include "scenefuse/binary_io.hpp"
#include "scenefuse/error.hpp"

namespace scenefuse {
namespace {

constexpr char kStoreMagic[4] = {'S', 'F', 'V', '1'};
constexpr std::uint32_t kStoreVersion = 1;
constexpr std::uint32_t kMaxDescriptor = 1u << 16;

}  // namespace

FeatureStoreWriter::FeatureStoreWriter(const std::filesystem::path& path, std::uint32_t dim, std::string descriptor)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), dim_(dim) {
  if (!out_) throw Error(ErrorKind::Io, "cannot create feature store " + path.string());
  if (dim == 0) throw Error(ErrorKind::InvalidArgument, "feature store dim must be positive");
  if (descriptor.size() > kMaxDescriptor) throw Error(ErrorKind::InvalidArgument, "store descriptor too long");
  out_.write(kStoreMagic, sizeof(kStoreMagic));
  binary::write_u32(out_, kStoreVersion);
  binary::write_u32(out_, dim_);
  binary::write_u32(out_, 0);  // count, patched on close
  binary::write_string(out_, descriptor);
}

FeatureStoreWriter::~FeatureStoreWriter() {
  try {
    close();
  } catch (...) {
  }
}

void FeatureStoreWriter::append(std::uint32_t label, std::span<const double> values) {
  if (closed_) throw Error(ErrorKind::InvalidArgument, "append to a closed feature store");
  if (values.size() != dim_) {
    throw Error(ErrorKind::DimensionMismatch, "store " + path_.string() + " has dim " + std::to_string(dim_) +
                                                  ", got a vector of length " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v) || !std::isfinite(static_cast<float>(v))) {
      throw Error(ErrorKind::NonFinite, "non-finite value appended to " + path_.string());
    }
  }
  binary::write_u32(out_, label);
  for (double v : values) binary::write_f32(out_, static_cast<float>(v));
  ++count_;
}

void FeatureStoreWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(12);
  binary::write_u32(out_, count_);
  out_.close();
  if (!out_) throw Error(ErrorKind::Io, "failed to finalise feature store " + path_.string());
}

FeatureStoreReader::FeatureStoreReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorKind::Io, "cannot open feature store " + path.string());
  char magic[4] = {};
  in_.read(magic, sizeof(magic));
  if (in_.gcount() != 4) throw Error(ErrorKind::Truncated, "feature store " + path.string() + " is truncated");
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kStoreMagic))) {
    throw Error(ErrorKind::Format, path.string() + " is not a feature store (bad magic)");
  }
  header_.version = binary::read_u32(in_, "store version");
  if (header_.version != kStoreVersion) {
    throw Error(ErrorKind::Format, "unsupported feature store version " + std::to_string(header_.version));
  }
  header_.dim = binary::read_u32(in_, "store dim");
  header_.count = binary::read_u32(in_, "store count");
  header_.descriptor = binary::read_string(in_, "store descriptor", kMaxDescriptor);
  if (header_.dim == 0) throw Error(ErrorKind::Format, "feature store has dim 0");

  const auto header_bytes = static_cast<std::uintmax_t>(in_.tellg());
  const std::uintmax_t row_bytes = 4 + 4 * static_cast<std::uintmax_t>(header_.dim);
  const std::uintmax_t expected = header_bytes + row_bytes * header_.count;
  const std::uintmax_t actual = std::filesystem::file_size(path);
  if (actual < expected) {
    throw Error(ErrorKind::Truncated, "feature store " + path.string() + " is truncated: " + std::to_string(actual) +
                                          " bytes, header promises " + std::to_string(expected));
  }
  if (actual > expected) {
    throw Error(ErrorKind::Format, "feature store " + path.string() + " has " + std::to_string(actual - expected) +
                                       " bytes beyond its header count");
  }
}

bool FeatureStoreReader::next(std::uint32_t& label, std::vector<double>& values) {
  if (read_ >= header_.count) return false;
  label = binary::read_u32(in_, "row label");
  values.resize(header_.dim);
  for (double& v : values) {
    v = binary::read_f32(in_, "row values");
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "feature store row " + std::to_string(read_) + " is non-finite");
  }
  ++read_;
  return true;
}

void store_write(const std::filesystem::path& path, std::span<const LabeledVector> rows, std::uint32_t dim,
                 const std::string& descriptor) {
  FeatureStoreWriter writer(path, dim, descriptor);
  for (const auto& row : rows) writer.append(row.label, row.values);
  writer.close();
}

LabeledDataset store_read(const std::filesystem::path& path) {
  FeatureStoreReader reader(path);
  const auto& h = reader.header();
  LabeledDataset data;
  data.features.resize(h.count, h.dim);
  data.labels.reserve(h.count);
  std::uint32_t label = 0;
  std::vector<double> values;
  Eigen::Index row = 0;
  int max_label = -1;
  while (reader.next(label, values)) {
    data.features.row(row++) = Eigen::Map<const Eigen::RowVectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    data.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  data.class_count = max_label + 1;
  return data;
}

StoreHeader read_store_header(const std::filesystem::path& path) { return FeatureStoreReader(path).header(); }

}  // namespace scenefuse
