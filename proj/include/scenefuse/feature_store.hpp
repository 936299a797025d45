#pragma once

// On-disk container of labelled feature vectors.
//
// Layout (all integers and floats little-endian):
//
//     "SFV1"                      4-byte magic
//     u32 version                 currently 1
//     u32 dim
//     u32 count
//     u32 n, n bytes              stream descriptor (free text)
//     count x { u32 label, dim x f32 }
//
// Vectors are held in 64-bit precision in memory and rounded to 32 bits on
// write.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "scenefuse/labeled_dataset.hpp"

namespace scenefuse {

struct StoreHeader {
  std::uint32_t version = 1;
  std::uint32_t dim = 0;
  std::uint32_t count = 0;
  std::string descriptor;
};

/// Single-writer, append-only. The header count is patched by `close()`
/// (also run by the destructor); a store is only valid after close.
class FeatureStoreWriter {
 public:
  FeatureStoreWriter(const std::filesystem::path& path, std::uint32_t dim, std::string descriptor);
  ~FeatureStoreWriter();

  FeatureStoreWriter(const FeatureStoreWriter&) = delete;
  FeatureStoreWriter& operator=(const FeatureStoreWriter&) = delete;

  /// Throws DimensionMismatch for a wrong length and NonFinite for NaN/inf.
  void append(std::uint32_t label, std::span<const double> values);
  void close();

  std::uint32_t count() const noexcept { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t dim_;
  std::uint32_t count_ = 0;
  bool closed_ = false;
};

/// Sequential reader. The constructor validates magic, version and that the
/// file length matches the header count exactly.
class FeatureStoreReader {
 public:
  explicit FeatureStoreReader(const std::filesystem::path& path);

  const StoreHeader& header() const noexcept { return header_; }
  /// Reads the next row; false after the last one.
  bool next(std::uint32_t& label, std::vector<double>& values);

 private:
  std::ifstream in_;
  StoreHeader header_;
  std::uint32_t read_ = 0;
};

struct LabeledVector {
  std::uint32_t label;
  std::vector<double> values;
};

void store_write(const std::filesystem::path& path, std::span<const LabeledVector> rows, std::uint32_t dim,
                 const std::string& descriptor);

/// Reads a whole store. class_count is one past the largest label.
LabeledDataset store_read(const std::filesystem::path& path);

StoreHeader read_store_header(const std::filesystem::path& path);

}  // namespace scenefuse
