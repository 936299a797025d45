#pragma once

// Sample manifests and split bookkeeping for the MIT-67 and SUN-397 style
// evaluation protocols.
//
// Manifest format: UTF-8 text, one record per line,
//
//     path<TAB>category<TAB>split
//
// blank lines and lines starting with '#' are ignored. Split tags are free
// strings. A plain manifest uses "train" and "test"; a split suite uses
// "<pair>/train" and "<pair>/test" (e.g. "split03/train").

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scenefuse {

struct SampleRecord {
  std::string path;
  std::string category;
  std::string split;
  std::size_t line = 0;  // 1-based line in the source file
};

class SampleManifest {
 public:
  static SampleManifest parse(const std::filesystem::path& file);
  static SampleManifest parse(std::istream& in, std::string_view origin = "<stream>");
  static SampleManifest from_records(std::vector<SampleRecord> records);

  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  /// Sorted category names; index = label.
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  int class_count() const noexcept { return static_cast<int>(categories_.size()); }
  int category_index(std::string_view category) const;

  /// Directory relative record paths are resolved against.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::filesystem::path resolve(const SampleRecord& record) const;

  /// Unique image paths in first-appearance order with their label. Throws
  /// when one path is recorded under two categories.
  std::vector<std::pair<std::string, int>> unique_images() const;

 private:
  std::vector<SampleRecord> records_;
  std::vector<std::string> categories_;
  std::map<std::string, int, std::less<>> index_;
  std::filesystem::path base_dir_;
};

struct SplitPair {
  std::string name;
  std::vector<std::size_t> train;  // record indices
  std::vector<std::size_t> test;
};

struct SplitSuite {
  std::vector<SplitPair> pairs;

  /// Groups "train"/"test" into one pair named "default" and
  /// "<name>/train" / "<name>/test" into pair <name>. Pairs are ordered by
  /// name. Throws on an unrecognised tag or a pair missing one side.
  static SplitSuite from_manifest(const SampleManifest& manifest);

  std::size_t total_slots() const;
};

/// Paths shared by the train and test side of each pair, as
/// "<pair>: <path>" messages.
std::vector<std::string> overlap_violations(const SampleManifest& manifest, const SplitSuite& suite);

enum class Protocol { Mit67, Sun397, Free };

Protocol parse_protocol(std::string_view text);
std::string_view to_string(Protocol protocol);

struct ProtocolReport {
  Protocol protocol = Protocol::Free;
  std::size_t category_count = 0;
  std::size_t pair_count = 0;
  std::size_t total_slots = 0;
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Mit67: 67 categories with 80 train / 20 test images each.
/// Sun397: 397 categories with 50 / 50 per pair, 10 pairs.
/// Free: structural checks only (pairing, disjointness).
/// Never throws for count problems; they are listed in the report.
ProtocolReport validate_protocol(const SampleManifest& manifest, Protocol protocol);

}  // namespace scenefuse
