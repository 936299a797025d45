#include "scenefuse/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "scenefuse/error.hpp"

namespace scenefuse {
namespace {

struct ProtocolCounts {
  std::size_t categories;
  std::size_t train;
  std::size_t test;
  std::size_t pairs;
};

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Returns {pair name, is_train}; pair name "default" for bare tags.
std::pair<std::string, bool> classify_tag(std::string_view tag) {
  std::string_view pair = "default";
  std::string_view side = tag;
  if (const auto slash = tag.rfind('/'); slash != std::string_view::npos) {
    pair = tag.substr(0, slash);
    side = tag.substr(slash + 1);
  }
  if (side == "train") return {std::string(pair), true};
  if (side == "test") return {std::string(pair), false};
  throw Error(ErrorKind::Parse, "split tag '" + std::string(tag) + "' is neither train nor test");
}

}  // namespace

SampleManifest SampleManifest::parse(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + file.string());
  SampleManifest m = parse(in, file.string());
  m.base_dir_ = file.parent_path();
  return m;
}

SampleManifest SampleManifest::parse(std::istream& in, std::string_view origin) {
  std::vector<SampleRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = strip_cr(std::move(line));
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw Error(ErrorKind::Parse, std::string(origin) + ":" + std::to_string(number) + ": expected 3 non-empty tab-separated fields, got " +
                                        std::to_string(fields.size()));
    }
    records.push_back(SampleRecord{fields[0], fields[1], fields[2], number});
  }
  if (records.empty()) {
    throw Error(ErrorKind::Parse, std::string(origin) + ": manifest has no records");
  }
  return from_records(std::move(records));
}

SampleManifest SampleManifest::from_records(std::vector<SampleRecord> records) {
  SampleManifest m;
  std::set<std::pair<std::string_view, std::string_view>> seen;
  std::set<std::string, std::less<>> names;
  for (const auto& r : records) {
    if (!seen.emplace(r.path, r.split).second) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(r.line) + ": duplicate path '" + r.path + "' in split '" +
                                        r.split + "'");
    }
    names.insert(r.category);
  }
  m.records_ = std::move(records);
  m.categories_.assign(names.begin(), names.end());
  for (std::size_t k = 0; k < m.categories_.size(); ++k) m.index_.emplace(m.categories_[k], static_cast<int>(k));
  return m;
}

int SampleManifest::category_index(std::string_view category) const {
  auto it = index_.find(category);
  if (it == index_.end()) throw Error(ErrorKind::InvalidArgument, "unknown category '" + std::string(category) + "'");
  return it->second;
}

std::filesystem::path SampleManifest::resolve(const SampleRecord& record) const {
  std::filesystem::path p(record.path);
  return p.is_absolute() ? p : base_dir_ / p;
}

std::vector<std::pair<std::string, int>> SampleManifest::unique_images() const {
  std::vector<std::pair<std::string, int>> out;
  std::unordered_map<std::string_view, int> label_of;
  for (const auto& r : records_) {
    const int label = category_index(r.category);
    auto [it, inserted] = label_of.emplace(r.path, label);
    if (inserted) {
      out.emplace_back(r.path, label);
    } else if (it->second != label) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(r.line) + ": path '" + r.path +
                                        "' appears under two categories");
    }
  }
  return out;
}

SplitSuite SplitSuite::from_manifest(const SampleManifest& manifest) {
  std::map<std::string, SplitPair> pairs;
  const auto& records = manifest.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [name, train] = classify_tag(records[i].split);
    auto& pair = pairs[name];
    pair.name = name;
    (train ? pair.train : pair.test).push_back(i);
  }
  SplitSuite suite;
  for (auto& [name, pair] : pairs) {
    if (pair.train.empty() || pair.test.empty()) {
      throw Error(ErrorKind::Parse, "split pair '" + name + "' lacks a " + (pair.train.empty() ? "train" : "test") + " side");
    }
    suite.pairs.push_back(std::move(pair));
  }
  return suite;
}

std::size_t SplitSuite::total_slots() const {
  std::size_t total = 0;
  for (const auto& p : pairs) total += p.train.size() + p.test.size();
  return total;
}

std::vector<std::string> overlap_violations(const SampleManifest& manifest, const SplitSuite& suite) {
  std::vector<std::string> out;
  const auto& records = manifest.records();
  for (const auto& pair : suite.pairs) {
    std::unordered_set<std::string_view> train;
    for (auto i : pair.train) train.insert(records[i].path);
    for (auto i : pair.test) {
      if (train.contains(records[i].path)) out.push_back(pair.name + ": " + records[i].path + " is in both train and test");
    }
  }
  return out;
}

Protocol parse_protocol(std::string_view text) {
  if (text == "mit67") return Protocol::Mit67;
  if (text == "sun397") return Protocol::Sun397;
  if (text == "free") return Protocol::Free;
  throw Error(ErrorKind::InvalidArgument, "unknown protocol '" + std::string(text) + "' (mit67, sun397, free)");
}

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::Mit67: return "mit67";
    case Protocol::Sun397: return "sun397";
    case Protocol::Free: return "free";
  }
  return "unknown";
}

ProtocolReport validate_protocol(const SampleManifest& manifest, Protocol protocol) {
  ProtocolReport report;
  report.protocol = protocol;
  report.category_count = manifest.categories().size();

  SplitSuite suite;
  try {
    suite = SplitSuite::from_manifest(manifest);
  } catch (const Error& e) {
    report.violations.push_back(e.what());
    return report;
  }
  report.pair_count = suite.pairs.size();
  report.total_slots = suite.total_slots();
  for (auto& v : overlap_violations(manifest, suite)) report.violations.push_back(std::move(v));

  if (protocol == Protocol::Free) return report;

  const ProtocolCounts want = protocol == Protocol::Mit67 ? ProtocolCounts{67, 80, 20, 1} : ProtocolCounts{397, 50, 50, 10};
  if (report.category_count != want.categories) {
    report.violations.push_back("expected " + std::to_string(want.categories) + " categories, found " +
                                std::to_string(report.category_count));
  }
  if (report.pair_count != want.pairs) {
    report.violations.push_back("expected " + std::to_string(want.pairs) + " split pair(s), found " +
                                std::to_string(report.pair_count));
  }

  const auto& records = manifest.records();
  const std::size_t k = manifest.categories().size();
  for (const auto& pair : suite.pairs) {
    std::vector<std::size_t> train(k, 0), test(k, 0);
    for (auto i : pair.train) ++train[static_cast<std::size_t>(manifest.category_index(records[i].category))];
    for (auto i : pair.test) ++test[static_cast<std::size_t>(manifest.category_index(records[i].category))];
    const std::string where = suite.pairs.size() > 1 || pair.name != "default" ? pair.name + ": " : "";
    for (std::size_t c = 0; c < k; ++c) {
      if (train[c] != want.train) {
        report.violations.push_back(where + "category '" + manifest.categories()[c] + "' has " +
                                    std::to_string(train[c]) + " train images, expected " + std::to_string(want.train));
      }
      if (test[c] != want.test) {
        report.violations.push_back(where + "category '" + manifest.categories()[c] + "' has " +
                                    std::to_string(test[c]) + " test images, expected " + std::to_string(want.test));
      }
    }
  }
  return report;
}

}  // namespace scenefuse
