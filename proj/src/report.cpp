#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "scenefuse/error.hpp"
#include "scenefuse/experiment.hpp"

namespace scenefuse {
namespace {

using json = nlohmann::ordered_json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

std::string chosen_c_text(const ResultRecord& r) {
  std::string out;
  for (const auto& s : r.splits) {
    if (!out.empty()) out += ';';
    out += shortest(s.chosen_c);
  }
  return out;
}

// Quotes a CSV field when it holds a separator, quote or newline.
std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json timing_json(const PhaseTimes& t) {
  return json{{"extraction_seconds", t.extraction_seconds},
              {"training_seconds", t.training_seconds},
              {"testing_seconds", t.testing_seconds},
              {"per_image_extraction", t.per_image_extraction},
              {"per_test_sample", t.per_test_sample}};
}

}  // namespace

std::string composition_label(const std::vector<Stream>& streams) {
  std::string out;
  for (Stream s : streams) {
    if (!out.empty()) out += '+';
    out += to_string(s).substr(0, 1);
  }
  return out;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "jsonl" || text == "json") return ReportFormat::JsonLines;
  throw Error(ErrorKind::InvalidArgument, "unknown report format '" + std::string(text) + "' (csv, jsonl)");
}

void report(const std::vector<ResultRecord>& records, ReportFormat format, std::ostream& out, bool with_timing) {
  if (format == ReportFormat::Csv) {
    out << "experiment,variant,composition,layer,aggregation,dim,accuracy,accuracy_pct,chosen_c,pairs,seed,plan_hash";
    if (with_timing) out << ",extraction_s,training_s,testing_s,per_image_s,per_test_sample_s";
    out << "\n";
    for (const auto& r : records) {
      out << csv_field(r.experiment) << ',' << csv_field(r.variant) << ',' << composition_label(r.composition) << ','
          << short_name(r.layer) << ',' << to_string(r.aggregation) << ',' << r.dim << ',' << fixed(r.accuracy, 6) << ','
          << fixed(100.0 * r.accuracy, 1) << ',' << chosen_c_text(r) << ',' << r.splits.size() << ',' << r.seed << ','
          << r.plan_hash;
      if (with_timing) {
        const auto& t = r.timing;
        out << ',' << fixed(t.extraction_seconds, 6) << ',' << fixed(t.training_seconds, 6) << ','
            << fixed(t.testing_seconds, 6) << ',' << fixed(t.per_image_extraction, 6) << ',' << fixed(t.per_test_sample, 9);
      }
      out << "\n";
    }
    return;
  }
  for (const auto& r : records) {
    json j;
    j["experiment"] = r.experiment;
    j["variant"] = r.variant;
    j["composition"] = composition_label(r.composition);
    j["layer"] = short_name(r.layer);
    j["aggregation"] = to_string(r.aggregation);
    j["dim"] = r.dim;
    j["accuracy"] = r.accuracy;
    j["accuracy_pct"] = fixed(100.0 * r.accuracy, 1);
    j["chosen_c"] = chosen_c_text(r);
    j["pairs"] = r.splits.size();
    j["seed"] = r.seed;
    j["plan_hash"] = r.plan_hash;
    if (with_timing) j["timing"] = timing_json(r.timing);
    out << j.dump() << "\n";
  }
}

std::string record_to_json(const ResultRecord& r) {
  json j;
  j["experiment"] = r.experiment;
  j["variant"] = r.variant;
  j["plan_hash"] = r.plan_hash;
  j["plan"] = r.plan_echo.empty() ? json(nullptr) : json::parse(r.plan_echo);
  j["composition"] = json::array();
  for (Stream s : r.composition) j["composition"].push_back(to_string(s));
  j["layer"] = short_name(r.layer);
  j["aggregation"] = to_string(r.aggregation);
  j["dim"] = r.dim;
  j["seed"] = r.seed;
  j["accuracy"] = r.accuracy;
  j["splits"] = json::array();
  for (const auto& s : r.splits) {
    j["splits"].push_back(json{{"name", s.name},
                               {"accuracy", s.accuracy},
                               {"chosen_c", s.chosen_c},
                               {"train_count", s.train_count},
                               {"test_count", s.test_count}});
  }
  j["timing"] = timing_json(r.timing);
  return j.dump();
}

ResultRecord record_from_json(const std::string& line) {
  try {
    const auto j = json::parse(line);
    ResultRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.plan_hash = j.at("plan_hash").get<std::string>();
    if (!j.at("plan").is_null()) r.plan_echo = j.at("plan").dump();
    for (const auto& s : j.at("composition")) r.composition.push_back(parse_stream(s.get<std::string>()));
    r.layer = parse_layer(j.at("layer").get<std::string>());
    r.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    r.dim = j.at("dim").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& s : j.at("splits")) {
      r.splits.push_back(SplitResult{s.at("name").get<std::string>(), s.at("accuracy").get<double>(),
                                     s.at("chosen_c").get<double>(), s.at("train_count").get<std::size_t>(),
                                     s.at("test_count").get<std::size_t>()});
    }
    const auto& t = j.at("timing");
    r.timing.extraction_seconds = t.at("extraction_seconds").get<double>();
    r.timing.training_seconds = t.at("training_seconds").get<double>();
    r.timing.testing_seconds = t.at("testing_seconds").get<double>();
    r.timing.per_image_extraction = t.at("per_image_extraction").get<double>();
    r.timing.per_test_sample = t.at("per_test_sample").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("result record: ") + e.what());
  }
}

void append_records(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot append to " + path.string());
  for (const auto& r : records) out << record_to_json(r) << "\n";
}

std::vector<ResultRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open results file " + path.string());
  std::vector<ResultRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace scenefuse
