#pragma once

// Orchestration: feature extraction into cached stores, training with the C
// grid search, evaluation, the four ablation families and result reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scenefuse/backbone.hpp"
#include "scenefuse/classifier.hpp"
#include "scenefuse/feature_pipeline.hpp"
#include "scenefuse/manifest.hpp"

namespace scenefuse {

/// Environment variable that, when set, replaces `<out>/stores` as the
/// feature store directory.
inline constexpr const char* kCacheEnvVar = "SCENEFUSE_CACHE";

struct ExperimentPlan {
  std::filesystem::path manifest;  // plain manifest or split suite
  std::filesystem::path registry;
  std::vector<Stream> streams{kCanonicalStreams[0], kCanonicalStreams[1], kCanonicalStreams[2]};
  LayerId layer = LayerId::P5;
  Aggregation aggregation = Aggregation::Concat;
  TrainingConfig training;  // training.seed drives every random choice
  EncodingConfig encoding;
  std::filesystem::path out_dir = "scenefuse-out";
  bool force = false;
  /// Extraction worker threads.
  int jobs = 1;
  /// Run ablation variants concurrently once their stores exist.
  bool parallel_variants = false;

  void validate() const;
  /// Canonical JSON of every field that influences results (output
  /// locations, force and concurrency are excluded).
  std::string echo() const;
  /// SHA-256 of `echo()`.
  std::string hash() const;
  std::filesystem::path store_dir() const;
  std::filesystem::path model_dir() const;
  std::filesystem::path results_path() const;
};

struct StoreInfo {
  Stream stream;
  LayerId layer;
  std::filesystem::path path;
  bool cached = false;
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
};

struct ExtractionSummary {
  std::vector<StoreInfo> stores;
  std::size_t images = 0;
  std::size_t failures = 0;
  /// Backbone forward passes performed (zero on a full cache hit).
  std::size_t inference_calls = 0;
  double seconds = 0.0;
};

struct SplitResult {
  std::string name;
  double accuracy = 0.0;
  double chosen_c = 0.0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

struct PhaseTimes {
  double extraction_seconds = 0.0;
  double training_seconds = 0.0;  // mean over split pairs
  double testing_seconds = 0.0;   // mean over split pairs
  double per_image_extraction = 0.0;
  double per_test_sample = 0.0;
};

struct ResultRecord {
  std::string experiment;  // "eval", "layers", "streams", "aggregation", "combinations"
  std::string variant;
  std::string plan_echo;
  std::string plan_hash;
  std::vector<Stream> composition;
  LayerId layer = LayerId::P5;
  Aggregation aggregation = Aggregation::Concat;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;  // mean over split pairs
  std::vector<SplitResult> splits;
  PhaseTimes timing;

  /// True when plan_hash is the digest of plan_echo.
  bool plan_intact() const;
};

/// Per-pair models produced by `train_models`.
struct TrainedSplits {
  std::vector<std::string> pair_names;
  std::vector<TrainedModel> models;
  std::vector<std::size_t> train_counts;
  double training_seconds = 0.0;  // mean over pairs
};

/// Extracts every requested (stream, layer) store the cache lacks. Stores are
/// keyed by manifest contents, model digest, preprocessing and layer; a
/// matching store is reused unless plan.force is set. Only plan.streams are
/// extracted; `layers` defaults to {plan.layer}.
ExtractionSummary run_extract(const ExperimentPlan& plan, const std::vector<LayerId>& layers = {});

/// Grid-searches C on the training side of every split pair.
TrainedSplits train_models(const ExperimentPlan& plan);

/// Scores trained models on the test side of every pair.
ResultRecord evaluate_models(const ExperimentPlan& plan, const TrainedSplits& trained, std::string experiment = "eval",
                             std::string variant = {});

/// train_models followed by evaluate_models. Stores must already exist.
ResultRecord run_train_eval(const ExperimentPlan& plan, std::string experiment = "eval", std::string variant = {});

/// Persist / reload per-pair models under plan.model_dir().
void save_trained(const ExperimentPlan& plan, const TrainedSplits& trained);
TrainedSplits load_trained(const ExperimentPlan& plan);

/// Trains on one store and evaluates on another. Throws DimensionMismatch
/// when the stores disagree in dimension.
ResultRecord train_eval_stores(const std::filesystem::path& train_store, const std::filesystem::path& test_store,
                               const TrainingConfig& config);

/// p1..p5 with everything else fixed.
std::vector<ResultRecord> ablate_layers(const ExperimentPlan& base);
/// Each stream on its own.
std::vector<ResultRecord> ablate_individual(const ExperimentPlan& base);
/// min, max, mean and concat over the three streams.
std::vector<ResultRecord> ablate_aggregation(const ExperimentPlan& base);
/// [f,b], [f,h], [b,h] and [f,b,h], concatenated.
std::vector<ResultRecord> ablate_combinations(const ExperimentPlan& base);

enum class ReportFormat { Csv, JsonLines };

ReportFormat parse_report_format(std::string_view text);

/// Deterministic table of records. Wall-clock columns are included only with
/// `with_timing`, so reports of identical runs compare byte for byte.
void report(const std::vector<ResultRecord>& records, ReportFormat format, std::ostream& out, bool with_timing = false);

/// Full record (including timing) as one JSON line, and back.
std::string record_to_json(const ResultRecord& record);
ResultRecord record_from_json(const std::string& line);
void append_records(const std::filesystem::path& path, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records(const std::filesystem::path& path);

/// "f+b+h" style label for a stream list.
std::string composition_label(const std::vector<Stream>& streams);

}  // namespace scenefuse
