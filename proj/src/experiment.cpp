#include "scenefuse/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "scenefuse/checksum.hpp"
#include "scenefuse/error.hpp"
#include "scenefuse/feature_store.hpp"

namespace scenefuse {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::ordered_json;

constexpr int kStoreLayoutVersion = 1;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string preprocess_text(const PreprocessSpec& spec) {
  return "size=" + std::to_string(spec.target_size) + " filter=" + std::string(to_string(spec.resize_filter)) +
         " order=" + std::string(to_string(spec.channel_order)) + " mean=" + format_double(spec.mean_offsets[0]) + "," +
         format_double(spec.mean_offsets[1]) + "," + format_double(spec.mean_offsets[2]);
}

std::filesystem::path store_path(const std::filesystem::path& dir, Stream stream, LayerId layer) {
  return dir / (std::string(to_string(stream)) + "." + std::string(short_name(layer)) + ".sfv");
}

std::filesystem::path meta_path(const std::filesystem::path& store) {
  auto p = store;
  p += ".meta.json";
  return p;
}

std::string manifest_digest(const SampleManifest& manifest, const std::vector<std::pair<std::string, int>>& images) {
  std::string text;
  for (const auto& c : manifest.categories()) text += c + "\n";
  text += "--\n";
  for (const auto& [path, label] : images) text += path + "\t" + std::to_string(label) + "\n";
  return sha256_hex(text);
}

std::string store_key(const std::string& digest, const RegistryConfig& config, Stream stream, LayerId layer,
                      const EncodingConfig& encoding) {
  json key;
  key["layout"] = kStoreLayoutVersion;
  key["manifest"] = digest;
  key["model"] = config.entries.at(stream).sha256;
  key["preprocess"] = preprocess_text(config.preprocess);
  key["stream"] = to_string(stream);
  key["layer"] = canonical_name(layer);
  key["epsilon"] = format_double(encoding.epsilon);
  return sha256_hex(key.dump());
}

struct StoreMeta {
  std::string key;
  std::vector<std::string> rows;
  double seconds = 0.0;
  std::size_t images = 0;
};

std::optional<StoreMeta> read_meta(const std::filesystem::path& store) {
  std::ifstream in(meta_path(store));
  if (!in) return std::nullopt;
  try {
    const auto j = json::parse(in);
    StoreMeta meta;
    meta.key = j.at("key").get<std::string>();
    meta.rows = j.at("rows").get<std::vector<std::string>>();
    meta.seconds = j.at("extraction_seconds").get<double>();
    meta.images = j.at("images").get<std::size_t>();
    return meta;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void write_meta(const std::filesystem::path& store, const StoreMeta& meta, Stream stream, LayerId layer) {
  json j;
  j["key"] = meta.key;
  j["stream"] = to_string(stream);
  j["layer"] = canonical_name(layer);
  j["images"] = meta.images;
  j["extraction_seconds"] = meta.seconds;
  j["rows"] = meta.rows;
  std::ofstream out(meta_path(store), std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + meta_path(store).string());
  out << j.dump(1) << "\n";
}

// A store is reusable when its sidecar names the same key and the store
// itself opens cleanly with one row per listed image.
bool store_is_current(const std::filesystem::path& store, const std::string& key, StoreHeader* header) {
  auto meta = read_meta(store);
  if (!meta || meta->key != key) return false;
  try {
    auto h = read_store_header(store);
    if (h.count != meta->rows.size()) return false;
    if (header) *header = h;
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string safe_name(std::string name) {
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return name;
}

struct PendingStore {
  Stream stream;
  LayerId layer;
  std::filesystem::path path;
  std::string key;
  std::unique_ptr<FeatureStoreWriter> writer;
  std::vector<std::string> rows;
  double seconds = 0.0;
};

// Fused representation of every image present in all requested stores.
struct FusedFeatures {
  std::unordered_map<std::string, Eigen::Index> row_of;
  Eigen::MatrixXd features;
  std::size_t dim = 0;
  double extraction_seconds = 0.0;
  std::size_t images = 0;
};

FusedFeatures load_fused(const ExperimentPlan& plan, const SampleManifest& manifest) {
  const auto images = manifest.unique_images();
  const auto digest = manifest_digest(manifest, images);
  const auto config = RegistryConfig::parse(plan.registry);
  const auto dir = plan.store_dir();

  std::vector<LabeledDataset> data;
  std::vector<std::unordered_map<std::string, Eigen::Index>> rows;
  FusedFeatures fused;
  for (Stream stream : plan.streams) {
    const auto path = store_path(dir, stream, plan.layer);
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorKind::Io, "feature store " + path.string() + " is missing; run extract first");
    }
    const auto key = store_key(digest, config, stream, plan.layer, plan.encoding);
    auto meta = read_meta(path);
    if (!meta || meta->key != key) {
      throw Error(ErrorKind::Format, "feature store " + path.string() + " does not match the manifest and registry; run extract again");
    }
    data.push_back(store_read(path));
    if (data.back().size() != meta->rows.size()) {
      throw Error(ErrorKind::Format, "feature store " + path.string() + " disagrees with its row list");
    }
    auto& index = rows.emplace_back();
    for (std::size_t r = 0; r < meta->rows.size(); ++r) index.emplace(meta->rows[r], static_cast<Eigen::Index>(r));
    fused.extraction_seconds += meta->seconds;
    fused.images = std::max(fused.images, meta->images);
  }

  std::vector<std::string> present;
  for (const auto& [path, label] : images) {
    bool everywhere = true;
    for (const auto& index : rows) everywhere = everywhere && index.contains(path);
    if (everywhere) present.push_back(path);
  }
  if (present.empty()) throw Error(ErrorKind::EmptyClass, "no image has features in every requested store");

  for (std::size_t i = 0; i < present.size(); ++i) {
    std::vector<StreamFeature> parts;
    parts.reserve(plan.streams.size());
    for (std::size_t s = 0; s < plan.streams.size(); ++s) {
      const auto r = rows[s].at(present[i]);
      const auto& m = data[s].features;
      FeatureVector v{Stage::Normalized, std::vector<double>(static_cast<std::size_t>(m.cols()))};
      for (Eigen::Index c = 0; c < m.cols(); ++c) v.values[static_cast<std::size_t>(c)] = m(r, c);
      parts.push_back(StreamFeature{plan.streams[s], std::move(v)});
    }
    auto feature = aggregate(parts, plan.aggregation);
    if (i == 0) {
      fused.dim = feature.dim();
      fused.features.resize(static_cast<Eigen::Index>(present.size()), static_cast<Eigen::Index>(fused.dim));
    }
    fused.features.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(feature.values.data(), static_cast<Eigen::Index>(feature.dim()));
    fused.row_of.emplace(present[i], static_cast<Eigen::Index>(i));
  }
  return fused;
}

LabeledDataset gather(const SampleManifest& manifest, const FusedFeatures& fused, const std::vector<std::size_t>& records,
                      const std::string& what) {
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  std::size_t missing = 0;
  for (auto i : records) {
    const auto& r = manifest.records()[i];
    auto it = fused.row_of.find(r.path);
    if (it == fused.row_of.end()) {
      ++missing;
      continue;
    }
    rows.push_back(it->second);
    labels.push_back(manifest.category_index(r.category));
  }
  if (missing) spdlog::warn("{}: {} image(s) without features skipped", what, missing);
  LabeledDataset data;
  data.class_count = manifest.class_count();
  data.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fused.dim));
  for (std::size_t k = 0; k < rows.size(); ++k) data.features.row(static_cast<Eigen::Index>(k)) = fused.features.row(rows[k]);
  data.labels = std::move(labels);
  return data;
}

struct Variant {
  ExperimentPlan plan;
  std::string name;
};

// Stores are read-only at this point, so variants may train concurrently.
std::vector<ResultRecord> run_variants(const std::vector<Variant>& variants, const std::string& experiment,
                                       bool parallel) {
  std::vector<ResultRecord> out(variants.size());
  if (!parallel) {
    for (std::size_t v = 0; v < variants.size(); ++v) out[v] = run_train_eval(variants[v].plan, experiment, variants[v].name);
    return out;
  }
  std::vector<std::future<ResultRecord>> futures;
  for (const auto& v : variants) {
    futures.push_back(std::async(std::launch::async, [&v, &experiment] { return run_train_eval(v.plan, experiment, v.name); }));
  }
  for (std::size_t v = 0; v < variants.size(); ++v) out[v] = futures[v].get();
  return out;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (manifest.empty()) throw Error(ErrorKind::InvalidArgument, "plan needs a manifest");
  if (registry.empty()) throw Error(ErrorKind::InvalidArgument, "plan needs a registry config");
  if (streams.empty()) throw Error(ErrorKind::InvalidArgument, "plan needs at least one stream");
  std::set<Stream> seen(streams.begin(), streams.end());
  if (seen.size() != streams.size()) throw Error(ErrorKind::InvalidArgument, "plan lists a stream twice");
  if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be at least 1");
  if (!(encoding.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  training.validate();
}

std::string ExperimentPlan::echo() const {
  json j;
  j["manifest"] = manifest.generic_string();
  j["registry"] = registry.generic_string();
  j["streams"] = json::array();
  for (Stream s : streams) j["streams"].push_back(to_string(s));
  j["layer"] = short_name(layer);
  j["aggregation"] = to_string(aggregation);
  j["c_grid"] = training.c_grid;
  j["cv_folds"] = training.cv_folds;
  j["tolerance"] = training.tolerance;
  j["max_iterations"] = training.max_iterations;
  j["fit_bias"] = training.fit_bias;
  j["seed"] = training.seed;
  j["epsilon"] = encoding.epsilon;
  return j.dump();
}

std::string ExperimentPlan::hash() const { return sha256_hex(echo()); }

std::filesystem::path ExperimentPlan::store_dir() const {
  if (const char* env = std::getenv(kCacheEnvVar); env && *env) return env;
  return out_dir / "stores";
}

std::filesystem::path ExperimentPlan::model_dir() const { return out_dir / "models" / hash(); }

std::filesystem::path ExperimentPlan::results_path() const { return out_dir / "results.jsonl"; }

bool ResultRecord::plan_intact() const { return !plan_echo.empty() && sha256_hex(plan_echo) == plan_hash; }

ExtractionSummary run_extract(const ExperimentPlan& plan, const std::vector<LayerId>& requested) {
  plan.validate();
  const auto start = Clock::now();
  std::vector<LayerId> layers = requested.empty() ? std::vector<LayerId>{plan.layer} : requested;
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());

  const auto manifest = SampleManifest::parse(plan.manifest);
  const auto images = manifest.unique_images();
  const auto digest = manifest_digest(manifest, images);
  const auto config = RegistryConfig::parse(plan.registry);
  const auto dir = plan.store_dir();
  std::filesystem::create_directories(dir);

  ExtractionSummary summary;
  summary.images = images.size();
  std::vector<PendingStore> pending;
  for (Stream stream : plan.streams) {
    for (LayerId layer : layers) {
      const auto path = store_path(dir, stream, layer);
      const auto key = store_key(digest, config, stream, layer, plan.encoding);
      StoreHeader header;
      if (!plan.force && store_is_current(path, key, &header)) {
        summary.stores.push_back(StoreInfo{stream, layer, path, true, header.count, header.dim});
        spdlog::info("store {} is current, skipping", path.filename().string());
        continue;
      }
      pending.push_back(PendingStore{stream, layer, path, key, nullptr, {}, 0.0});
    }
  }
  if (pending.empty()) {
    summary.seconds = seconds_since(start);
    return summary;
  }

  const auto registry = ModelRegistry::from_config(config);
  const auto& spec = registry.preprocess_spec();

  // Streams needing a forward pass, with the layers each must deliver.
  std::map<Stream, std::vector<std::size_t>> by_stream;
  for (std::size_t p = 0; p < pending.size(); ++p) by_stream[pending[p].stream].push_back(p);

  for (auto& p : pending) {
    auto partial = p.path;
    partial += ".partial";
    const auto dim = static_cast<std::uint32_t>(expected_shape(p.layer).depth);
    const std::string descriptor = "stream=" + std::string(to_string(p.stream)) + " layer=" +
                                   std::string(canonical_name(p.layer)) + " stage=normalized key=" + p.key;
    p.writer = std::make_unique<FeatureStoreWriter>(partial, dim, descriptor);
  }

  struct ImageResult {
    bool ok = false;
    std::string error;
    std::vector<std::vector<double>> vectors;  // per pending store
    std::vector<double> seconds;               // per pending store
  };

  std::atomic<std::size_t> inference_calls{0};
  std::vector<int> kept_per_class(static_cast<std::size_t>(manifest.class_count()), 0);
  std::size_t failures = 0;
  const std::size_t jobs = static_cast<std::size_t>(plan.jobs);
  const std::size_t chunk = 32 * jobs;

  auto describe_image = [&](std::size_t index, ImageResult& result) {
    const auto& [rel, label] = images[index];
    try {
      const auto t0 = Clock::now();
      const auto sample = ImageSample::load(manifest.resolve(SampleRecord{rel, {}, {}, 0}), rel);
      const auto input = preprocess(sample, spec);
      const double shared = seconds_since(t0) / static_cast<double>(by_stream.size());
      result.vectors.assign(pending.size(), {});
      result.seconds.assign(pending.size(), 0.0);
      for (const auto& [stream, slots] : by_stream) {
        const auto t1 = Clock::now();
        std::vector<LayerId> wanted;
        for (auto s : slots) wanted.push_back(pending[s].layer);
        auto tensors = registry.backbone(stream).activations(wanted, input);
        ++inference_calls;
        for (std::size_t k = 0; k < slots.size(); ++k) {
          result.vectors[slots[k]] = describe_stream(tensors[k], plan.encoding).values;
        }
        const double spent = seconds_since(t1) + shared;
        for (auto s : slots) result.seconds[s] = spent;
      }
      result.ok = true;
    } catch (const std::exception& e) {
      result.error = e.what();
    }
  };

  for (std::size_t begin = 0; begin < images.size(); begin += chunk) {
    const std::size_t end = std::min(images.size(), begin + chunk);
    std::vector<ImageResult> results(end - begin);
    std::atomic<std::size_t> next{begin};
    auto worker = [&] {
      for (std::size_t i = next++; i < end; i = next++) describe_image(i, results[i - begin]);
    };
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < std::min(jobs, end - begin); ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    for (std::size_t i = begin; i < end; ++i) {
      auto& r = results[i - begin];
      const auto& [rel, label] = images[i];
      if (!r.ok) {
        ++failures;
        spdlog::warn("skipping {}: {}", rel, r.error);
        continue;
      }
      ++kept_per_class[static_cast<std::size_t>(label)];
      for (std::size_t p = 0; p < pending.size(); ++p) {
        pending[p].writer->append(static_cast<std::uint32_t>(label), r.vectors[p]);
        pending[p].rows.push_back(rel);
        pending[p].seconds += r.seconds[p];
      }
    }
    spdlog::info("extracted {}/{} images", end, images.size());
  }

  auto discard = [&] {
    for (auto& p : pending) {
      p.writer.reset();
      auto partial = p.path;
      partial += ".partial";
      std::error_code ec;
      std::filesystem::remove(partial, ec);
    }
  };
  for (std::size_t k = 0; k < kept_per_class.size(); ++k) {
    if (kept_per_class[k] == 0) {
      discard();
      throw Error(ErrorKind::EmptyClass, "category '" + manifest.categories()[k] + "' has no image left after extraction failures");
    }
  }

  for (auto& p : pending) {
    p.writer->close();
    p.writer.reset();
    auto partial = p.path;
    partial += ".partial";
    std::filesystem::rename(partial, p.path);
    write_meta(p.path, StoreMeta{p.key, p.rows, p.seconds, images.size()}, p.stream, p.layer);
    const auto h = read_store_header(p.path);
    summary.stores.push_back(StoreInfo{p.stream, p.layer, p.path, false, h.count, h.dim});
  }
  summary.failures = failures;
  summary.inference_calls = inference_calls.load();
  summary.seconds = seconds_since(start);
  return summary;
}

TrainedSplits train_models(const ExperimentPlan& plan) {
  plan.validate();
  const auto manifest = SampleManifest::parse(plan.manifest);
  const auto suite = SplitSuite::from_manifest(manifest);
  const auto fused = load_fused(plan, manifest);

  TrainedSplits out;
  for (const auto& pair : suite.pairs) {
    auto train = gather(manifest, fused, pair.train, pair.name + "/train");
    const auto t0 = Clock::now();
    out.models.push_back(grid_search(train, plan.training));
    out.training_seconds += seconds_since(t0);
    out.pair_names.push_back(pair.name);
    out.train_counts.push_back(train.size());
    spdlog::info("pair {}: trained on {} images, C = {}", pair.name, train.size(), out.models.back().chosen_c);
  }
  out.training_seconds /= static_cast<double>(suite.pairs.size());
  return out;
}

ResultRecord evaluate_models(const ExperimentPlan& plan, const TrainedSplits& trained, std::string experiment,
                             std::string variant) {
  plan.validate();
  const auto manifest = SampleManifest::parse(plan.manifest);
  const auto suite = SplitSuite::from_manifest(manifest);
  const auto fused = load_fused(plan, manifest);
  if (trained.models.size() != suite.pairs.size()) {
    throw Error(ErrorKind::InvalidArgument, "have " + std::to_string(trained.models.size()) + " model(s) for " +
                                                std::to_string(suite.pairs.size()) + " split pair(s)");
  }

  ResultRecord record;
  record.experiment = std::move(experiment);
  record.variant = variant.empty() ? composition_label(plan.streams) : std::move(variant);
  record.plan_echo = plan.echo();
  record.plan_hash = plan.hash();
  record.composition = plan.streams;
  record.layer = plan.layer;
  record.aggregation = plan.aggregation;
  record.dim = fused.dim;
  record.seed = plan.training.seed;
  record.timing.extraction_seconds = fused.extraction_seconds;
  record.timing.per_image_extraction = fused.images ? fused.extraction_seconds / static_cast<double>(fused.images) : 0.0;
  record.timing.training_seconds = trained.training_seconds;

  double total = 0.0;
  double testing = 0.0;
  std::size_t tested = 0;
  for (std::size_t p = 0; p < suite.pairs.size(); ++p) {
    const auto& pair = suite.pairs[p];
    if (trained.pair_names[p] != pair.name) {
      throw Error(ErrorKind::InvalidArgument, "model for pair '" + trained.pair_names[p] + "' given for pair '" + pair.name + "'");
    }
    const auto& model = trained.models[p];
    auto test = gather(manifest, fused, pair.test, pair.name + "/test");
    if (model.dim != test.dim()) {
      throw Error(ErrorKind::DimensionMismatch, "model for pair '" + pair.name + "' expects dim " + std::to_string(model.dim) +
                                                    ", features have dim " + std::to_string(test.dim()));
    }
    const auto t0 = Clock::now();
    const double acc = score(model, test);
    testing += seconds_since(t0);
    tested += test.size();
    total += acc;
    record.splits.push_back(SplitResult{pair.name, acc, model.chosen_c, trained.train_counts[p], test.size()});
  }
  record.accuracy = total / static_cast<double>(suite.pairs.size());
  record.timing.testing_seconds = testing / static_cast<double>(suite.pairs.size());
  record.timing.per_test_sample = tested ? testing / static_cast<double>(tested) : 0.0;
  return record;
}

ResultRecord run_train_eval(const ExperimentPlan& plan, std::string experiment, std::string variant) {
  return evaluate_models(plan, train_models(plan), std::move(experiment), std::move(variant));
}

void save_trained(const ExperimentPlan& plan, const TrainedSplits& trained) {
  const auto dir = plan.model_dir();
  std::filesystem::create_directories(dir);
  json index;
  index["plan"] = json::parse(plan.echo());
  index["training_seconds"] = trained.training_seconds;
  index["pairs"] = json::array();
  for (std::size_t p = 0; p < trained.models.size(); ++p) {
    const std::string file = safe_name(trained.pair_names[p]) + ".sflr";
    save_model(trained.models[p], dir / file);
    index["pairs"].push_back(json{{"name", trained.pair_names[p]},
                                  {"file", file},
                                  {"train_count", trained.train_counts[p]},
                                  {"chosen_c", trained.models[p].chosen_c}});
  }
  std::ofstream out(dir / "train.json", std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / "train.json").string());
  out << index.dump(1) << "\n";
}

TrainedSplits load_trained(const ExperimentPlan& plan) {
  const auto dir = plan.model_dir();
  std::ifstream in(dir / "train.json");
  if (!in) throw Error(ErrorKind::Io, "no trained models for this plan under " + dir.string() + "; run train first");
  TrainedSplits out;
  try {
    const auto index = json::parse(in);
    out.training_seconds = index.at("training_seconds").get<double>();
    for (const auto& entry : index.at("pairs")) {
      out.pair_names.push_back(entry.at("name").get<std::string>());
      out.train_counts.push_back(entry.at("train_count").get<std::size_t>());
      out.models.push_back(load_model(dir / entry.at("file").get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, (dir / "train.json").string() + ": " + e.what());
  }
  return out;
}

ResultRecord train_eval_stores(const std::filesystem::path& train_store, const std::filesystem::path& test_store,
                               const TrainingConfig& config) {
  const auto train_header = read_store_header(train_store);
  const auto test_header = read_store_header(test_store);
  if (train_header.dim != test_header.dim) {
    throw Error(ErrorKind::DimensionMismatch, "train store has dim " + std::to_string(train_header.dim) +
                                                  ", test store has dim " + std::to_string(test_header.dim));
  }
  auto train = store_read(train_store);
  auto test = store_read(test_store);
  train.class_count = test.class_count = std::max(train.class_count, test.class_count);

  ResultRecord record;
  record.experiment = "stores";
  record.variant = train_store.filename().string();
  record.dim = train_header.dim;
  record.seed = config.seed;
  const auto t0 = Clock::now();
  const auto model = grid_search(train, config);
  record.timing.training_seconds = seconds_since(t0);
  const auto t1 = Clock::now();
  record.accuracy = score(model, test);
  record.timing.testing_seconds = seconds_since(t1);
  record.timing.per_test_sample = record.timing.testing_seconds / static_cast<double>(test.size());
  record.splits.push_back(SplitResult{"default", record.accuracy, model.chosen_c, train.size(), test.size()});
  return record;
}

std::vector<ResultRecord> ablate_layers(const ExperimentPlan& base) {
  run_extract(base, std::vector<LayerId>(std::begin(kAllLayers), std::end(kAllLayers)));
  std::vector<Variant> variants;
  for (LayerId layer : kAllLayers) {
    ExperimentPlan plan = base;
    plan.layer = layer;
    variants.push_back(Variant{plan, std::string(short_name(layer))});
  }
  return run_variants(variants, "layers", base.parallel_variants);
}

std::vector<ResultRecord> ablate_individual(const ExperimentPlan& base) {
  ExperimentPlan all = base;
  all.streams.assign(std::begin(kCanonicalStreams), std::end(kCanonicalStreams));
  run_extract(all);
  std::vector<Variant> variants;
  for (Stream stream : kCanonicalStreams) {
    ExperimentPlan plan = all;
    plan.streams = {stream};
    plan.aggregation = Aggregation::Concat;
    variants.push_back(Variant{plan, std::string(to_string(stream))});
  }
  return run_variants(variants, "streams", base.parallel_variants);
}

std::vector<ResultRecord> ablate_aggregation(const ExperimentPlan& base) {
  ExperimentPlan all = base;
  all.streams.assign(std::begin(kCanonicalStreams), std::end(kCanonicalStreams));
  run_extract(all);
  std::vector<Variant> variants;
  for (Aggregation method : {Aggregation::Min, Aggregation::Max, Aggregation::Mean, Aggregation::Concat}) {
    ExperimentPlan plan = all;
    plan.aggregation = method;
    variants.push_back(Variant{plan, std::string(to_string(method))});
  }
  return run_variants(variants, "aggregation", base.parallel_variants);
}

std::vector<ResultRecord> ablate_combinations(const ExperimentPlan& base) {
  ExperimentPlan all = base;
  all.streams.assign(std::begin(kCanonicalStreams), std::end(kCanonicalStreams));
  run_extract(all);
  const std::vector<std::vector<Stream>> combos = {
      {Stream::Foreground, Stream::Background},
      {Stream::Foreground, Stream::Hybrid},
      {Stream::Background, Stream::Hybrid},
      {Stream::Foreground, Stream::Background, Stream::Hybrid},
  };
  std::vector<Variant> variants;
  for (const auto& combo : combos) {
    ExperimentPlan plan = all;
    plan.streams = combo;
    plan.aggregation = Aggregation::Concat;
    variants.push_back(Variant{plan, composition_label(combo)});
  }
  return run_variants(variants, "combinations", base.parallel_variants);
}

}  // namespace scenefuse
