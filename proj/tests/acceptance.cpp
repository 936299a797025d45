// Acceptance suite: one PASS/FAIL line per criterion with its tolerance,
// measured runtime and budget. Exits nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "scenefuse/classifier.hpp"
#include "scenefuse/error.hpp"
#include "scenefuse/experiment.hpp"
#include "scenefuse/feature_pipeline.hpp"
#include "scenefuse/manifest.hpp"
#include "scenefuse/mock_assets.hpp"
#include "test_util.hpp"

#include <spdlog/spdlog.h>

using namespace scenefuse;

namespace {

struct Outcome {
  enum class Status { Pass, Fail, Skip } status = Status::Pass;
  std::string detail;
};

Outcome pass(std::string detail) { return {Outcome::Status::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Status::Fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::Status::Skip, std::move(detail)}; }

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

int failures = 0;

void criterion(const std::string& name, const std::string& tolerance, double budget_seconds,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome = fail(std::string("exception: ") + e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (outcome.status == Outcome::Status::Pass && seconds > budget_seconds) {
    outcome = fail(outcome.detail + "; over time budget");
  }
  const char* status = outcome.status == Outcome::Status::Pass ? "PASS" : outcome.status == Outcome::Status::Fail ? "FAIL" : "SKIP";
  if (outcome.status == Outcome::Status::Fail) ++failures;
  std::printf("%s  %-22s tol=%-16s time=%.3fs budget=%.0fs  %s\n", status, name.c_str(), tolerance.c_str(), seconds,
              budget_seconds, outcome.detail.c_str());
  std::fflush(stdout);
}

Outcome encoding_suite() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dims(1, 1024);
  std::uniform_real_distribution<double> value(0.0, 50.0);
  double worst_scale = 0.0;
  std::size_t range_errors = 0, support_errors = 0;
  for (int n = 0; n < 1000; ++n) {
    FeatureVector v;
    v.values.resize(static_cast<std::size_t>(dims(rng)));
    for (auto& x : v.values) x = value(rng);
    const auto e = encode(v);
    double mean = 0.0;
    for (double x : v.values) mean += x;
    mean /= static_cast<double>(v.values.size());
    for (std::size_t j = 0; j < v.values.size(); ++j) {
      if (e.values[j] < 0.0 || e.values[j] > 1.0) ++range_errors;
      if ((e.values[j] == 0.0) != (v.values[j] < mean || v.values[j] == 0.0)) ++support_errors;
    }
    for (double s : {0.5, 3.0, 100.0}) {
      FeatureVector scaled = v;
      for (auto& x : scaled.values) x *= s;
      worst_scale = std::max(worst_scale, oracle::max_abs_diff(encode(scaled).values, e.values));
    }
  }
  const std::string detail = "range_errors=" + std::to_string(range_errors) + " support_errors=" +
                             std::to_string(support_errors) + fmt(" max_scale_diff=%.3g", worst_scale);
  return range_errors == 0 && support_errors == 0 && worst_scale <= 1e-12 ? pass(detail) : fail(detail);
}

Outcome pipeline_oracle() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const auto raw = oracle::random_tensor(rng, 7, 7, 512);
    const auto got = describe_stream(oracle::to_feature_tensor(raw));
    worst = std::max(worst, oracle::max_abs_diff(got.values, oracle::describe(raw)));
  }
  const std::string detail = fmt("max_abs_diff=%.3g over 100 tensors 7x7x512", worst);
  return worst <= 1e-12 ? pass(detail) : fail(detail);
}

Outcome aggregation_suite() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  std::vector<StreamFeature> streams;
  for (Stream s : kCanonicalStreams) {
    StreamFeature f{s, {Stage::Normalized, std::vector<double>(512)}};
    for (auto& x : f.vector.values) x = value(rng);
    streams.push_back(std::move(f));
  }
  std::ostringstream detail;
  bool ok = true;
  const auto concat = aggregate(streams, Aggregation::Concat);
  detail << "concat=" << concat.dim();
  ok &= concat.dim() == 1536;
  for (auto m : {Aggregation::Min, Aggregation::Max, Aggregation::Mean}) {
    const auto a = aggregate(streams, m);
    detail << " " << to_string(m) << "=" << a.dim();
    ok &= a.dim() == 512;
  }
  const auto parts = split(concat);
  bool exact = parts.size() == 3;
  for (std::size_t k = 0; exact && k < 3; ++k) {
    exact = parts[k].stream == streams[k].stream && parts[k].vector.values == streams[k].vector.values;
  }
  detail << " split_exact=" << exact;
  ok &= exact;
  const std::vector<StreamFeature> same = {streams[0], {Stream::Background, streams[0].vector},
                                           {Stream::Hybrid, streams[0].vector}};
  const bool idempotent = aggregate(same, Aggregation::Min).values == streams[0].vector.values &&
                          aggregate(same, Aggregation::Max).values == streams[0].vector.values;
  detail << " idempotent=" << idempotent;
  ok &= idempotent;
  return ok ? pass(detail.str()) : fail(detail.str());
}

Outcome solver_correctness() {
  std::mt19937_64 rng(1004);
  std::normal_distribution<double> normal;
  auto random_binary = [&](int n, int d, Eigen::MatrixXd& x, std::vector<int>& y) {
    x.resize(n, d);
    y.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1 : -1;
      for (int j = 0; j < d; ++j) x(i, j) = normal(rng) + 0.7 * y[static_cast<std::size_t>(i)] * (j == 0);
    }
  };
  TrainingConfig no_bias;
  no_bias.fit_bias = false;

  double worst_gradient = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd x;
    std::vector<int> y;
    random_binary(8, 4, x, y);
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size())).cast<double>();
    const LogisticObjective f(x, s, 0.5 + trial % 7);
    Eigen::VectorXd w(4);
    for (int j = 0; j < 4; ++j) w[j] = normal(rng);
    const Eigen::VectorXd g = f.gradient(w);
    Eigen::VectorXd fd(4);
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd plus = w, minus = w;
      plus[j] += 1e-6;
      minus[j] -= 1e-6;
      fd[j] = (f.value(plus) - f.value(minus)) / 2e-6;
    }
    worst_gradient = std::max(worst_gradient, (g - fd).norm() / std::max(1.0, g.norm()));
  }

  Eigen::MatrixXd two(2, 1);
  two << 1.0, -1.0;
  const std::vector<int> two_y = {1, -1};
  const double root_error = std::abs(train_binary(two, two_y, 1.0, no_bias).weights[0] - oracle::bisection_root());

  double worst_objective = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x;
    std::vector<int> y;
    random_binary(6 + trial, 1 + trial % 3, x, y);
    const double c = trial % 2 == 0 ? 1.0 : 5.0;
    const auto fit = train_binary(x, y, c, no_bias);
    const auto reference = oracle::gradient_descent(x, y, c);
    worst_objective = std::max(worst_objective, std::abs(oracle::logistic_objective(x, y, c, fit.weights) -
                                                         oracle::logistic_objective(x, y, c, reference)));
  }

  bool monotone = true;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd x;
    std::vector<int> y;
    random_binary(16, 3, x, y);
    double previous = 0.0;
    for (double c : {1.0, 5.0, 10.0, 25.0, 50.0}) {
      const double norm = train_binary(x, y, c, TrainingConfig{}).weights.norm();
      monotone &= norm + 1e-8 >= previous;
      previous = norm;
    }
  }

  const std::string detail = fmt("grad_rel_err=%.3g", worst_gradient) + fmt(" root_err=%.3g", root_error) +
                             fmt(" gd_objective_diff=%.3g", worst_objective) + " monotone=" + (monotone ? "1" : "0");
  const bool ok = worst_gradient < 1e-5 && root_error < 1e-4 && worst_objective < 1e-6 && monotone;
  return ok ? pass(detail) : fail(detail);
}

struct RunArtifacts {
  std::vector<std::string> stores;
  std::string report;
  double accuracy = 0.0;
};

RunArtifacts synthetic_run(const std::filesystem::path& manifest, const std::filesystem::path& registry,
                           const std::filesystem::path& out) {
  ExperimentPlan plan;
  plan.manifest = manifest;
  plan.registry = registry;
  plan.out_dir = out;
  const auto summary = run_extract(plan);
  const auto trained = train_models(plan);
  save_trained(plan, trained);
  const auto record = evaluate_models(plan, load_trained(plan));
  append_records(plan.results_path(), {record});

  RunArtifacts a;
  for (const auto& s : summary.stores) a.stores.push_back(testutil::read_file(s.path));
  std::ostringstream csv;
  report(read_records(plan.results_path()), ReportFormat::Csv, csv);
  a.report = csv.str();
  a.accuracy = record.accuracy;
  return a;
}

Outcome end_to_end_synthetic() {
  ::unsetenv(kCacheEnvVar);
  testutil::TempDir dir("acceptance");
  const auto registry = mock::write_registry(dir / "models", 1);
  const auto manifest = mock::write_scene_set(dir / "scenes", mock::SceneSetOptions{});
  const auto first = synthetic_run(manifest, registry, dir / "run1");
  const auto second = synthetic_run(manifest, registry, dir / "run2");
  const bool stores_equal = first.stores.size() == 3 && first.stores == second.stores;
  const bool reports_equal = first.report == second.report;
  const std::string detail = fmt("accuracy=%.1f%%", 100.0 * first.accuracy) + fmt("/%.1f%%", 100.0 * second.accuracy) +
                             " stores_identical=" + (stores_equal ? "1" : "0") + " reports_identical=" +
                             (reports_equal ? "1" : "0");
  const bool ok = first.accuracy == 1.0 && second.accuracy == 1.0 && stores_equal && reports_equal;
  return ok ? pass(detail) : fail(detail);
}

std::vector<SampleRecord> protocol_records(int categories, int train, int test, int pairs) {
  std::vector<SampleRecord> records;
  for (int c = 0; c < categories; ++c) {
    const std::string category = "c" + std::to_string(c);
    for (int p = 0; p < pairs; ++p) {
      const std::string prefix = pairs == 1 ? "" : "s" + std::to_string(p) + "/";
      for (int i = 0; i < train + test; ++i) {
        const bool is_train = i < train;
        records.push_back({category + "/" + std::to_string(p) + "_" + std::to_string(i), category,
                           prefix + (is_train ? "train" : "test"), 0});
      }
    }
  }
  return records;
}

Outcome protocol_validation() {
  const auto mit = validate_protocol(SampleManifest::from_records(protocol_records(67, 80, 20, 1)), Protocol::Mit67);
  const auto sun = validate_protocol(SampleManifest::from_records(protocol_records(397, 50, 50, 10)), Protocol::Sun397);
  const std::string detail = "mit67_violations=" + std::to_string(mit.violations.size()) +
                             " sun397_slots=" + std::to_string(sun.total_slots) +
                             " sun397_violations=" + std::to_string(sun.violations.size());
  return mit.ok() && sun.ok() && sun.total_slots == 397000 ? pass(detail) : fail(detail);
}

// Real weights and the standard MIT-67 split, supplied through the
// environment. See docs/benchmark.md.
Outcome external_benchmark() {
  const char* manifest = std::getenv("SCENEFUSE_MIT67_MANIFEST");
  const char* registry = std::getenv("SCENEFUSE_REGISTRY");
  if (!manifest || !registry || !*manifest || !*registry) {
    return skip("set SCENEFUSE_MIT67_MANIFEST and SCENEFUSE_REGISTRY to run");
  }
  ExperimentPlan plan;
  plan.manifest = manifest;
  plan.registry = registry;
  if (const char* out = std::getenv("SCENEFUSE_BENCH_OUT")) plan.out_dir = out;
  run_extract(plan);
  const auto records = ablate_combinations(plan);
  const double full = 100.0 * records[3].accuracy;
  const double fb = 100.0 * records[0].accuracy, fh = 100.0 * records[1].accuracy, bh = 100.0 * records[2].accuracy;
  const std::string detail = fmt("fbh=%.1f", full) + fmt(" fb=%.1f", fb) + fmt(" bh=%.1f", bh) + fmt(" fh=%.1f", fh) +
                             " target fbh=82.3+-0.5, fbh>fb>bh>fh";
  const bool ok = std::abs(full - 82.3) <= 0.5 && full > fb && fb > bh && bh > fh;
  return ok ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  criterion("encoding-suite", "1e-12", 1, encoding_suite);
  criterion("pipeline-oracle", "1e-12", 5, pipeline_oracle);
  criterion("aggregation-suite", "exact", 1, aggregation_suite);
  criterion("solver-correctness", "1e-5/1e-4/1e-6", 30, solver_correctness);
  criterion("end-to-end-synthetic", "exact", 60, end_to_end_synthetic);
  criterion("protocol-validation", "exact", 5, protocol_validation);
  criterion("external-benchmark", "0.5pp", 86400, external_benchmark);
  std::printf("%s: %d failing criteria\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
