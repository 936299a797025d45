// scenefuse: extraction, training, evaluation, ablations and reports.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scenefuse/error.hpp"
#include "scenefuse/experiment.hpp"

namespace {

using namespace scenefuse;

struct PlanArgs {
  std::string manifest;
  std::string registry;
  std::string layer = "p5";
  std::string streams = "f,b,h";
  std::string aggregation = "concat";
  std::string c_grid = "1..50";
  int folds = 5;
  std::uint64_t seed = 42;
  std::string out = "scenefuse-out";
  bool force = false;
  int jobs = 1;
  bool parallel = false;

  ExperimentPlan plan() const {
    ExperimentPlan p;
    p.manifest = manifest;
    p.registry = registry;
    p.layer = parse_layer(layer);
    p.streams = parse_stream_list(streams);
    p.aggregation = parse_aggregation(aggregation);
    p.training.c_grid = parse_c_grid(c_grid);
    p.training.cv_folds = folds;
    p.training.seed = seed;
    p.out_dir = out;
    p.force = force;
    p.jobs = jobs;
    p.parallel_variants = parallel;
    p.validate();
    return p;
  }
};

void add_plan_options(CLI::App* cmd, PlanArgs& args) {
  auto* manifest = cmd->add_option("--manifest", args.manifest, "Sample manifest (path<TAB>category<TAB>split)");
  auto* suite = cmd->add_option("--suite", args.manifest, "Split suite manifest (pair/train, pair/test tags)");
  manifest->excludes(suite);
  cmd->add_option("--registry", args.registry, "Backbone registry config")->required();
  cmd->add_option("--layer", args.layer, "Pooling layer p1..p5")->capture_default_str();
  cmd->add_option("--streams", args.streams, "Streams, e.g. f,b,h")->capture_default_str();
  cmd->add_option("--agg", args.aggregation, "min|max|mean|concat")->capture_default_str();
  cmd->add_option("--c-grid", args.c_grid, "C values, e.g. 1..50 or 1,5,10")->capture_default_str();
  cmd->add_option("--folds", args.folds, "Cross-validation folds")->capture_default_str();
  cmd->add_option("--seed", args.seed, "Fold shuffle seed")->capture_default_str();
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_flag("--force", args.force, "Re-extract even when stores are current");
  cmd->add_option("--jobs", args.jobs, "Extraction worker threads")->capture_default_str();
}

void require_manifest(const PlanArgs& args) {
  if (args.manifest.empty()) throw Error(ErrorKind::InvalidArgument, "--manifest or --suite is required");
}

void print_records(const std::vector<ResultRecord>& records) { report(records, ReportFormat::Csv, std::cout); }

std::vector<LayerId> parse_layer_list(const std::string& text) {
  if (text == "all") return {std::begin(kAllLayers), std::end(kAllLayers)};
  std::vector<LayerId> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_layer(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Scene descriptors from fused foreground, background and hybrid CNN features"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  PlanArgs args;

  auto* extract = app.add_subcommand("extract", "Extract per-stream feature stores");
  add_plan_options(extract, args);
  std::string layers;
  extract->add_option("--layers", layers, "Extract several layers at once: p1,p3 or all");

  auto* train = app.add_subcommand("train", "Grid-search C and save one model per split pair");
  add_plan_options(train, args);

  auto* eval = app.add_subcommand("eval", "Evaluate saved models and append the result record");
  add_plan_options(eval, args);

  auto* ablate = app.add_subcommand("ablate", "Run an ablation family");
  std::string family;
  ablate->add_option("family", family, "layers|streams|aggregation|combinations")
      ->required()
      ->check(CLI::IsMember({"layers", "streams", "aggregation", "combinations"}));
  add_plan_options(ablate, args);
  ablate->add_flag("--parallel", args.parallel, "Train variants concurrently");

  auto* report_cmd = app.add_subcommand("report", "Render result records as a table");
  std::string results = "scenefuse-out/results.jsonl";
  std::string format = "csv";
  std::string output;
  bool timing = false;
  report_cmd->add_option("--results", results, "Result records (JSON lines)")->capture_default_str();
  report_cmd->add_option("--format", format, "csv|jsonl")->capture_default_str();
  report_cmd->add_option("--output,-o", output, "Write to a file instead of stdout");
  report_cmd->add_flag("--timing", timing, "Include wall-clock columns");

  auto* validate = app.add_subcommand("validate", "Check a manifest against an evaluation protocol");
  std::string protocol = "free";
  validate->add_option("--manifest,--suite", args.manifest, "Manifest or split suite")->required();
  validate->add_option("--protocol", protocol, "mit67|sun397|free")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto logger = spdlog::stderr_color_mt("scenefuse");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (*extract) {
    require_manifest(args);
    const auto plan = args.plan();
    const auto summary = run_extract(plan, layers.empty() ? std::vector<LayerId>{} : parse_layer_list(layers));
    for (const auto& s : summary.stores) {
      std::cout << s.path.string() << "\t" << (s.cached ? "cached" : "extracted") << "\tdim=" << s.dim
                << "\tcount=" << s.count << "\n";
    }
    std::cout << "images=" << summary.images << " failures=" << summary.failures
              << " inference_calls=" << summary.inference_calls << "\n";
  } else if (*train) {
    require_manifest(args);
    const auto plan = args.plan();
    const auto trained = train_models(plan);
    save_trained(plan, trained);
    for (std::size_t p = 0; p < trained.models.size(); ++p) {
      std::cout << trained.pair_names[p] << "\tC=" << trained.models[p].chosen_c << "\ttrain=" << trained.train_counts[p]
                << "\n";
    }
    std::cout << "models: " << plan.model_dir().string() << "\n";
  } else if (*eval) {
    require_manifest(args);
    const auto plan = args.plan();
    const auto record = evaluate_models(plan, load_trained(plan));
    append_records(plan.results_path(), {record});
    print_records({record});
  } else if (*ablate) {
    require_manifest(args);
    const auto plan = args.plan();
    std::vector<ResultRecord> records;
    if (family == "layers") records = ablate_layers(plan);
    else if (family == "streams") records = ablate_individual(plan);
    else if (family == "aggregation") records = ablate_aggregation(plan);
    else records = ablate_combinations(plan);
    append_records(plan.results_path(), records);
    print_records(records);
  } else if (*report_cmd) {
    const auto records = read_records(results);
    const auto fmt = parse_report_format(format);
    if (output.empty()) {
      report(records, fmt, std::cout, timing);
    } else {
      std::ofstream out(output, std::ios::trunc);
      if (!out) throw Error(ErrorKind::Io, "cannot write " + output);
      report(records, fmt, out, timing);
    }
  } else if (*validate) {
    const auto manifest = SampleManifest::parse(args.manifest);
    const auto result = validate_protocol(manifest, parse_protocol(protocol));
    std::cout << "protocol=" << to_string(result.protocol) << " categories=" << result.category_count
              << " pairs=" << result.pair_count << " total_slots=" << result.total_slots
              << " violations=" << result.violations.size() << "\n";
    for (const auto& v : result.violations) std::cout << "  " << v << "\n";
    if (!result.ok()) {
      std::cerr << "scenefuse: error[protocol]: " << result.violations.size() << " protocol violation(s)\n";
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const scenefuse::Error& e) {
    std::string message = e.what();
    for (char& c : message) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "scenefuse: error[" << scenefuse::to_string(e.kind()) << "]: " << message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "scenefuse: error[internal]: " << e.what() << "\n";
    return 1;
  }
}
