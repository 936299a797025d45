// Writes mock backbones, a registry config and a synthetic scene set so the
// scenefuse CLI can be tried without real weights or datasets.

#include <iostream>

#include <CLI11.hpp>

#include "scenefuse/error.hpp"
#include "scenefuse/mock_assets.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate mock backbones and a synthetic scene set"};
  std::string dir = "mock-assets";
  std::uint64_t model_seed = 1;
  scenefuse::mock::SceneSetOptions scenes;
  app.add_option("--dir", dir, "Output directory")->capture_default_str();
  app.add_option("--model-seed", model_seed, "Seed of the first mock backbone")->capture_default_str();
  app.add_option("--classes", scenes.classes, "Scene categories")->capture_default_str();
  app.add_option("--train", scenes.train_per_class, "Training images per category")->capture_default_str();
  app.add_option("--test", scenes.test_per_class, "Test images per category")->capture_default_str();
  app.add_option("--pairs", scenes.split_pairs, "Split pairs (0 for a plain manifest)")->capture_default_str();
  app.add_option("--image-seed", scenes.seed, "Seed of the image generator")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto registry = scenefuse::mock::write_registry(dir, model_seed);
    const auto manifest = scenefuse::mock::write_scene_set(dir, scenes);
    std::cout << "registry: " << registry.string() << "\n";
    std::cout << (scenes.split_pairs > 0 ? "suite: " : "manifest: ") << manifest.string() << "\n";
  } catch (const scenefuse::Error& e) {
    std::cerr << "make_mock_assets: error[" << scenefuse::to_string(e.kind()) << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
