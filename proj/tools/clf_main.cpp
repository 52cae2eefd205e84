#include <filesystem>
#include <iostream>

#include "common.hpp"
#include "wafer/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<wafer::nn::Sample> samples_for(const std::string& arch, const wafer::DatasetManifest& m,
                                           const fs::path& dir, wafer::Split split, bool balance, int classes) {
  if (arch == "street") return wafer::street_samples(m, dir, split, classes, balance);
  if (arch == "chip") return wafer::chip_samples(m, dir, split, balance);
  if (arch == "border") return wafer::border_samples(m, dir, split, balance);
  throw wafer::ConfigError("unknown architecture '" + arch + "'");
}

void print_confusion(const wafer::Confusion& c) {
  std::cout << "accuracy " << c.accuracy() << ", macro accuracy " << c.macro_accuracy();
  if (c.classes() == 2) std::cout << ", recall(1) " << c.recall(1);
  std::cout << "\ncounts (rows truth, columns prediction):\n";
  for (int t = 0; t < c.classes(); ++t) {
    for (int p = 0; p < c.classes(); ++p) std::cout << (p ? " " : "  ") << c.count(t, p);
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional classifiers: street, chip and border networks"};
  app.require_subcommand(1);
  tools::ConfigOptions config;
  std::string manifest_path;
  std::string arch = "street";
  std::string model_path;
  std::string log_path;
  std::string split = "test";

  auto* train = app.add_subcommand("train", "train a classifier on a manifest");
  train->add_option("--manifest", manifest_path, "chip or ROI manifest")->required();
  train->add_option("--arch", arch, "street | chip | border")->check(CLI::IsMember({"street", "chip", "border"}));
  train->add_option("--out", model_path, "model file")->required();
  train->add_option("--log", log_path, "training log (JSON lines)");
  config.attach(train);

  auto* eval = app.add_subcommand("eval", "evaluate a trained classifier");
  eval->add_option("--manifest", manifest_path, "chip or ROI manifest")->required();
  eval->add_option("--arch", arch, "street | chip | border")->check(CLI::IsMember({"street", "chip", "border"}));
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--split", split, "train | val | test");
  config.attach(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return tools::parse_failure(app, e);
  }

  return tools::guarded("clf", [&] {
    const auto cfg = config.load();
    const fs::path mpath(manifest_path);
    const auto manifest = wafer::read_manifest(mpath);
    const fs::path dir = mpath.parent_path();
    if (*train) {
      wafer::nn::TrainReport report;
      std::optional<wafer::nn::Model> model;
      if (arch == "street") model.emplace(wafer::train_street_model(manifest, dir, cfg, &report, log_path));
      if (arch == "chip") model.emplace(wafer::train_chip_model(manifest, dir, cfg, &report, log_path));
      if (arch == "border") model.emplace(wafer::train_border_model(manifest, dir, cfg, &report, log_path));
      wafer::nn::save_model(model_path, *model);
      std::cout << "best epoch " << report.best_epoch << ", validation macro accuracy " << report.best_val_macro
                << " -> " << model_path << '\n';
      return;
    }
    auto model = wafer::nn::load_model(model_path);
    if (!model.kind.empty() && model.kind != arch) {
      throw wafer::ConfigError("model is a " + model.kind + " network, not " + arch);
    }
    const auto samples = samples_for(arch, manifest, dir, wafer::parse_split(split), false,
                                     model.network.classes());
    if (samples.empty()) throw wafer::DataError("no samples in split " + split);
    const auto confusion = wafer::nn::evaluate(model.network, samples);
    std::cout << samples.size() << " samples (" << split << ")\n";
    print_confusion(confusion);
  });
}
