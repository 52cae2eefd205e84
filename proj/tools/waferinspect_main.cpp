#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "wafer/corpus.hpp"
#include "wafer/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void print_report(const wafer::WaferReport& r) {
  std::cout << "street found rate " << r.street_found_rate() << " (" << r.streets_found << '/' << r.streets_total
            << ")\n"
            << "street accuracy " << r.street.accuracy() << ", fault detection " << r.fault_detection() << '\n'
            << "chip accuracy " << r.chip.accuracy() << ", macro " << r.chip.macro_accuracy()
            << ", fault detection " << r.chip_fault_detection() << '\n'
            << "border accuracy " << r.border.accuracy() << '\n'
            << "anomalies " << r.anomalies << " (" << r.anomalies_flagged << " flagged faulty)\n";
}

wafer::TemplateBank bank_for(const fs::path& models_dir, const wafer::PipelineConfig& cfg) {
  const auto path = models_dir / "templates.wbank";
  if (!models_dir.empty() && fs::exists(path)) return wafer::load_bank(path);
  return wafer::learn_default_bank(cfg.v1);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      seeds.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw wafer::ConfigError("bad seed '" + item + "'");
    }
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wafer street inspection: attention model plus street classifier"};
  app.require_subcommand(1);
  tools::ConfigOptions config;
  std::string spec_path;
  std::string dataset;
  std::string models = "models";
  std::string out;
  std::string sketches;
  std::string rois;
  std::string split;
  std::string what = "border,street";
  std::string seeds = "1,2,3";

  auto* gen = app.add_subcommand("generate", "render a synthetic corpus");
  gen->add_option("--spec", spec_path, "corpus spec (TOML)")->required();
  gen->add_option("--out", out, "output directory")->required();
  config.attach(gen);

  auto* learn = app.add_subcommand("learn-templates", "one-shot learn the street templates");
  learn->add_option("--models", models, "model directory");
  learn->add_option("--sketches", sketches, "sketch directory (default: built-in sketches)");
  config.attach(learn);

  auto* extract = app.add_subcommand("extract", "find streets and cut canonical ROIs");
  extract->add_option("--dataset", dataset, "corpus directory")->required();
  extract->add_option("--models", models, "model directory (templates.wbank)");
  extract->add_option("--out", out, "output directory")->required();
  extract->add_option("--split", split, "train | val | test | all");
  config.attach(extract);

  auto* train = app.add_subcommand("train", "train classifiers");
  train->add_option("--dataset", dataset, "corpus directory")->required();
  train->add_option("--models", models, "model directory");
  train->add_option("--rois", rois, "ROI directory from extract (default: extract into <models>/rois)");
  train->add_option("--what", what, "comma list of border, street, chip");
  config.attach(train);

  auto* run = app.add_subcommand("run", "inspect a corpus end to end");
  run->add_option("--dataset", dataset, "corpus directory")->required();
  run->add_option("--models", models, "model directory");
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--split", split, "train | val | test | all");
  config.attach(run);

  auto* ablate = app.add_subcommand("ablate", "attention vs whole-chip comparison");
  ablate->add_option("--dataset", dataset, "corpus directory")->required();
  ablate->add_option("--models", models, "model directory (templates.wbank)");
  ablate->add_option("--out", out, "output directory")->required();
  ablate->add_option("--seeds", seeds, "comma separated training seeds");
  config.attach(ablate);

  auto* report = app.add_subcommand("report", "recompute metrics and maps from verdicts.jsonl");
  report->add_option("--run", out, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return tools::parse_failure(app, e);
  }

  return tools::guarded("waferinspect", [&] {
    if (*report) {
      const auto manifest = wafer::read_manifest(fs::path(out) / "verdicts.jsonl");
      const auto verdicts = wafer::verdicts_from_manifest(manifest);
      const auto rep = wafer::compute_metrics(verdicts);
      wafer::write_run_outputs(out, verdicts, rep, manifest.generator);
      print_report(rep);
      return;
    }
    auto cfg = config.load();
    if (!split.empty()) cfg.split = split;
    const fs::path models_dir(models);

    if (*gen) {
      auto spec = wafer::synth::load_corpus_spec(spec_path);
      if (cfg.workers) spec.workers = cfg.workers;
      const auto m = wafer::synth::generate_corpus(spec, out);
      std::cout << m.records.size() << " manifest rows -> " << (fs::path(out) / "manifest.jsonl").string() << '\n';
      return;
    }
    if (*learn) {
      fs::create_directories(models_dir);
      const auto bank = sketches.empty() ? wafer::learn_default_bank(cfg.v1) : wafer::learn_bank(sketches, cfg.v1);
      wafer::save_bank(models_dir / "templates.wbank", bank);
      std::cout << "learned " << bank.templates.size() << " templates\n";
      return;
    }

    const fs::path data_dir(dataset);
    const auto chips = wafer::read_manifest(data_dir / "manifest.jsonl");

    if (*extract) {
      const auto bank = bank_for(models_dir, cfg);
      const auto res = wafer::extract_rois(chips, data_dir, bank, cfg, out, split.empty() ? "all" : split);
      wafer::write_manifest(fs::path(out) / "rois.jsonl", res.rois);
      wafer::write_precision_report(fs::path(out) / "precision.json", fs::path(out) / "precision_hist.csv",
                                    res.precision);
      long found = 0;
      for (const auto& r : res.rois.records) found += r.found.value_or(false) ? 1 : 0;
      std::cout << "found " << found << '/' << res.rois.records.size() << " streets; deviation x "
                << res.precision.x.mean << " +- " << res.precision.x.stddev << ", y " << res.precision.y.mean
                << " +- " << res.precision.y.stddev << " px\n";
      return;
    }
    if (*train) {
      fs::create_directories(models_dir);
      const bool want_border = what.find("border") != std::string::npos;
      const bool want_street = what.find("street") != std::string::npos;
      const bool want_chip = what.find("chip") != std::string::npos;
      if (!want_border && !want_street && !want_chip) throw wafer::ConfigError("nothing to train: " + what);
      if (want_border) {
        wafer::nn::TrainReport rep;
        const auto m = wafer::train_border_model(chips, data_dir, cfg, &rep, models_dir / "border_log.jsonl");
        wafer::nn::save_model(models_dir / "border.wmdl", m);
        std::cout << "border: validation macro accuracy " << rep.best_val_macro << '\n';
      }
      if (want_street) {
        fs::path roi_dir = rois;
        if (roi_dir.empty()) {
          roi_dir = models_dir / "rois";
          const auto res = wafer::extract_rois(chips, data_dir, bank_for(models_dir, cfg), cfg, roi_dir, "all");
          wafer::write_manifest(roi_dir / "rois.jsonl", res.rois);
        }
        const auto roi_manifest = wafer::read_manifest(roi_dir / "rois.jsonl");
        wafer::nn::TrainReport rep;
        const auto m = wafer::train_street_model(roi_manifest, roi_dir, cfg, &rep, models_dir / "street_log.jsonl");
        wafer::nn::save_model(models_dir / "street.wmdl", m);
        std::cout << "street: validation macro accuracy " << rep.best_val_macro << '\n';
      }
      if (want_chip) {
        wafer::nn::TrainReport rep;
        const auto m = wafer::train_chip_model(chips, data_dir, cfg, &rep, models_dir / "chip_log.jsonl");
        wafer::nn::save_model(models_dir / "chip.wmdl", m);
        std::cout << "chip: validation macro accuracy " << rep.best_val_macro << '\n';
      }
      return;
    }
    if (*run) {
      auto m = wafer::load_models(models_dir);
      const auto res = wafer::run_pipeline(chips, data_dir, m, cfg, out);
      print_report(res.report);
      return;
    }
    if (*ablate) {
      const auto rep = wafer::ablate_attention(chips, data_dir, bank_for(models_dir, cfg), cfg, parse_seeds(seeds), out);
      for (const auto& r : rep.runs) {
        std::cout << "seed " << r.seed << ": with attention macro " << r.attention.macro << " fault "
                  << r.attention.fault_detection << " | without macro " << r.whole_chip.macro << " fault "
                  << r.whole_chip.fault_detection << '\n';
      }
      std::cout << "mean improvement: macro " << rep.mean_macro_delta() << ", fault detection "
                << rep.mean_fault_delta() << '\n';
    }
  });
}
