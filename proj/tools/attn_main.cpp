#include <filesystem>
#include <iostream>

#include "common.hpp"
#include "json.hpp"
#include "wafer/attention.hpp"
#include "wafer/image.hpp"
#include "wafer/pipeline.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Visual attention model: templates and street search"};
  app.require_subcommand(1);
  tools::ConfigOptions config;

  std::string sketch_dir;
  auto* sketches = app.add_subcommand("make-sketches", "write the 12 street sketches");
  sketches->add_option("--out", sketch_dir, "output directory")->required();

  std::string learn_dir;
  std::string bank_out = "templates.wbank";
  auto* learn = app.add_subcommand("learn-templates", "one-shot learn the template bank");
  learn->add_option("--sketches", learn_dir, "sketch directory (default: built-in sketches)");
  learn->add_option("--out", bank_out, "template bank file");
  config.attach(learn);

  std::string chip_path;
  std::string bank_path;
  std::string suppress;
  std::string dump_dir;
  double chip_px = 0.0;
  bool no_suppress = false;
  auto* find = app.add_subcommand("find-streets", "locate the four streets of one chip image");
  find->add_option("--chip", chip_path, "chip image")->required();
  find->add_option("--templates", bank_path, "template bank file")->required();
  find->add_option("--suppress", suppress, "external attention map image");
  find->add_flag("--no-suppress", no_suppress, "disable the default central suppression");
  find->add_option("--chip-px", chip_px, "chip side in pixels (default: estimated)");
  find->add_option("--dump-activities", dump_dir, "write per-saccade activity tensors here");
  config.attach(find);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return tools::parse_failure(app, e);
  }

  return tools::guarded("attn", [&] {
    if (*sketches) {
      wafer::write_sketches(sketch_dir);
      std::cout << "wrote " << wafer::bank_layout().size() << " sketches to " << sketch_dir << '\n';
      return;
    }
    if (*learn) {
      const auto cfg = config.load();
      const auto bank = learn_dir.empty() ? wafer::learn_default_bank(cfg.v1) : wafer::learn_bank(learn_dir, cfg.v1);
      wafer::save_bank(bank_out, bank);
      std::cout << "learned " << bank.templates.size() << " templates -> " << bank_out << '\n';
      return;
    }
    auto cfg = config.load();
    if (!suppress.empty()) cfg.external_map = suppress;
    if (no_suppress) cfg.central_suppression = false;
    const auto bank = wafer::load_bank(bank_path);
    const cv::Mat img = wafer::read_gray(chip_path);
    const double px = chip_px > 0.0 ? chip_px : wafer::estimate_chip_px(img);
    const auto external = wafer::external_map_for(cfg);
    const fs::path dump(dump_dir);
    const auto plan = wafer::find_streets(img, bank, px, cfg.attention, external ? &*external : nullptr,
                                          dump_dir.empty() ? nullptr : &dump);
    nlohmann::ordered_json out;
    out["chip"] = chip_path;
    out["chip_px"] = px;
    out["valid"] = plan.valid_count();
    if (!plan.diagnostic.empty()) out["diagnostic"] = plan.diagnostic;
    out["fixations"] = nlohmann::ordered_json::array();
    for (const auto& f : plan.fixations) {
      nlohmann::ordered_json j;
      j["x"] = f.normalized.x;
      j["y"] = f.normalized.y;
      j["pixel_x"] = f.pixel.x;
      j["pixel_y"] = f.pixel.y;
      j["side"] = std::string(wafer::side_name(f.side));
      j["peak"] = f.peak;
      j["template"] = f.template_index;
      j["street_width_px"] = f.street_width_px;
      j["steps"] = f.steps;
      j["valid"] = f.valid;
      if (!f.reason.empty()) j["reason"] = f.reason;
      out["fixations"].push_back(j);
    }
    std::cout << out.dump(2) << '\n';
  });
}
