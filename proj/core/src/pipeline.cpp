#include "wafer/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "wafer/errors.hpp"
#include "wafer/image.hpp"
#include "wafer/parallel.hpp"

namespace wafer {
namespace {

using Key = std::tuple<int, int, int, std::string>;
namespace fs = std::filesystem;

Key key_of(const ManifestRecord& r) { return {r.wafer_id, r.chip_col, r.chip_row, r.side}; }

bool split_matches(const ManifestRecord& r, const std::string& split) {
  return split == "all" || split_name(r.split) == split;
}

std::vector<const ManifestRecord*> chip_rows(const DatasetManifest& m, const std::string& split,
                                             bool include_border) {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : m.records) {
    if (!r.is_chip() || r.duplicate || !split_matches(r, split)) continue;
    if (r.border && !include_border) continue;
    out.push_back(&r);
  }
  return out;
}

std::map<Key, const ManifestRecord*> street_index(const DatasetManifest& m) {
  std::map<Key, const ManifestRecord*> idx;
  for (const auto& r : m.records) {
    if (!r.is_chip() && !r.duplicate) idx.emplace(key_of(r), &r);
  }
  return idx;
}

std::string relative_to(const fs::path& file, const fs::path& base) {
  const fs::path a = fs::absolute(file).lexically_normal();
  const fs::path b = fs::absolute(base).lexically_normal();
  return a.lexically_relative(b).generic_string();
}

std::string roi_name(const ManifestRecord& chip, Side side) {
  std::ostringstream s;
  s << "rois/w" << chip.wafer_id << "_c" << chip.chip_col << "_r" << chip.chip_row << "_" << side_name(side)
    << ".png";
  return s.str();
}

double chip_px_of(const ManifestRecord& r, const cv::Mat& img) {
  return r.chip_px ? static_cast<double>(*r.chip_px) : estimate_chip_px(img);
}

nlohmann::ordered_json confusion_json(const Confusion& c) {
  nlohmann::ordered_json j;
  j["accuracy"] = c.accuracy();
  j["macro_accuracy"] = c.macro_accuracy();
  if (c.classes() == 2) j["fault_detection"] = c.recall(1);
  j["counts"] = nlohmann::ordered_json::array();
  for (int t = 0; t < c.classes(); ++t) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int p = 0; p < c.classes(); ++p) row.push_back(c.count(t, p));
    j["counts"].push_back(row);
  }
  j["normalized"] = c.normalized();
  return j;
}

nlohmann::ordered_json score_json(const SystemScore& s) {
  nlohmann::ordered_json j;
  j["accuracy"] = s.accuracy;
  j["macro_accuracy"] = s.macro;
  j["fault_detection"] = s.fault_detection;
  j["confusion"] = confusion_json(s.chips);
  return j;
}

SystemScore score(const Confusion& c) {
  SystemScore s;
  s.chips = c;
  s.accuracy = c.accuracy();
  s.macro = c.macro_accuracy();
  s.fault_detection = c.recall(1);
  return s;
}

template <typename Label>
std::vector<nn::Sample> load_samples(const std::vector<const ManifestRecord*>& rows, const fs::path& dir,
                                     Label label_of) {
  std::vector<nn::Sample> out(rows.size());
  std::map<std::string, cv::Mat> cache;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto it = cache.find(rows[i]->image_path);
    if (it == cache.end()) it = cache.emplace(rows[i]->image_path, read_gray(dir / rows[i]->image_path)).first;
    out[i].image = it->second;
    out[i].label = label_of(*rows[i]);
  }
  return out;
}

std::vector<int> present_classes(const DatasetManifest& m, RecordKind kind) {
  const auto counts = class_counts(m, Split::kTrain, kind);
  std::vector<int> cls;
  for (int k = 0; k < 3; ++k) {
    if (counts[static_cast<std::size_t>(k)] > 0) cls.push_back(k);
  }
  return cls;
}

nn::Model finish_model(nn::Network<float>&& net, const std::string& kind, const nn::TrainReport& rep) {
  nn::Model m(std::move(net), kind);
  m.info = rep.to_json();
  return m;
}

}  // namespace

// --- verdicts and metrics ---

int ChipVerdict::predicted_faulty() const {
  for (const auto& s : streets) {
    if (s.predicted == 1) return 1;
  }
  return 0;
}

double WaferReport::street_found_rate() const {
  return streets_total == 0 ? 0.0 : static_cast<double>(streets_found) / static_cast<double>(streets_total);
}

WaferReport compute_metrics(const std::vector<ChipVerdict>& verdicts) {
  WaferReport rep;
  std::map<int, WaferBreakdown> per_wafer;
  for (const auto& v : verdicts) {
    rep.border.add(v.truth_border ? 1 : 0, v.predicted_border ? 1 : 0);
    if (v.truth_border) continue;
    auto& w = per_wafer[v.wafer_id];
    w.wafer_id = v.wafer_id;
    ++w.chips;
    rep.chip.add(v.truth_faulty(), v.predicted_faulty());
    w.chip.add(v.truth_faulty(), v.predicted_faulty());
    for (const auto& s : v.streets) {
      const int truth = merged_label(s.truth);
      rep.street.add(truth, s.predicted);
      w.street.add(truth, s.predicted);
      ++rep.streets_total;
      ++w.streets;
      if (s.found) {
        ++rep.streets_found;
        ++w.found;
      }
      if (s.truth == 1) {
        ++rep.anomalies;
        if (s.predicted == 1) ++rep.anomalies_flagged;
      }
    }
  }
  for (auto& [id, w] : per_wafer) rep.wafers.push_back(w);
  return rep;
}

std::string WaferReport::to_json() const {
  nlohmann::ordered_json j;
  j["street_found_rate"] = street_found_rate();
  j["streets_total"] = streets_total;
  j["streets_found"] = streets_found;
  j["street"] = confusion_json(street);
  j["chip"] = confusion_json(chip);
  j["border"] = confusion_json(border);
  j["anomalies"] = {{"total", anomalies}, {"flagged_faulty", anomalies_flagged}};
  j["wafers"] = nlohmann::ordered_json::array();
  for (const auto& w : wafers) {
    nlohmann::ordered_json e;
    e["wafer_id"] = w.wafer_id;
    e["chips"] = w.chips;
    e["streets"] = w.streets;
    e["found"] = w.found;
    e["street_found_rate"] = w.streets ? static_cast<double>(w.found) / static_cast<double>(w.streets) : 0.0;
    e["street_accuracy"] = w.street.accuracy();
    e["street_fault_detection"] = w.street.recall(1);
    e["chip_accuracy"] = w.chip.accuracy();
    e["chip_fault_detection"] = w.chip.recall(1);
    j["wafers"].push_back(e);
  }
  return j.dump(2);
}

// --- models ---

Models load_models(const fs::path& dir) {
  Models m;
  const auto bank = dir / "templates.wbank";
  if (fs::exists(bank)) m.bank = load_bank(bank);
  if (fs::exists(dir / "border.wmdl")) m.border = nn::load_model(dir / "border.wmdl");
  if (fs::exists(dir / "street.wmdl")) m.street = nn::load_model(dir / "street.wmdl");
  if (fs::exists(dir / "chip.wmdl")) m.chip = nn::load_model(dir / "chip.wmdl");
  return m;
}

void require_models(const Models& models, bool border, bool street, bool chip) {
  if (models.bank.templates.empty()) throw ConfigError("template bank missing (templates.wbank)");
  if (border && !models.border) throw ConfigError("border model missing (border.wmdl)");
  if (street && !models.street) throw ConfigError("street model missing (street.wmdl)");
  if (chip && !models.chip) throw ConfigError("chip model missing (chip.wmdl)");
}

std::optional<ImagePlane> external_map_for(const PipelineConfig& config) {
  const int grid = kCanonicalPx / 10;
  if (!config.external_map.empty()) return load_external_map(config.external_map, grid, grid);
  if (config.central_suppression) return central_suppression(grid, grid, config.suppression_box);
  return std::nullopt;
}

// --- attention stage ---

ExtractResult extract_rois(const DatasetManifest& chips, const fs::path& dataset_dir, const TemplateBank& bank,
                           const PipelineConfig& config, const fs::path& out_dir, const std::string& split) {
  config.validate();
  if (bank.templates.empty()) throw ConfigError("template bank is empty");
  const auto rows = chip_rows(chips, split, false);
  const auto streets = street_index(chips);
  const auto external = external_map_for(config);
  fs::create_directories(out_dir / "rois");

  struct Slot {
    SaccadePlan plan;
    std::vector<ManifestRecord> records;
    std::vector<cv::Point2d> fix;
    std::vector<cv::Point2d> truth;
  };
  std::vector<Slot> slots(rows.size());
  parallel_for(rows.size(), config.workers ? config.workers : default_workers(), [&](std::size_t i) {
    const ManifestRecord& chip = *rows[i];
    const cv::Mat img = read_gray(dataset_dir / chip.image_path);
    const double chip_px = chip_px_of(chip, img);
    Slot& slot = slots[i];
    slot.plan = find_streets(img, bank, chip_px, config.attention, external ? &*external : nullptr);
    const std::string source = relative_to(dataset_dir / chip.image_path, out_dir);
    for (Side side : kAllSides) {
      ManifestRecord r = chip;
      r.side = std::string(side_name(side));
      r.duplicate = false;
      r.source_image = source;
      r.truth_x.reset();
      r.truth_y.reset();
      const auto it = streets.find(key_of(r));
      if (it == streets.end()) throw DataError("manifest lacks street row for " + chip.image_path);
      r.label = it->second->label;
      r.truth_x = it->second->truth_x;
      r.truth_y = it->second->truth_y;
      const Fixation* f = slot.plan.on_side(side);
      const StreetROI roi = f ? extract_roi(img, f->pixel, side, f->street_width_px, chip_px) : StreetROI{};
      r.found = roi.valid;
      r.image_path = source;
      if (roi.valid) {
        r.image_path = roi_name(chip, side);
        write_png(out_dir / r.image_path, roi.canonical);
        r.fixation_x = f->normalized.x;
        r.fixation_y = f->normalized.y;
        r.street_width_px = static_cast<int>(std::lround(f->street_width_px));
        if (r.truth_x && r.truth_y) {
          slot.fix.push_back(f->pixel);
          slot.truth.emplace_back(*r.truth_x, *r.truth_y);
        }
      }
      slot.records.push_back(std::move(r));
    }
  });

  ExtractResult res;
  res.rois.generator = chips.generator;
  std::vector<cv::Point2d> fix;
  std::vector<cv::Point2d> truth;
  for (auto& s : slots) {
    res.plans.push_back(std::move(s.plan));
    for (auto& r : s.records) res.rois.records.push_back(std::move(r));
    fix.insert(fix.end(), s.fix.begin(), s.fix.end());
    truth.insert(truth.end(), s.truth.begin(), s.truth.end());
  }
  res.precision = measure_precision(fix, truth);
  res.fixation_pixels = fix;
  return res;
}

// --- training data ---

std::vector<nn::Sample> street_samples(const DatasetManifest& rois, const fs::path& dir, Split split, int classes,
                                       bool balance) {
  DatasetManifest found;
  found.generator = rois.generator;
  for (const auto& r : rois.records) {
    if (!r.is_chip() && r.found.value_or(false) && r.split == split) found.records.push_back(r);
  }
  // Balance over the classes the network sees.
  if (classes == 2) {
    for (auto& r : found.records) r.label = merged_label(r.label);
  }
  if (balance && split == Split::kTrain && !found.records.empty()) {
    BalanceOptions opt;
    opt.kind = RecordKind::kStreets;
    opt.classes = present_classes(found, RecordKind::kStreets);
    found = class_balance(found, opt);
  }
  std::vector<const ManifestRecord*> rows;
  for (const auto& r : found.records) rows.push_back(&r);
  return load_samples(rows, dir, [](const ManifestRecord& r) { return r.label; });
}

std::vector<nn::Sample> chip_samples(const DatasetManifest& chips, const fs::path& dir, Split split, bool balance) {
  DatasetManifest sel;
  for (const auto& r : chips.records) {
    if (r.is_chip() && !r.border && !r.duplicate && r.split == split) sel.records.push_back(r);
  }
  // Balance over the two classes the network sees.
  for (auto& r : sel.records) r.label = merged_label(r.label);
  if (balance && split == Split::kTrain && !sel.records.empty()) {
    BalanceOptions opt;
    opt.kind = RecordKind::kChips;
    opt.classes = present_classes(sel, RecordKind::kChips);
    sel = class_balance(sel, opt);
  }
  std::vector<const ManifestRecord*> rows;
  for (const auto& r : sel.records) rows.push_back(&r);
  return load_samples(rows, dir, [](const ManifestRecord& r) { return r.label; });
}

std::vector<nn::Sample> border_samples(const DatasetManifest& chips, const fs::path& dir, Split split, bool balance) {
  std::vector<const ManifestRecord*> rows[2];
  for (const auto& r : chips.records) {
    if (r.is_chip() && !r.duplicate && r.split == split) rows[r.border ? 1 : 0].push_back(&r);
  }
  std::vector<const ManifestRecord*> all = rows[0];
  all.insert(all.end(), rows[1].begin(), rows[1].end());
  if (balance && !rows[0].empty() && !rows[1].empty()) {
    const int minority = rows[0].size() < rows[1].size() ? 0 : 1;
    const auto& src = rows[minority];
    const std::size_t target = rows[1 - minority].size();
    for (std::size_t k = src.size(); k < target; ++k) all.push_back(src[k % src.size()]);
  }
  return load_samples(all, dir, [](const ManifestRecord& r) { return r.border ? 1 : 0; });
}

nn::Model train_street_model(const DatasetManifest& rois, const fs::path& dir, const PipelineConfig& config,
                             nn::TrainReport* report, const fs::path& log) {
  const auto train = street_samples(rois, dir, Split::kTrain, config.street_classes, true);
  const auto val = street_samples(rois, dir, Split::kVal, config.street_classes, false);
  nn::TrainReport local;
  nn::TrainReport& rep = report ? *report : local;
  auto net = nn::train_classifier(nn::street_network(config.street_classes), train, val, config.street_train,
                                  &rep, log);
  return finish_model(std::move(net), "street", rep);
}

nn::Model train_chip_model(const DatasetManifest& chips, const fs::path& dir, const PipelineConfig& config,
                           nn::TrainReport* report, const fs::path& log) {
  const auto train = chip_samples(chips, dir, Split::kTrain, true);
  const auto val = chip_samples(chips, dir, Split::kVal, false);
  nn::TrainReport local;
  nn::TrainReport& rep = report ? *report : local;
  auto net = nn::train_classifier(nn::chip_network(2), train, val, config.chip_train, &rep, log);
  return finish_model(std::move(net), "chip", rep);
}

nn::Model train_border_model(const DatasetManifest& chips, const fs::path& dir, const PipelineConfig& config,
                             nn::TrainReport* report, const fs::path& log) {
  const auto train = border_samples(chips, dir, Split::kTrain, true);
  const auto val = border_samples(chips, dir, Split::kVal, false);
  nn::TrainReport local;
  nn::TrainReport& rep = report ? *report : local;
  auto net = nn::train_classifier(nn::border_network(), train, val, config.border_train, &rep, log);
  return finish_model(std::move(net), "border", rep);
}

// --- full system ---

DatasetManifest verdict_manifest(const std::vector<ChipVerdict>& verdicts, const std::string& generator) {
  DatasetManifest m;
  m.generator = generator;
  for (const auto& v : verdicts) {
    ManifestRecord chip;
    chip.image_path = v.image_path;
    chip.wafer_id = v.wafer_id;
    chip.chip_col = v.col;
    chip.chip_row = v.row;
    chip.side = "chip";
    chip.label = v.truth_label;
    chip.split = v.split;
    chip.border = v.truth_border;
    chip.predicted = v.predicted_border ? 0 : v.predicted_faulty();
    chip.found = !v.predicted_border;
    m.records.push_back(chip);
    if (v.truth_border) continue;
    for (const auto& s : v.streets) {
      ManifestRecord r = chip;
      r.side = std::string(side_name(s.side));
      r.label = s.truth;
      r.border = false;
      r.found = s.found;
      r.predicted = s.predicted;
      if (s.found) {
        r.image_path = s.roi_path.empty() ? v.image_path : s.roi_path;
        r.fixation_x = s.fixation.x;
        r.fixation_y = s.fixation.y;
      }
      m.records.push_back(r);
    }
  }
  return m;
}

PipelineResult run_pipeline(const DatasetManifest& chips, const fs::path& dataset_dir, Models& models,
                            const PipelineConfig& config, const fs::path& out_dir) {
  config.validate();
  require_models(models, true, true, false);
  const auto rows = chip_rows(chips, config.split, true);
  const auto streets = street_index(chips);
  const auto external = external_map_for(config);
  const bool write = !out_dir.empty();
  if (write) fs::create_directories(out_dir / "rois");

  PipelineResult res;
  res.verdicts.resize(rows.size());
  std::vector<cv::Mat> images(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRecord& r = *rows[i];
    ChipVerdict& v = res.verdicts[i];
    v.wafer_id = r.wafer_id;
    v.col = r.chip_col;
    v.row = r.chip_row;
    v.image_path = r.image_path;
    v.split = r.split;
    v.truth_border = r.border;
    v.truth_label = r.border ? 0 : r.label;
    for (Side side : kAllSides) {
      auto& s = v.streets[static_cast<std::size_t>(side)];
      s.side = side;
      ManifestRecord probe = r;
      probe.side = std::string(side_name(side));
      if (const auto it = streets.find(key_of(probe)); it != streets.end()) s.truth = it->second->label;
    }
    images[i] = read_gray(dataset_dir / r.image_path);
  }

  // Inside/border decision, in manifest order.
  const auto border_pred = nn::predict(models.border->network, images);
  for (std::size_t i = 0; i < rows.size(); ++i) res.verdicts[i].predicted_border = border_pred[i] == 1;

  // Attention per inside chip.
  std::vector<std::array<cv::Mat, 4>> rois(rows.size());
  parallel_for(rows.size(), config.workers ? config.workers : default_workers(), [&](std::size_t i) {
    ChipVerdict& v = res.verdicts[i];
    if (v.predicted_border) return;
    const double chip_px = chip_px_of(*rows[i], images[i]);
    const SaccadePlan plan =
        find_streets(images[i], models.bank, chip_px, config.attention, external ? &*external : nullptr);
    for (Side side : kAllSides) {
      const Fixation* f = plan.on_side(side);
      if (!f) continue;
      const StreetROI roi = extract_roi(images[i], f->pixel, side, f->street_width_px, chip_px);
      if (!roi.valid) continue;
      auto& s = v.streets[static_cast<std::size_t>(side)];
      s.found = true;
      s.fixation = f->normalized;
      rois[i][static_cast<std::size_t>(side)] = roi.canonical;
      if (write) {
        s.roi_path = roi_name(*rows[i], side);
        write_png(out_dir / s.roi_path, roi.canonical);
      }
    }
  });

  // Street classification of every found side.
  std::vector<cv::Mat> batch;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t s = 0; s < 4; ++s) {
      if (!rois[i][s].empty()) {
        batch.push_back(rois[i][s]);
        where.emplace_back(i, s);
      }
    }
  }
  const auto pred = nn::predict(models.street->network, batch);
  const int classes = models.street->network.classes();
  for (std::size_t k = 0; k < where.size(); ++k) {
    auto& s = res.verdicts[where[k].first].streets[where[k].second];
    s.predicted_raw = pred[k];
    s.predicted = classes == 2 ? pred[k] : merged_label(pred[k]);
  }

  res.report = compute_metrics(res.verdicts);
  if (write) write_run_outputs(out_dir, res.verdicts, res.report, chips.generator);
  return res;
}

void write_run_outputs(const fs::path& out_dir, const std::vector<ChipVerdict>& verdicts, const WaferReport& report,
                       const std::string& generator) {
  fs::create_directories(out_dir);
  write_manifest(out_dir / "verdicts.jsonl", verdict_manifest(verdicts, generator));
  std::ofstream(out_dir / "metrics.json") << report.to_json() << '\n';
  std::map<int, std::vector<ChipVerdict>> by_wafer;
  for (const auto& v : verdicts) by_wafer[v.wafer_id].push_back(v);
  for (const auto& [id, vs] : by_wafer) {
    write_png(out_dir / ("wafer_map_w" + std::to_string(id) + ".png"), render_wafer_map(vs, MapSource::kPredicted));
    write_png(out_dir / ("wafer_map_w" + std::to_string(id) + "_truth.png"), render_wafer_map(vs, MapSource::kTruth));
  }
}

std::vector<ChipVerdict> verdicts_from_manifest(const DatasetManifest& manifest) {
  std::vector<ChipVerdict> out;
  std::map<std::tuple<int, int, int>, std::size_t> index;
  for (const auto& r : manifest.records) {
    if (!r.is_chip()) continue;
    ChipVerdict v;
    v.wafer_id = r.wafer_id;
    v.col = r.chip_col;
    v.row = r.chip_row;
    v.image_path = r.image_path;
    v.split = r.split;
    v.truth_border = r.border;
    v.truth_label = r.label;
    v.predicted_border = !r.found.value_or(true);
    for (Side side : kAllSides) v.streets[static_cast<std::size_t>(side)].side = side;
    index[{r.wafer_id, r.chip_col, r.chip_row}] = out.size();
    out.push_back(std::move(v));
  }
  for (const auto& r : manifest.records) {
    if (r.is_chip()) continue;
    const auto it = index.find({r.wafer_id, r.chip_col, r.chip_row});
    if (it == index.end()) throw DataError("street row without chip row: " + r.image_path);
    const auto side = parse_side(r.side);
    if (!side) throw DataError("bad side '" + r.side + "'");
    auto& s = out[it->second].streets[static_cast<std::size_t>(*side)];
    s.truth = r.label;
    s.found = r.found.value_or(false);
    s.predicted = r.predicted.value_or(0);
    s.predicted_raw = s.predicted;
    if (s.found) {
      s.roi_path = r.image_path;
      s.fixation = {r.fixation_x.value_or(0.0), r.fixation_y.value_or(0.0)};
    }
  }
  return out;
}

// --- ablation ---

double AblationReport::mean_macro_delta() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.attention.macro - r.whole_chip.macro;
  return s / static_cast<double>(runs.size());
}

double AblationReport::mean_fault_delta() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.attention.fault_detection - r.whole_chip.fault_detection;
  return s / static_cast<double>(runs.size());
}

std::string AblationReport::to_json() const {
  nlohmann::ordered_json j;
  j["street_found_rate"] = street_found_rate;
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json e;
    e["seed"] = r.seed;
    e["with_attention"] = score_json(r.attention);
    e["without_attention"] = score_json(r.whole_chip);
    e["improvement"] = {{"macro_accuracy", r.attention.macro - r.whole_chip.macro},
                        {"fault_detection", r.attention.fault_detection - r.whole_chip.fault_detection}};
    j["runs"].push_back(e);
  }
  j["mean_improvement"] = {{"macro_accuracy", mean_macro_delta()}, {"fault_detection", mean_fault_delta()}};
  return j.dump(2);
}

AblationReport ablate_attention(const DatasetManifest& chips, const fs::path& dataset_dir, const TemplateBank& bank,
                                const PipelineConfig& config, const std::vector<std::uint64_t>& seeds,
                                const fs::path& out_dir) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  fs::create_directories(out_dir);
  const ExtractResult ext = extract_rois(chips, dataset_dir, bank, config, out_dir, "all");
  write_manifest(out_dir / "rois.jsonl", ext.rois);

  // Test chips and, per chip, the rows of its found streets.
  const auto test_chips = chip_rows(chips, "test", false);
  std::map<Key, std::size_t> chip_index;
  for (std::size_t i = 0; i < test_chips.size(); ++i) {
    ManifestRecord k = *test_chips[i];
    chip_index[key_of(k)] = i;
  }
  std::vector<cv::Mat> test_rois;
  std::vector<std::size_t> roi_chip;
  for (const auto& r : ext.rois.records) {
    if (r.split != Split::kTest || !r.found.value_or(false)) continue;
    ManifestRecord k = r;
    k.side = "chip";
    const auto it = chip_index.find(key_of(k));
    if (it == chip_index.end()) continue;
    test_rois.push_back(read_gray(out_dir / r.image_path));
    roi_chip.push_back(it->second);
  }
  std::vector<cv::Mat> test_images;
  for (const auto* r : test_chips) test_images.push_back(read_gray(dataset_dir / r->image_path));

  AblationReport rep;
  long total = 0;
  long found = 0;
  for (const auto& r : ext.rois.records) {
    ++total;
    found += r.found.value_or(false) ? 1 : 0;
  }
  rep.street_found_rate = total ? static_cast<double>(found) / static_cast<double>(total) : 0.0;

  for (std::uint64_t seed : seeds) {
    PipelineConfig cfg = config;
    cfg.street_train.seed = seed;
    cfg.chip_train.seed = seed;
    AblationRun run;
    run.seed = seed;
    const std::string tag = std::to_string(seed);

    nn::Model street = train_street_model(ext.rois, out_dir, cfg, nullptr, out_dir / ("street_log_" + tag + ".jsonl"));
    const auto pred = nn::predict(street.network, test_rois);
    std::vector<int> chip_fault(test_chips.size(), 0);
    const int classes = street.network.classes();
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const int faulty = classes == 2 ? pred[k] : merged_label(pred[k]);
      if (faulty) chip_fault[roi_chip[k]] = 1;
    }
    Confusion with(2);
    for (std::size_t i = 0; i < test_chips.size(); ++i) with.add(merged_label(test_chips[i]->label), chip_fault[i]);
    run.attention = score(with);

    nn::Model whole = train_chip_model(chips, dataset_dir, cfg, nullptr, out_dir / ("chip_log_" + tag + ".jsonl"));
    const auto cpred = nn::predict(whole.network, test_images);
    Confusion without(2);
    for (std::size_t i = 0; i < test_chips.size(); ++i) without.add(merged_label(test_chips[i]->label), cpred[i]);
    run.whole_chip = score(without);
    rep.runs.push_back(run);
  }
  std::ofstream(out_dir / "ablation.json") << rep.to_json() << '\n';
  return rep;
}

}  // namespace wafer
