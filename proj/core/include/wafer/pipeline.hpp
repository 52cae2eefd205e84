#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/attention.hpp"
#include "wafer/config.hpp"
#include "wafer/manifest.hpp"
#include "wafer/metrics.hpp"
#include "wafer/nn/checkpoint.hpp"
#include "wafer/roi.hpp"
#include "wafer/templates.hpp"

namespace wafer {

struct StreetVerdict {
  Side side = Side::kNorth;
  int truth = 0;          // 0 good, 1 anomaly, 2 bad
  bool found = false;     // a valid fixation was assigned to this side
  int predicted = 0;      // merged: 0 good, 1 faulty
  int predicted_raw = 0;  // classifier output before merging
  cv::Point2d fixation;   // normalized chip coordinates
  std::string roi_path;
};

struct ChipVerdict {
  int wafer_id = 0;
  int col = 0;
  int row = 0;
  std::string image_path;
  Split split = Split::kTest;
  bool truth_border = false;
  bool predicted_border = false;
  int truth_label = 0;  // worst street class
  std::array<StreetVerdict, 4> streets;

  int truth_faulty() const { return truth_label == 2 ? 1 : 0; }
  // Faulty iff at least one side is faulty.
  int predicted_faulty() const;
};

// Per-wafer slice of the report.
struct WaferBreakdown {
  int wafer_id = 0;
  long chips = 0;
  long streets = 0;
  long found = 0;
  Confusion street{2};
  Confusion chip{2};
};

struct WaferReport {
  Confusion street{2};  // merged, over every side of every inside chip
  Confusion chip{2};
  Confusion border{2};  // truth inside/border vs predicted, all chips
  long streets_total = 0;
  long streets_found = 0;
  long anomalies = 0;          // anomaly streets among inside chips
  long anomalies_flagged = 0;  // of those, predicted faulty
  std::vector<WaferBreakdown> wafers;

  double street_found_rate() const;
  double fault_detection() const { return street.recall(1); }
  double chip_fault_detection() const { return chip.recall(1); }
  std::string to_json() const;
};

// Metrics over verdicts. Chips whose ground truth is "border" are counted
// only in the border confusion matrix.
WaferReport compute_metrics(const std::vector<ChipVerdict>& verdicts);

struct Models {
  TemplateBank bank;
  std::optional<nn::Model> border;
  std::optional<nn::Model> street;
  std::optional<nn::Model> chip;
};

// Loads templates.wbank, border.wmdl, street.wmdl and chip.wmdl from `dir`;
// missing models stay empty.
Models load_models(const std::filesystem::path& dir);
void require_models(const Models& models, bool border, bool street, bool chip);  // ConfigError

// External attention map for a config (central box, image file, or none).
std::optional<ImagePlane> external_map_for(const PipelineConfig& config);

struct ExtractResult {
  DatasetManifest rois;  // one row per side of every processed inside chip
  std::vector<SaccadePlan> plans;
  PrecisionStats precision;  // found sides against ground-truth centers
  std::vector<cv::Point2d> fixation_pixels;
};

// Runs the attention model on every inside chip of `chips` (rows of the
// chosen split; "all" keeps every split), writes canonical ROIs under
// out_dir/rois and returns their manifest. Street labels come from the street
// rows of `chips`.
ExtractResult extract_rois(const DatasetManifest& chips, const std::filesystem::path& dataset_dir,
                           const TemplateBank& bank, const PipelineConfig& config,
                           const std::filesystem::path& out_dir, const std::string& split = "all");

// Training samples.
std::vector<nn::Sample> street_samples(const DatasetManifest& rois, const std::filesystem::path& dir,
                                       Split split, int classes, bool balance);
std::vector<nn::Sample> chip_samples(const DatasetManifest& chips, const std::filesystem::path& dir,
                                     Split split, bool balance);
std::vector<nn::Sample> border_samples(const DatasetManifest& chips, const std::filesystem::path& dir,
                                       Split split, bool balance);

nn::Model train_street_model(const DatasetManifest& rois, const std::filesystem::path& dir,
                             const PipelineConfig& config, nn::TrainReport* report = nullptr,
                             const std::filesystem::path& log = {});
nn::Model train_chip_model(const DatasetManifest& chips, const std::filesystem::path& dir,
                           const PipelineConfig& config, nn::TrainReport* report = nullptr,
                           const std::filesystem::path& log = {});
nn::Model train_border_model(const DatasetManifest& chips, const std::filesystem::path& dir,
                             const PipelineConfig& config, nn::TrainReport* report = nullptr,
                             const std::filesystem::path& log = {});

struct PipelineResult {
  WaferReport report;
  std::vector<ChipVerdict> verdicts;
};

// Wafer -> inside chips -> attention -> street CNN -> chip verdicts. Needs the
// template bank and the border and street models. With a non-empty
// `out_dir`, writes verdicts.jsonl, metrics.json, rois/ and one wafer map
// per wafer.
PipelineResult run_pipeline(const DatasetManifest& chips, const std::filesystem::path& dataset_dir,
                            Models& models, const PipelineConfig& config,
                            const std::filesystem::path& out_dir = {});

// Verdict rows in manifest form (one chip row and four street rows per chip).
DatasetManifest verdict_manifest(const std::vector<ChipVerdict>& verdicts, const std::string& generator);
// Inverse of verdict_manifest (raw 3-class street outputs are not kept).
std::vector<ChipVerdict> verdicts_from_manifest(const DatasetManifest& manifest);

// Writes verdicts.jsonl, metrics.json and the wafer maps of one run.
void write_run_outputs(const std::filesystem::path& out_dir, const std::vector<ChipVerdict>& verdicts,
                       const WaferReport& report, const std::string& generator);

struct SystemScore {
  double accuracy = 0.0;        // chip level, sample-weighted
  double macro = 0.0;           // chip level, mean of class recalls
  double fault_detection = 0.0; // recall of faulty chips
  Confusion chips{2};
};

struct AblationRun {
  std::uint64_t seed = 0;
  SystemScore attention;
  SystemScore whole_chip;
};

struct AblationReport {
  std::vector<AblationRun> runs;
  double street_found_rate = 0.0;

  double mean_macro_delta() const;
  double mean_fault_delta() const;
  std::string to_json() const;
};

// Trains the street CNN on attention ROIs and the whole-chip CNN on 96x96
// chips for every seed and scores both on the test chips at chip level.
AblationReport ablate_attention(const DatasetManifest& chips, const std::filesystem::path& dataset_dir,
                                const TemplateBank& bank, const PipelineConfig& config,
                                const std::vector<std::uint64_t>& seeds,
                                const std::filesystem::path& out_dir);

enum class MapSource { kTruth, kPredicted };

struct MapLayout {
  int cell_px = 24;
  int origin_x = 0;
  int origin_y = 0;
  int cols = 0;
  int rows = 0;
  cv::Rect cell(int col, int row) const;
};

MapLayout wafer_map_layout(const std::vector<ChipVerdict>& chips, int cell_px = 24);

// Chips filled by class (green good, yellow anomaly, red faulty, gray
// border), streets drawn as bars on the chip edges, with column/row labels
// and a legend. Deterministic.
cv::Mat render_wafer_map(const std::vector<ChipVerdict>& chips, MapSource source, int cell_px = 24);

}  // namespace wafer
