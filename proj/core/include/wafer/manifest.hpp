#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wafer {

enum class Split : int { kTrain = 0, kVal = 1, kTest = 2 };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);  // throws DataError

// One row of a dataset manifest. Street rows carry a side (N/E/S/W), chip
// rows the side "chip". Optional fields are only written when present.
struct ManifestRecord {
  std::string image_path;  // relative to the manifest directory
  int wafer_id = 0;
  int chip_col = 0;
  int chip_row = 0;
  std::string side = "chip";
  int label = 0;  // 0 good, 1 anomaly, 2 bad
  Split split = Split::kTrain;
  bool duplicate = false;
  bool border = false;
  std::optional<int> chip_px;
  std::optional<int> street_width_px;
  std::optional<double> truth_x;  // street center in chip image pixels
  std::optional<double> truth_y;
  std::optional<std::string> source_image;  // chip image a ROI was cut from
  std::optional<double> fixation_x;  // normalized chip coordinates
  std::optional<double> fixation_y;
  std::optional<bool> found;
  std::optional<int> predicted;  // classifier output, merged 2-class

  bool is_chip() const { return side == "chip"; }
  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  static constexpr int kFormatVersion = 1;

  int version = kFormatVersion;
  std::string generator = "{}";  // JSON object echoing the generator spec
  std::vector<ManifestRecord> records;

  bool operator==(const DatasetManifest&) const = default;
};

// Line-delimited JSON. The first line is a header
//   {"format":"waferscope-manifest","version":1,"generator":{...}}
// followed by one record per line with a fixed field order.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Throws DataError for a missing file, an unknown version, or a malformed
// record (the message names the 1-based line number). With `check_files`,
// every referenced image must exist relative to the manifest directory.
DatasetManifest read_manifest(const std::filesystem::path& path, bool check_files = false);

std::string manifest_to_string(const DatasetManifest& manifest);
DatasetManifest manifest_from_string(const std::string& text);

enum class RecordKind { kStreets, kChips, kAll };

struct BalanceOptions {
  RecordKind kind = RecordKind::kStreets;
  std::vector<int> classes{0, 1, 2};
};

// Duplicates train-split records of minority classes until every class has
// the majority count. Duplicates reference the same image and carry
// duplicate=true. Border chips and val/test rows are left untouched.
DatasetManifest class_balance(const DatasetManifest& manifest, const BalanceOptions& options = {});

// Per-class counts of matching records in one split.
std::array<long, 3> class_counts(const DatasetManifest& manifest, Split split, RecordKind kind);

}  // namespace wafer
