#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/types.hpp"

namespace wafer::synth {

struct WaferSpec {
  int grid_cols = 16;
  int grid_rows = 16;
  int chip_px = 240;          // chip side length, 200..2000
  int street_width_px = 8;    // >= 4
  Polarity polarity = Polarity::kDarkStreet;
  double inner_structure_density = 0.5;  // [0,1]
  double wafer_radius_chips = 7.5;
  double noise_sigma = 4.0;
  std::uint64_t seed = 1;

  // Per physical street segment. Defaults follow the class ratio of the
  // reference data (92.2 : 3.7 : 4.1).
  double anomaly_rate = 0.037;
  double fault_rate = 0.041;

  // Kerf excursion of a faulty segment: peak offset of the cut centerline
  // from the street center and half-length along the street, both in street
  // widths. The defaults keep the fault extent within 3 street widths.
  double fault_offset_min = 0.9;
  double fault_offset_max = 2.0;
  double fault_half_length_min = 0.75;
  double fault_half_length_max = 1.5;

  // Random displacement of each chip crop, fraction of the chip pitch.
  double crop_jitter = 0.03;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// Pixel layout of a rendered wafer. All coordinates are in wafer image
// pixels; a street band [start, start + street_width) is centered at
// start + street_width / 2 (continuous coordinates, pixel k covers [k, k+1)).
struct WaferGeometry {
  explicit WaferGeometry(const WaferSpec& spec);

  int pitch = 0;
  int margin = 0;
  int width = 0;
  int height = 0;
  int chip_px = 0;
  int street_px = 0;
  double disk_cx = 0.0;
  double disk_cy = 0.0;
  double disk_radius = 0.0;

  int street_start_x(int k) const { return margin + k * pitch; }
  int street_start_y(int k) const { return margin + k * pitch; }
  double street_center_x(int k) const { return street_start_x(k) + street_px / 2.0; }
  double street_center_y(int k) const { return street_start_y(k) + street_px / 2.0; }
  cv::Rect chip_rect(int col, int row) const;
  // Side length of the square chip image cut around each chip.
  int chip_image_px() const;
};

struct StreetTruth {
  Side side = Side::kNorth;
  StreetClass label = StreetClass::kGood;
  Orientation orientation = Orientation::kHorizontal;
  double center_x = 0.0;  // in chip image pixels
  double center_y = 0.0;
};

struct ChipTruth {
  int col = 0;
  int row = 0;
  bool border = false;
  cv::Rect crop;                      // chip image rectangle in wafer pixels
  std::array<StreetTruth, 4> streets;  // indexed by Side; valid for inside chips
  StreetClass label = StreetClass::kGood;  // worst street class
};

struct GroundTruth {
  std::vector<ChipTruth> chips;  // every chip intersecting the wafer disk
  int inside_count = 0;
  std::vector<std::string> warnings;
};

struct SyntheticWafer {
  cv::Mat image;        // 8-bit grayscale
  cv::Mat kerf_mask;    // 255 on kerf pixels
  cv::Mat street_mask;  // 255 inside street bands
  GroundTruth truth;
};

// Deterministic in `spec` (including the seed).
SyntheticWafer generate_wafer(const WaferSpec& spec);

// Cuts the chip image of `chip` from a rendered wafer.
cv::Mat chip_image(const SyntheticWafer& wafer, const ChipTruth& chip);

// Counts of physical street segments per class (each shared segment once).
std::array<long, 3> segment_class_counts(const WaferSpec& spec);

}  // namespace wafer::synth
