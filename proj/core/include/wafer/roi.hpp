#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/types.hpp"

namespace wafer {

inline constexpr int kRoiHeight = 60;
inline constexpr int kRoiWidth = 192;

struct StreetROI {
  std::string source;       // chip id or image path
  Side side = Side::kNorth;
  cv::Rect crop;            // in chip image pixels, before rotation
  int rotation_deg = 0;     // clockwise, multiple of 90
  cv::Point2d fixation;     // street center in chip image pixels
  double street_width_px = 0.0;
  bool valid = false;
  cv::Mat canonical;        // 8-bit, kRoiHeight x kRoiWidth, chip on top
};

// Clockwise rotation that puts the chip above the street: S 0, E 90, N 180, W 270.
int canonical_rotation(Side side);

// Crop rectangle around a street center: 1.2 * chip_px along the street and
// 6 * street_width across it, placed so that after rotation the street
// centerline lies at 2/3 of the height from the top (chip side above).
cv::Rect roi_rect(cv::Point2d center, Side side, double street_width_px, double chip_px);

// Cuts, rotates and resizes (bilinear) the ROI. A rectangle leaving the image
// yields valid == false and an empty canonical image.
StreetROI extract_roi(const cv::Mat& chip_image, cv::Point2d center, Side side,
                      double street_width_px, double chip_px);

// Zero mean, unit population std, as 32-bit float. Constant images map to
// zeros.
cv::Mat contrast_normalize(const cv::Mat& image);

struct AxisStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct PrecisionStats {
  std::size_t count = 0;
  AxisStats x;
  AxisStats y;
  std::vector<cv::Point2d> deviations;  // fixation - truth, pixels
};

// Signed per-axis deviations of fixations from ground-truth centers.
PrecisionStats measure_precision(const std::vector<cv::Point2d>& fixations,
                                 const std::vector<cv::Point2d>& truth);

// JSON summary and a CSV histogram (1 px bins over [-range, range], one
// row per bin with x and y counts).
void write_precision_report(const std::filesystem::path& json_path,
                            const std::filesystem::path& histogram_csv, const PrecisionStats& stats,
                            int range = 20);

}  // namespace wafer
