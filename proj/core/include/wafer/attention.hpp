#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/fef.hpp"
#include "wafer/hva.hpp"
#include "wafer/templates.hpp"
#include "wafer/types.hpp"

namespace wafer {

struct AttentionParams {
  HVAPoolParams pool;
  ReentrantGains gains;
  FEFParams fef;
  IORParams ior;
  std::vector<double> pfc_gain;  // per template; empty = no feature bias
  int n_saccades = 4;
  double center_box_lo = 0.3;    // fixations with lo < x,y < hi are not streets
  double center_box_hi = 0.7;
};

struct Fixation {
  cv::Point2d normalized;     // chip coordinates in [0,1]^2
  cv::Point2d pixel;          // chip image pixels
  int cell_x = 0;             // FEF grid cell of the saccade target
  int cell_y = 0;
  double peak = 0.0;          // movement-cell activity at selection
  int template_index = -1;    // strongest layer-2/3 template at the target
  double street_width_px = 0.0;  // width class of that template, chip pixels
  Side side = Side::kNorth;   // nearest chip border
  bool valid = false;
  std::string reason;         // why a fixation is not a street
  int steps = 0;
};

struct SaccadePlan {
  std::vector<Fixation> fixations;  // in saccade order, at most n_saccades
  int image_width = 0;
  int image_height = 0;
  std::string diagnostic;           // set when a selection failed

  int valid_count() const;
  // The valid fixation assigned to a side, if any.
  const Fixation* on_side(Side side) const;
};

// A fresh per-chip context: fresh IOR and the given external map (or none).
AttentionContext make_context(const AttentionParams& params, const ImagePlane* external);

// Nearest chip border of a normalized location.
Side nearest_side(cv::Point2d normalized);

// True for locations inside the central box, where no street can lie.
bool in_center_box(cv::Point2d normalized, const AttentionParams& params);

// Runs V1 -> HVA -> FEF on a chip image n_saccades times with inhibition of
// return between saccades. `chip_px` is the chip side length used for the ROI
// bounds check; fixations whose ROI leaves the image are invalid. With
// `dump_dir`, per-saccade activities are written as tensor files.
SaccadePlan find_streets(const cv::Mat& chip_image, const TemplateBank& bank, double chip_px,
                         const AttentionParams& params, const ImagePlane* external = nullptr,
                         const std::filesystem::path* dump_dir = nullptr);

// Chip side estimate for a chip image cut at 1.25 chip pitches.
double estimate_chip_px(const cv::Mat& chip_image);

}  // namespace wafer
