#pragma once

#include <opencv2/core.hpp>

#include "wafer/rng.hpp"

namespace wafer::nn {

struct AugmentSpec {
  double rotation_deg = 4.0;   // uniform in [-r, r]
  double scale = 0.04;         // factor uniform in [1 - s, 1 + s]
  double translate_x = 0.10;   // fraction of the width
  double translate_y = 0.01;   // fraction of the height
  bool flip_x = true;          // mirror left-right with probability 1/2
  bool flip_y = false;

  static AugmentSpec street() { return {}; }
  static AugmentSpec chip() { return {4.0, 0.04, 0.10, 0.10, true, true}; }
  static AugmentSpec none() { return {0.0, 0.0, 0.0, 0.0, false, false}; }
  void validate() const;  // throws ConfigError on negative ranges
};

struct AugmentDraw {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  bool flip_x = false;
  bool flip_y = false;
};

AugmentDraw draw_augmentation(const AugmentSpec& spec, int width, int height, Rng& rng);

// Applies a draw: flips, then rotation and scale about the image center and
// a translation (bilinear, mirrored borders). The identity draw returns an
// exact copy.
cv::Mat apply_augmentation(const cv::Mat& image, const AugmentDraw& draw);

cv::Mat augment(const cv::Mat& image, const AugmentSpec& spec, Rng& rng);

}  // namespace wafer::nn
