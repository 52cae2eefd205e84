#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/image.hpp"
#include "wafer/types.hpp"
#include "wafer/v1.hpp"

namespace wafer {

// Chip images are resized to this square side before the attention model
// runs; V1 pool and all later grids are canonical_px / 10 cells wide.
inline constexpr int kCanonicalPx = 320;

// Street widths of the three width classes, in canonical pixels.
inline constexpr std::array<double, 3> kWidthClassPx{4.0, 8.0, 12.0};

// Template footprint in V1-pool cells (along x across y for horizontal streets).
inline constexpr int kTemplateLength = 29;
inline constexpr int kTemplateDepth = 5;

struct TemplateMeta {
  Orientation orientation = Orientation::kHorizontal;
  int width_class = 1;  // 1..3
  Polarity polarity = Polarity::kDarkStreet;
  std::string source;  // sketch the template was learned from

  double width_px() const { return kWidthClassPx[static_cast<std::size_t>(width_class - 1)]; }
  bool operator==(const TemplateMeta&) const = default;
};

// Weights over (V1 feature, dx, dy); one plane per V1 feature, all of the
// footprint size. Non-negative, jointly L2-normalized.
struct StreetTemplate {
  TemplateMeta meta;
  std::vector<ImagePlane> weights;

  int width() const { return weights.empty() ? 0 : weights.front().width(); }
  int height() const { return weights.empty() ? 0 : weights.front().height(); }
  bool operator==(const StreetTemplate&) const = default;
};

struct TemplateBank {
  V1Params v1;
  std::vector<StreetTemplate> templates;
};

// Draws the canonical sketch of one street kind: a street band through the
// center of the middle V1-pool cell, crossed by two perpendicular streets.
cv::Mat make_sketch(const TemplateMeta& meta);

// File name used for a sketch, e.g. "h_w2_dark.png".
std::string sketch_name(const TemplateMeta& meta);

// Writes all 12 sketches into `dir`.
void write_sketches(const std::filesystem::path& dir);

// Learns one template from a sketch: the V1-pool response around the sketch
// center, floored at `floor` times its maximum and L2-normalized. Throws
// DataError("empty template") when the sketch has no structure.
StreetTemplate one_shot_learn(const cv::Mat& sketch, const TemplateMeta& meta, const V1Params& v1,
                              double floor = 0.05);

// Learns the full 12-template bank from the sketches in `dir` (names as in
// sketch_name). Throws DataError if a sketch is missing.
TemplateBank learn_bank(const std::filesystem::path& dir, const V1Params& v1 = {});

// Learns the bank from in-memory sketches (no files).
TemplateBank learn_default_bank(const V1Params& v1 = {});

// Every (orientation, width class, polarity) combination in bank order.
std::vector<TemplateMeta> bank_layout();

void save_bank(const std::filesystem::path& path, const TemplateBank& bank);
TemplateBank load_bank(const std::filesystem::path& path);  // throws DataError

}  // namespace wafer
