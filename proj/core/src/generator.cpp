#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "wafer/errors.hpp"
#include "wafer/rng.hpp"
#include "wafer/synth.hpp"

namespace wafer::synth {
namespace {

// Independent random streams per wafer element.
constexpr std::uint64_t kHorizontalSegment = 1;
constexpr std::uint64_t kVerticalSegment = 2;
constexpr std::uint64_t kChipStream = 3;
constexpr std::uint64_t kNoiseStream = 4;
constexpr std::uint64_t kStreetStream = 5;

struct Levels {
  int chip;
  int street;
  int kerf;
  int inner_lo;
  int inner_hi;
  int outside;
};

Levels levels_for(Polarity p) {
  if (p == Polarity::kDarkStreet) return {185, 75, 25, 95, 145, 5};
  return {70, 190, 240, 105, 155, 5};
}

int kerf_thickness(int street_px) { return street_px < 8 ? 1 : 2; }

// Class and shape parameters of one physical street segment.
struct Segment {
  StreetClass label = StreetClass::kGood;
  // Excursion (bad segments).
  double center = 0.0;       // along-street position, wafer pixels
  double half_length = 0.0;
  double peak_offset = 0.0;  // signed, across the street
  // Anomaly blob.
  double blob_along = 0.0;
  double blob_across = 0.0;
  int blob_radius = 0;
  int blob_level = 0;
};

Segment draw_segment(const WaferSpec& spec, std::uint64_t kind, int a, int b, double extent_start,
                     const Levels& lv) {
  Rng rng(mix_seed(spec.seed, kind, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)));
  Segment s;
  const double u = uniform(rng, 0.0, 1.0);
  if (u < spec.fault_rate) {
    s.label = StreetClass::kBad;
  } else if (u < spec.fault_rate + spec.anomaly_rate) {
    s.label = StreetClass::kAnomaly;
  }
  const double sw = spec.street_width_px;
  const double len = spec.chip_px;
  if (s.label == StreetClass::kBad) {
    s.half_length = uniform(rng, spec.fault_half_length_min, spec.fault_half_length_max) * sw;
    const double lo = extent_start + sw + s.half_length;
    const double hi = extent_start + len - sw - s.half_length;
    s.center = uniform(rng, lo, std::max(lo, hi));
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    s.peak_offset = sign * uniform(rng, spec.fault_offset_min, spec.fault_offset_max) * sw;
  } else if (s.label == StreetClass::kAnomaly) {
    s.blob_radius = std::max(1, static_cast<int>(std::lround(uniform(rng, 0.25, 0.45) * sw)));
    const double room = std::max(0.0, sw / 2.0 - s.blob_radius - 0.5);
    s.blob_across = uniform(rng, -room, room);
    s.blob_along = extent_start + uniform(rng, 0.15, 0.85) * len;
    const int delta = static_cast<int>(std::lround(uniform(rng, 60.0, 100.0)));
    s.blob_level = std::clamp(uniform(rng, 0.0, 1.0) < 0.5 ? lv.street - delta : lv.street + delta,
                              0, 255);
  }
  return s;
}

double bump(double along, const Segment& s) {
  if (s.label != StreetClass::kBad) return 0.0;
  const double u = (along - s.center) / s.half_length;
  if (std::abs(u) >= 1.0) return 0.0;
  const double v = 1.0 - u * u;
  return s.peak_offset * v * v;
}

// Draws the kerf of one street as a connected column/row-wise raster.
// `horizontal` streets run along x. `offset(along)` gives the centerline
// displacement across the street. Pixels are written to the image and the
// kerf mask (bit `mask_bit`).
template <typename OffsetFn>
void draw_kerf(cv::Mat& image, cv::Mat& kerf_mask, bool horizontal, double center, int thickness,
               int kerf_level, std::uint8_t mask_bit, OffsetFn offset) {
  const int length = horizontal ? image.cols : image.rows;
  const int across_limit = horizontal ? image.rows : image.cols;
  int prev = 0;
  for (int t = 0; t < length; ++t) {
    const double c = center + offset(t + 0.5);
    const int first = static_cast<int>(std::floor(c - thickness / 2.0 + 0.5));
    int lo = first;
    int hi = first + thickness - 1;
    if (t > 0) {
      lo = std::min(lo, prev);
      hi = std::max(hi, prev + thickness - 1);
    }
    prev = first;
    for (int k = std::max(0, lo); k <= std::min(across_limit - 1, hi); ++k) {
      const int x = horizontal ? t : k;
      const int y = horizontal ? k : t;
      image.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(kerf_level);
      kerf_mask.at<std::uint8_t>(y, x) |= mask_bit;
    }
  }
}

void draw_inner_structures(cv::Mat& image, const cv::Rect& chip, const WaferSpec& spec,
                           const Levels& lv, Rng& rng) {
  const int n = static_cast<int>(std::lround(spec.inner_structure_density * 10.0 *
                                             uniform(rng, 0.5, 1.0)));
  const double lo = 0.25 * chip.width;
  const double hi = 0.75 * chip.width;
  for (int i = 0; i < n; ++i) {
    const bool street_like = uniform(rng, 0.0, 1.0) < 0.3;
    const int level = street_like ? lv.street : uniform_int(rng, lv.inner_lo, lv.inner_hi);
    cv::Rect r;
    if (uniform(rng, 0.0, 1.0) < 0.7) {
      const int thick = uniform_int(rng, 2, std::max(3, chip.width / 60));
      const int length = static_cast<int>(uniform(rng, 0.15, 0.45) * chip.width);
      const bool horiz = uniform(rng, 0.0, 1.0) < 0.5;
      const int w = horiz ? length : thick;
      const int h = horiz ? thick : length;
      const int x = static_cast<int>(uniform(rng, lo, std::max(lo, hi - w)));
      const int y = static_cast<int>(uniform(rng, lo, std::max(lo, hi - h)));
      r = {chip.x + x, chip.y + y, w, h};
    } else {
      const int side = static_cast<int>(uniform(rng, 0.03, 0.08) * chip.width);
      const int x = static_cast<int>(uniform(rng, lo, std::max(lo, hi - side)));
      const int y = static_cast<int>(uniform(rng, lo, std::max(lo, hi - side)));
      r = {chip.x + x, chip.y + y, side, side};
    }
    cv::rectangle(image, r, cv::Scalar(level), cv::FILLED);
  }
}

}  // namespace

SyntheticWafer generate_wafer(const WaferSpec& spec) {
  spec.validate();
  const WaferGeometry g(spec);
  const Levels lv = levels_for(spec.polarity);
  const int sw = spec.street_width_px;
  const int thick = kerf_thickness(sw);

  SyntheticWafer out;
  out.image = cv::Mat(g.height, g.width, CV_8UC1, cv::Scalar(lv.chip));
  out.kerf_mask = cv::Mat::zeros(g.height, g.width, CV_8UC1);
  out.street_mask = cv::Mat::zeros(g.height, g.width, CV_8UC1);

  // Chip placement and classification against the wafer disk.
  const int crop_px = g.chip_image_px();
  for (int r = 0; r < spec.grid_rows; ++r) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      const cv::Rect rect = g.chip_rect(c, r);
      const double ccx = rect.x + rect.width / 2.0;
      const double ccy = rect.y + rect.height / 2.0;
      auto dist = [&](double x, double y) { return std::hypot(x - g.disk_cx, y - g.disk_cy); };
      const double half = crop_px / 2.0;
      const double nx = std::clamp(g.disk_cx, double(rect.x), double(rect.x + rect.width));
      const double ny = std::clamp(g.disk_cy, double(rect.y), double(rect.y + rect.height));
      const double near = dist(nx, ny);
      if (near >= g.disk_radius) continue;  // no chip at this grid position

      ChipTruth chip;
      chip.col = c;
      chip.row = r;
      Rng rng(mix_seed(spec.seed, kChipStream, static_cast<std::uint64_t>(c),
                       static_cast<std::uint64_t>(r)));
      const double jx = uniform(rng, -spec.crop_jitter, spec.crop_jitter) * g.pitch;
      const double jy = uniform(rng, -spec.crop_jitter, spec.crop_jitter) * g.pitch;
      chip.crop = cv::Rect(static_cast<int>(std::lround(ccx + jx - half)),
                           static_cast<int>(std::lround(ccy + jy - half)), crop_px, crop_px);
      // Border chips are those whose image shows any part of the outer shape.
      double far = 0.0;
      for (double x : {chip.crop.x + 0.5, chip.crop.x + crop_px - 0.5}) {
        for (double y : {chip.crop.y + 0.5, chip.crop.y + crop_px - 0.5}) far = std::max(far, dist(x, y));
      }
      chip.border = far > g.disk_radius;
      const int shade = uniform_int(rng, -6, 6);
      cv::rectangle(out.image, rect, cv::Scalar(std::clamp(lv.chip + shade, 0, 255)), cv::FILLED);
      draw_inner_structures(out.image, rect, spec, lv, rng);
      out.truth.chips.push_back(chip);
    }
  }

  // Street bands.
  for (int k = 0; k <= spec.grid_rows; ++k) {
    const cv::Rect band(0, g.street_start_y(k), g.width, sw);
    out.image(band).setTo(lv.street);
    out.street_mask(band) |= 1;
  }
  for (int k = 0; k <= spec.grid_cols; ++k) {
    const cv::Rect band(g.street_start_x(k), 0, sw, g.height);
    out.image(band).setTo(lv.street);
    out.street_mask(band) |= 2;
  }

  // Segments: horizontal H(c, k) lies on street row k below chip row k-1;
  // vertical V(k, r) on street column k right of chip column k-1.
  std::vector<std::vector<Segment>> horiz(spec.grid_rows + 1), vert(spec.grid_cols + 1);
  for (int k = 0; k <= spec.grid_rows; ++k) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      horiz[k].push_back(draw_segment(spec, kHorizontalSegment, c, k,
                                      g.street_start_x(c) + sw, lv));
    }
  }
  for (int k = 0; k <= spec.grid_cols; ++k) {
    for (int r = 0; r < spec.grid_rows; ++r) {
      vert[k].push_back(draw_segment(spec, kVerticalSegment, k, r,
                                     g.street_start_y(r) + sw, lv));
    }
  }

  // Kerf lines: slight wobble within the band plus excursions of bad segments.
  const double wobble_amp = std::max(0.0, std::floor(sw / 2.0 - thick) - 1.0);
  auto street_kerf = [&](bool horizontal, int k, const std::vector<Segment>& segs) {
    Rng rng(mix_seed(spec.seed, kStreetStream, horizontal ? 0 : 1, static_cast<std::uint64_t>(k)));
    const double phase = uniform(rng, 0.0, 6.283185307179586);
    const double period = uniform(rng, 0.5, 1.5) * spec.chip_px;
    const double center = horizontal ? g.street_center_y(k) : g.street_center_x(k);
    draw_kerf(out.image, out.kerf_mask, horizontal, center, thick, lv.kerf,
              horizontal ? std::uint8_t{1} : std::uint8_t{2}, [&](double along) {
                double off = std::round(wobble_amp * std::sin(phase + 6.283185307179586 * along / period));
                const int idx = static_cast<int>(std::floor((along - g.margin) / g.pitch));
                if (idx >= 0 && idx < static_cast<int>(segs.size())) off += bump(along, segs[idx]);
                return off;
              });
  };
  for (int k = 0; k <= spec.grid_rows; ++k) street_kerf(true, k, horiz[k]);
  for (int k = 0; k <= spec.grid_cols; ++k) street_kerf(false, k, vert[k]);

  // Anomaly blobs stay inside their band.
  auto draw_blob = [&](const Segment& s, bool horizontal, double center) {
    if (s.label != StreetClass::kAnomaly) return;
    const double across = center + s.blob_across;
    const cv::Point p = horizontal ? cv::Point(int(s.blob_along), int(std::floor(across)))
                                   : cv::Point(int(std::floor(across)), int(s.blob_along));
    cv::circle(out.image, p, std::max(1, s.blob_radius - 1),
               cv::Scalar(s.blob_level), cv::FILLED, cv::LINE_8);
  };
  for (int k = 0; k <= spec.grid_rows; ++k) {
    for (const auto& s : horiz[k]) draw_blob(s, true, g.street_center_y(k));
  }
  for (int k = 0; k <= spec.grid_cols; ++k) {
    for (const auto& s : vert[k]) draw_blob(s, false, g.street_center_x(k));
  }

  // Everything outside the disk is the dark wafer border shape.
  for (int y = 0; y < g.height; ++y) {
    auto* row = out.image.ptr<std::uint8_t>(y);
    const double dy = y + 0.5 - g.disk_cy;
    for (int x = 0; x < g.width; ++x) {
      const double dx = x + 0.5 - g.disk_cx;
      if (dx * dx + dy * dy > g.disk_radius * g.disk_radius) row[x] = static_cast<std::uint8_t>(lv.outside);
    }
  }

  if (spec.noise_sigma > 0.0) {
    Rng rng(mix_seed(spec.seed, kNoiseStream, 0));
    for (int y = 0; y < g.height; ++y) {
      auto* row = out.image.ptr<std::uint8_t>(y);
      for (int x = 0; x < g.width; ++x) {
        const double v = row[x] + normal(rng, 0.0, spec.noise_sigma);
        row[x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }

  // Ground truth per chip side.
  for (auto& chip : out.truth.chips) {
    if (chip.border) continue;
    ++out.truth.inside_count;
    const cv::Rect rect = g.chip_rect(chip.col, chip.row);
    const double mid_x = rect.x + rect.width / 2.0 - chip.crop.x;
    const double mid_y = rect.y + rect.height / 2.0 - chip.crop.y;
    auto set = [&](Side side, const Segment& seg, double cx, double cy) {
      StreetTruth& st = chip.streets[static_cast<int>(side)];
      st.side = side;
      st.label = seg.label;
      st.orientation = street_orientation(side);
      st.center_x = cx;
      st.center_y = cy;
      chip.label = std::max(chip.label, seg.label);
    };
    set(Side::kNorth, horiz[chip.row][chip.col], mid_x, g.street_center_y(chip.row) - chip.crop.y);
    set(Side::kSouth, horiz[chip.row + 1][chip.col], mid_x,
        g.street_center_y(chip.row + 1) - chip.crop.y);
    set(Side::kWest, vert[chip.col][chip.row], g.street_center_x(chip.col) - chip.crop.x, mid_y);
    set(Side::kEast, vert[chip.col + 1][chip.row], g.street_center_x(chip.col + 1) - chip.crop.x,
        mid_y);
  }
  if (out.truth.inside_count == 0) {
    out.truth.warnings.push_back(
        "wafer disk too small for the chip grid: every chip is a border chip");
  }
  return out;
}

cv::Mat chip_image(const SyntheticWafer& wafer, const ChipTruth& chip) {
  const cv::Rect bounds(0, 0, wafer.image.cols, wafer.image.rows);
  if ((chip.crop & bounds) != chip.crop) throw DataError("chip crop outside wafer image");
  return wafer.image(chip.crop).clone();
}

std::array<long, 3> segment_class_counts(const WaferSpec& spec) {
  spec.validate();
  const WaferGeometry g(spec);
  const Levels lv = levels_for(spec.polarity);
  std::array<long, 3> counts{0, 0, 0};
  for (int k = 0; k <= spec.grid_rows; ++k) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      ++counts[static_cast<int>(
          draw_segment(spec, kHorizontalSegment, c, k, g.street_start_x(c) + spec.street_width_px, lv)
              .label)];
    }
  }
  for (int k = 0; k <= spec.grid_cols; ++k) {
    for (int r = 0; r < spec.grid_rows; ++r) {
      ++counts[static_cast<int>(
          draw_segment(spec, kVerticalSegment, k, r, g.street_start_y(r) + spec.street_width_px, lv)
              .label)];
    }
  }
  return counts;
}

}  // namespace wafer::synth
