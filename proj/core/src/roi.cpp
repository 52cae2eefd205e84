#include "wafer/roi.hpp"

#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "json.hpp"
#include "wafer/errors.hpp"

namespace wafer {

int canonical_rotation(Side side) {
  switch (side) {
    case Side::kSouth: return 0;
    case Side::kEast: return 90;
    case Side::kNorth: return 180;
    case Side::kWest: return 270;
  }
  return 0;
}

cv::Rect roi_rect(cv::Point2d center, Side side, double street_width_px, double chip_px) {
  const int length = static_cast<int>(std::lround(1.2 * chip_px));
  const int depth = static_cast<int>(std::lround(6.0 * street_width_px));
  // Distance from the crop edge nearer the chip to the street centerline.
  const double chip_part = 2.0 * depth / 3.0;
  const double outer_part = depth / 3.0;
  switch (side) {
    case Side::kSouth:
      return {static_cast<int>(std::lround(center.x - length / 2.0)),
              static_cast<int>(std::lround(center.y - chip_part)), length, depth};
    case Side::kNorth:
      return {static_cast<int>(std::lround(center.x - length / 2.0)),
              static_cast<int>(std::lround(center.y - outer_part)), length, depth};
    case Side::kEast:
      return {static_cast<int>(std::lround(center.x - chip_part)),
              static_cast<int>(std::lround(center.y - length / 2.0)), depth, length};
    case Side::kWest:
      return {static_cast<int>(std::lround(center.x - outer_part)),
              static_cast<int>(std::lround(center.y - length / 2.0)), depth, length};
  }
  return {};
}

StreetROI extract_roi(const cv::Mat& chip_image, cv::Point2d center, Side side,
                      double street_width_px, double chip_px) {
  if (!(street_width_px > 0.0) || !(chip_px > 0.0)) {
    throw ConfigError("extract_roi: street width and chip size must be positive");
  }
  StreetROI roi;
  roi.side = side;
  roi.fixation = center;
  roi.street_width_px = street_width_px;
  roi.rotation_deg = canonical_rotation(side);
  roi.crop = roi_rect(center, side, street_width_px, chip_px);
  const cv::Rect bounds(0, 0, chip_image.cols, chip_image.rows);
  roi.valid = roi.crop.width > 0 && roi.crop.height > 0 && (roi.crop & bounds) == roi.crop;
  if (!roi.valid) return roi;
  cv::Mat cut = chip_image(roi.crop);
  cv::Mat rotated;
  switch (roi.rotation_deg) {
    case 90: cv::rotate(cut, rotated, cv::ROTATE_90_CLOCKWISE); break;
    case 180: cv::rotate(cut, rotated, cv::ROTATE_180); break;
    case 270: cv::rotate(cut, rotated, cv::ROTATE_90_COUNTERCLOCKWISE); break;
    default: rotated = cut; break;
  }
  cv::resize(rotated, roi.canonical, cv::Size(kRoiWidth, kRoiHeight), 0, 0, cv::INTER_LINEAR);
  return roi;
}

cv::Mat contrast_normalize(const cv::Mat& image) {
  if (image.empty()) throw DataError("contrast_normalize: empty image");
  cv::Mat gray = image;
  if (image.channels() != 1) cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  cv::Mat d;
  gray.convertTo(d, CV_64F);
  cv::Scalar mean;
  cv::Scalar stddev;
  cv::meanStdDev(d, mean, stddev);
  cv::Mat out;
  if (!(stddev[0] > 1e-12)) {
    out = cv::Mat::zeros(d.size(), CV_32F);
    return out;
  }
  d = (d - mean[0]) / stddev[0];
  d.convertTo(out, CV_32F);
  return out;
}

PrecisionStats measure_precision(const std::vector<cv::Point2d>& fixations,
                                 const std::vector<cv::Point2d>& truth) {
  if (fixations.size() != truth.size()) throw DataError("measure_precision: size mismatch");
  PrecisionStats s;
  s.count = fixations.size();
  if (s.count == 0) return s;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < s.count; ++i) {
    const cv::Point2d d = fixations[i] - truth[i];
    s.deviations.push_back(d);
    sx += d.x;
    sy += d.y;
  }
  const double n = static_cast<double>(s.count);
  s.x.mean = sx / n;
  s.y.mean = sy / n;
  double vx = 0.0;
  double vy = 0.0;
  for (const auto& d : s.deviations) {
    vx += (d.x - s.x.mean) * (d.x - s.x.mean);
    vy += (d.y - s.y.mean) * (d.y - s.y.mean);
  }
  s.x.stddev = std::sqrt(vx / n);
  s.y.stddev = std::sqrt(vy / n);
  return s;
}

void write_precision_report(const std::filesystem::path& json_path,
                            const std::filesystem::path& histogram_csv, const PrecisionStats& stats,
                            int range) {
  nlohmann::ordered_json j;
  j["count"] = stats.count;
  j["mean_x"] = stats.x.mean;
  j["std_x"] = stats.x.stddev;
  j["mean_y"] = stats.y.mean;
  j["std_y"] = stats.y.stddev;
  if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
  std::ofstream(json_path) << j.dump(2) << '\n';

  const int bins = 2 * range + 1;
  std::vector<long> hx(static_cast<std::size_t>(bins), 0);
  std::vector<long> hy(static_cast<std::size_t>(bins), 0);
  auto bin = [&](double v) {
    return static_cast<std::size_t>(std::clamp(static_cast<int>(std::lround(v)), -range, range) + range);
  };
  for (const auto& d : stats.deviations) {
    ++hx[bin(d.x)];
    ++hy[bin(d.y)];
  }
  if (histogram_csv.has_parent_path()) std::filesystem::create_directories(histogram_csv.parent_path());
  std::ofstream csv(histogram_csv);
  csv << "deviation_px,count_x,count_y\n";
  for (int b = 0; b < bins; ++b) {
    csv << (b - range) << ',' << hx[static_cast<std::size_t>(b)] << ',' << hy[static_cast<std::size_t>(b)]
        << '\n';
  }
}

}  // namespace wafer
