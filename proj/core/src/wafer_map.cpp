#include <algorithm>
#include <string>

#include <opencv2/imgproc.hpp>

#include "wafer/pipeline.hpp"

namespace wafer {
namespace {

constexpr int kMarginLeft = 28;
constexpr int kMarginTop = 20;
constexpr int kLegendHeight = 40;

const cv::Scalar kBackground(255, 255, 255);
const cv::Scalar kGood(80, 180, 80);
const cv::Scalar kAnomaly(60, 220, 240);
const cv::Scalar kFaulty(60, 60, 220);
const cv::Scalar kBorder(170, 170, 170);
const cv::Scalar kMissing(40, 40, 40);
const cv::Scalar kText(0, 0, 0);

cv::Scalar class_color(int street_class) {
  switch (street_class) {
    case 1: return kAnomaly;
    case 2: return kFaulty;
    default: return kGood;
  }
}

cv::Scalar chip_color(const ChipVerdict& v, MapSource source) {
  if (source == MapSource::kTruth) return v.truth_border ? kBorder : class_color(v.truth_label);
  if (v.predicted_border) return kBorder;
  if (v.predicted_faulty()) return kFaulty;
  for (const auto& s : v.streets) {
    if (s.predicted_raw == 1 && s.predicted == 0) return kAnomaly;
  }
  return kGood;
}

// Street bar on the chip edge facing `side`.
cv::Rect edge_bar(const cv::Rect& cell, Side side, int thick) {
  switch (side) {
    case Side::kNorth: return {cell.x, cell.y, cell.width, thick};
    case Side::kSouth: return {cell.x, cell.y + cell.height - thick, cell.width, thick};
    case Side::kWest: return {cell.x, cell.y, thick, cell.height};
    case Side::kEast: return {cell.x + cell.width - thick, cell.y, thick, cell.height};
  }
  return cell;
}

void put(cv::Mat& img, const std::string& text, cv::Point at, double scale = 0.35) {
  cv::putText(img, text, at, cv::FONT_HERSHEY_SIMPLEX, scale, kText, 1, cv::LINE_8);
}

}  // namespace

cv::Rect MapLayout::cell(int col, int row) const {
  return {origin_x + col * cell_px, origin_y + row * cell_px, cell_px, cell_px};
}

MapLayout wafer_map_layout(const std::vector<ChipVerdict>& chips, int cell_px) {
  MapLayout l;
  l.cell_px = std::max(cell_px, 8);
  l.origin_x = kMarginLeft;
  l.origin_y = kMarginTop;
  for (const auto& c : chips) {
    l.cols = std::max(l.cols, c.col + 1);
    l.rows = std::max(l.rows, c.row + 1);
  }
  return l;
}

cv::Mat render_wafer_map(const std::vector<ChipVerdict>& chips, MapSource source, int cell_px) {
  const MapLayout l = wafer_map_layout(chips, cell_px);
  const int width = std::max(l.origin_x + l.cols * l.cell_px + 8, 360);
  const int height = l.origin_y + l.rows * l.cell_px + kLegendHeight;
  cv::Mat img(height, width, CV_8UC3, kBackground);

  for (int c = 0; c < l.cols; ++c) {
    const cv::Rect r = l.cell(c, 0);
    put(img, std::to_string(c), {r.x + 2, l.origin_y - 6});
  }
  for (int r = 0; r < l.rows; ++r) {
    const cv::Rect cell = l.cell(0, r);
    put(img, std::to_string(r), {4, cell.y + cell.height / 2 + 4});
  }

  const int thick = std::max(2, l.cell_px / 8);
  for (const auto& v : chips) {
    const cv::Rect cell = l.cell(v.col, v.row);
    const cv::Rect inner(cell.x + 1, cell.y + 1, cell.width - 2, cell.height - 2);
    cv::rectangle(img, inner, chip_color(v, source), cv::FILLED);
    const bool inside = source == MapSource::kTruth ? !v.truth_border : !v.predicted_border;
    if (inside) {
      for (const auto& s : v.streets) {
        cv::Scalar color;
        if (source == MapSource::kTruth) {
          color = class_color(s.truth);
        } else if (!s.found) {
          color = kMissing;
        } else {
          color = s.predicted ? kFaulty : (s.predicted_raw == 1 ? kAnomaly : kGood);
        }
        cv::rectangle(img, edge_bar(inner, s.side, thick), color * 0.7, cv::FILLED);
      }
    }
    cv::rectangle(img, inner, cv::Scalar(0, 0, 0), 1);
  }

  const int ly = l.origin_y + l.rows * l.cell_px + 12;
  const std::pair<cv::Scalar, const char*> legend[] = {
      {kGood, "good"}, {kAnomaly, "anomaly"}, {kFaulty, "faulty"}, {kBorder, "border"}, {kMissing, "not found"}};
  int x = 6;
  for (const auto& [color, name] : legend) {
    cv::rectangle(img, cv::Rect(x, ly, 12, 12), color, cv::FILLED);
    put(img, name, {x + 16, ly + 10});
    int baseline = 0;
    x += 16 + cv::getTextSize(name, cv::FONT_HERSHEY_SIMPLEX, 0.35, 1, &baseline).width + 10;
  }
  put(img, source == MapSource::kTruth ? "ground truth" : "prediction", {6, ly + 26});
  return img;
}

}  // namespace wafer
