#include "wafer/image.hpp"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "wafer/errors.hpp"

namespace wafer {

ImagePlane::ImagePlane(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ConfigError("ImagePlane: negative size");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

double ImagePlane::max() const {
  if (data_.empty()) return 0.0;
  return *std::max_element(data_.begin(), data_.end());
}

double ImagePlane::min() const {
  if (data_.empty()) return 0.0;
  return *std::min_element(data_.begin(), data_.end());
}

double ImagePlane::normalize_max(double floor) {
  const double m = max();
  if (!(m > floor)) return 1.0;
  const double inv = 1.0 / m;
  for (double& v : data_) v *= inv;
  return m;
}

ImagePlane plane_from_mat(const cv::Mat& mat) {
  if (mat.empty()) throw DataError("plane_from_mat: empty image");
  cv::Mat gray = mat;
  if (mat.channels() == 3) {
    cv::cvtColor(mat, gray, cv::COLOR_BGR2GRAY);
  } else if (mat.channels() != 1) {
    throw DataError("plane_from_mat: expected 1 or 3 channels");
  }
  cv::Mat f;
  const double scale = gray.depth() == CV_8U ? 1.0 / 255.0 : 1.0;
  gray.convertTo(f, CV_32F, scale);
  ImagePlane plane(f.cols, f.rows);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    std::copy(row, row + f.cols, plane.values().begin() + static_cast<std::ptrdiff_t>(y) * f.cols);
  }
  return plane;
}

cv::Mat mat_from_plane(const ImagePlane& plane) {
  cv::Mat out(plane.height(), plane.width(), CV_32F);
  for (int y = 0; y < plane.height(); ++y) {
    float* row = out.ptr<float>(y);
    for (int x = 0; x < plane.width(); ++x) row[x] = plane.at(x, y);
  }
  return out;
}

cv::Mat read_gray(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) throw DataError("cannot read image: " + path.string());
  return img;
}

cv::Mat read_image(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw DataError("cannot read image: " + path.string());
  if (img.depth() != CV_8U) throw DataError("expected 8-bit image: " + path.string());
  return img;
}

void write_png(const std::filesystem::path& path, const cv::Mat& image) {
  if (image.empty() || image.depth() != CV_8U) {
    throw DataError("write_png: expected non-empty 8-bit image for " + path.string());
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Fixed compression settings keep files byte-identical across runs.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6, cv::IMWRITE_PNG_STRATEGY,
                                cv::IMWRITE_PNG_STRATEGY_DEFAULT};
  if (!cv::imwrite(path.string(), image, params)) {
    throw DataError("cannot write image: " + path.string());
  }
}

}  // namespace wafer
