#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

namespace wafer {

// A 2-D scalar grid, row-major. Used for every neural activity map
// (V1, HVA, FEF, IOR, external attention).
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int width, int height, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y) { return data_[index(x, y)]; }
  double at(int x, int y) const { return data_[index(x, y)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double max() const;
  double min() const;
  bool same_shape(const ImagePlane& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  // Divides by the maximum if it exceeds `floor`; otherwise leaves the plane
  // untouched. Returns the divisor used (1 when skipped).
  double normalize_max(double floor = 1e-8);

  bool operator==(const ImagePlane&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Conversions between OpenCV matrices and planes. 8-bit images map to [0,1].
ImagePlane plane_from_mat(const cv::Mat& mat);
cv::Mat mat_from_plane(const ImagePlane& plane);

// Lossless 8-bit grayscale image I/O (PNG). Throws DataError on failure.
cv::Mat read_gray(const std::filesystem::path& path);
cv::Mat read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const cv::Mat& image);

}  // namespace wafer
