#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/image.hpp"
#include "wafer/tensor_io.hpp"

namespace wafer {

struct V1Params {
  int n_orientations = 4;                  // edge orientations spread over 180 degrees
  std::vector<double> wavelengths{4.0, 8.0};  // carrier wavelength in pixels
  double sigma_per_wavelength = 0.5;       // envelope sigma = factor * wavelength
  double aspect = 0.5;                     // envelope aspect ratio along the edge
  int pool_factor = 10;
  bool color_enabled = false;

  void validate() const;  // throws ConfigError
};

enum class FeatureKind { kEdge, kRedGreen, kBlueYellow };
enum class Resolution { kSimple, kPool };

struct FeatureDescriptor {
  FeatureKind kind = FeatureKind::kEdge;
  double orientation_deg = 0.0;  // edge orientation: 0 horizontal, 90 vertical
  double wavelength = 0.0;

  bool operator==(const FeatureDescriptor&) const = default;
};

struct FeatureStack {
  std::vector<ImagePlane> planes;
  std::vector<FeatureDescriptor> features;
  Resolution resolution = Resolution::kSimple;
  // Reflect padding added before pooling (right and bottom), in simple pixels.
  int pad_x = 0;
  int pad_y = 0;

  int width() const { return planes.empty() ? 0 : planes.front().width(); }
  int height() const { return planes.empty() ? 0 : planes.front().height(); }
  std::size_t size() const { return planes.size(); }
};

// Odd-phase Gabor kernel (correlation form) for an edge orientation.
// The carrier runs along the edge normal; the envelope is elongated along
// the edge by 1/aspect.
cv::Mat gabor_kernel(const V1Params& params, double orientation_deg, double wavelength);

// Rectified Gabor responses, one plane per orientation and wavelength, plus
// red-green and blue-yellow opponency planes when color is enabled. Each
// group (edges, colors) is max-normalized to [0,1] with one common scale.
// Borders are mirrored. Throws DataError if the image is smaller than 16
// pixels on a side.
FeatureStack v1_simple(const cv::Mat& image, const V1Params& params);

// Max over aligned factor x factor blocks. Planes whose size is not a
// multiple of the factor are mirror-padded on the right and bottom first.
FeatureStack v1_pool(const FeatureStack& simple, int factor = 10);

// Stacks all planes into a [planes, height, width] tensor.
Tensor stack_to_tensor(const FeatureStack& stack);
Tensor plane_to_tensor(const ImagePlane& plane);

}  // namespace wafer
