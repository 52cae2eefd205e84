#include "wafer/v1.hpp"

#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "wafer/errors.hpp"

namespace wafer {
namespace {

ImagePlane plane_from_float(const cv::Mat& m) {
  ImagePlane p(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const float* row = m.ptr<float>(y);
    for (int x = 0; x < m.cols; ++x) p.at(x, y) = row[x];
  }
  return p;
}

ImagePlane abs_plane(const cv::Mat& m) {
  ImagePlane p = plane_from_float(m);
  for (double& v : p.values()) v = std::abs(v);
  return p;
}

// One common scale for a group of planes keeps their relative strength.
void normalize_jointly(std::vector<ImagePlane>& planes, std::size_t begin, std::size_t end) {
  double m = 0.0;
  for (std::size_t i = begin; i < end; ++i) m = std::max(m, planes[i].max());
  if (!(m > 1e-8)) return;
  for (std::size_t i = begin; i < end; ++i) {
    for (double& v : planes[i].values()) v /= m;
  }
}

int reflect(int i, int n) {
  // Mirror without repeating the edge sample: -1 -> 1, n -> n - 2.
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

void V1Params::validate() const {
  if (n_orientations < 1) throw ConfigError("v1: n_orientations must be positive");
  if (wavelengths.empty()) throw ConfigError("v1: at least one wavelength required");
  for (double w : wavelengths) {
    if (!(w >= 2.0)) throw ConfigError("v1: wavelengths must be >= 2 pixels");
  }
  if (!(sigma_per_wavelength > 0.0)) throw ConfigError("v1: sigma factor must be positive");
  if (!(aspect > 0.0)) throw ConfigError("v1: aspect must be positive");
  if (pool_factor != 10) throw ConfigError("v1: pool_factor is fixed at 10");
}

cv::Mat gabor_kernel(const V1Params& params, double orientation_deg, double wavelength) {
  const double sigma = params.sigma_per_wavelength * wavelength;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma / std::min(1.0, params.aspect)));
  const double normal = (orientation_deg + 90.0) * std::numbers::pi / 180.0;
  const double c = std::cos(normal);
  const double s = std::sin(normal);
  cv::Mat k(2 * radius + 1, 2 * radius + 1, CV_32F);
  double positive = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double across = dx * c + dy * s;
      const double along = -dx * s + dy * c;
      const double env = std::exp(-(across * across + params.aspect * params.aspect * along * along) /
                                  (2.0 * sigma * sigma));
      const double v = env * std::sin(2.0 * std::numbers::pi * across / wavelength);
      k.at<float>(dy + radius, dx + radius) = static_cast<float>(v);
      if (v > 0) positive += v;
    }
  }
  if (positive > 0) k /= positive;
  return k;
}

FeatureStack v1_simple(const cv::Mat& image, const V1Params& params) {
  params.validate();
  if (image.empty() || image.cols < 16 || image.rows < 16) {
    throw DataError("v1: image must be at least 16x16");
  }
  if (image.channels() != 1 && image.channels() != 3) {
    throw DataError("v1: expected 1 or 3 channels");
  }
  const double scale = image.depth() == CV_8U ? 1.0 / 255.0 : 1.0;
  cv::Mat gray;
  cv::Mat color;
  if (image.channels() == 3) {
    image.convertTo(color, CV_32FC3, scale);
    cv::cvtColor(color, gray, cv::COLOR_BGR2GRAY);
  } else {
    image.convertTo(gray, CV_32F, scale);
  }
  gray -= cv::mean(gray)[0];

  FeatureStack out;
  out.resolution = Resolution::kSimple;
  for (double wavelength : params.wavelengths) {
    for (int o = 0; o < params.n_orientations; ++o) {
      const double deg = 180.0 * o / params.n_orientations;
      cv::Mat response;
      cv::filter2D(gray, response, CV_32F, gabor_kernel(params, deg, wavelength), cv::Point(-1, -1),
                   0.0, cv::BORDER_REFLECT_101);
      out.planes.push_back(abs_plane(response));
      out.features.push_back({FeatureKind::kEdge, deg, wavelength});
    }
  }
  normalize_jointly(out.planes, 0, out.planes.size());
  if (params.color_enabled) {
    cv::Mat rg(gray.size(), CV_32F, cv::Scalar(0));
    cv::Mat by(gray.size(), CV_32F, cv::Scalar(0));
    if (!color.empty()) {
      std::vector<cv::Mat> bgr;
      cv::split(color, bgr);
      rg = bgr[2] - bgr[1];
      by = bgr[0] - 0.5 * (bgr[2] + bgr[1]);
    }
    out.planes.push_back(abs_plane(rg));
    out.features.push_back({FeatureKind::kRedGreen, 0.0, 0.0});
    out.planes.push_back(abs_plane(by));
    out.features.push_back({FeatureKind::kBlueYellow, 0.0, 0.0});
    normalize_jointly(out.planes, out.planes.size() - 2, out.planes.size());
  }
  return out;
}

FeatureStack v1_pool(const FeatureStack& simple, int factor) {
  if (factor < 1) throw ConfigError("v1_pool: factor must be positive");
  FeatureStack out;
  out.resolution = Resolution::kPool;
  out.features = simple.features;
  if (simple.planes.empty()) return out;
  const int w = simple.width();
  const int h = simple.height();
  const int pw = (w + factor - 1) / factor;
  const int ph = (h + factor - 1) / factor;
  out.pad_x = pw * factor - w;
  out.pad_y = ph * factor - h;
  for (const auto& plane : simple.planes) {
    if (!plane.same_shape(simple.planes.front())) throw DataError("v1_pool: plane shape mismatch");
    ImagePlane pooled(pw, ph);
    for (int cy = 0; cy < ph; ++cy) {
      for (int cx = 0; cx < pw; ++cx) {
        double m = 0.0;
        for (int y = cy * factor; y < (cy + 1) * factor; ++y) {
          const int sy = reflect(y, h);
          for (int x = cx * factor; x < (cx + 1) * factor; ++x) {
            m = std::max(m, plane.at(reflect(x, w), sy));
          }
        }
        pooled.at(cx, cy) = m;
      }
    }
    out.planes.push_back(std::move(pooled));
  }
  return out;
}

Tensor plane_to_tensor(const ImagePlane& plane) {
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(plane.height()), static_cast<std::uint32_t>(plane.width())};
  t.data.assign(plane.values().begin(), plane.values().end());
  return t;
}

Tensor stack_to_tensor(const FeatureStack& stack) {
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(stack.size()), static_cast<std::uint32_t>(stack.height()),
             static_cast<std::uint32_t>(stack.width())};
  for (const auto& p : stack.planes) t.data.insert(t.data.end(), p.values().begin(), p.values().end());
  return t;
}

}  // namespace wafer
