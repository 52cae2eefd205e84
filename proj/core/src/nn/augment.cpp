#include "wafer/nn/augment.hpp"

#include <opencv2/imgproc.hpp>

#include "wafer/errors.hpp"

namespace wafer::nn {

void AugmentSpec::validate() const {
  if (rotation_deg < 0 || scale < 0 || scale >= 1 || translate_x < 0 || translate_y < 0) {
    throw ConfigError("augmentation ranges must be non-negative (scale below 1)");
  }
}

AugmentDraw draw_augmentation(const AugmentSpec& spec, int width, int height, Rng& rng) {
  spec.validate();
  AugmentDraw d;
  d.rotation_deg = uniform(rng, -spec.rotation_deg, spec.rotation_deg);
  d.scale = 1.0 + uniform(rng, -spec.scale, spec.scale);
  d.shift_x = uniform(rng, -spec.translate_x, spec.translate_x) * width;
  d.shift_y = uniform(rng, -spec.translate_y, spec.translate_y) * height;
  d.flip_x = spec.flip_x && uniform(rng, 0.0, 1.0) < 0.5;
  d.flip_y = spec.flip_y && uniform(rng, 0.0, 1.0) < 0.5;
  return d;
}

cv::Mat apply_augmentation(const cv::Mat& image, const AugmentDraw& d) {
  cv::Mat img = image.clone();
  if (d.flip_x && d.flip_y) {
    cv::flip(img, img, -1);
  } else if (d.flip_x) {
    cv::flip(img, img, 1);
  } else if (d.flip_y) {
    cv::flip(img, img, 0);
  }
  if (d.rotation_deg == 0.0 && d.scale == 1.0 && d.shift_x == 0.0 && d.shift_y == 0.0) return img;
  const cv::Point2f center(static_cast<float>((img.cols - 1) / 2.0), static_cast<float>((img.rows - 1) / 2.0));
  cv::Mat m = cv::getRotationMatrix2D(center, d.rotation_deg, d.scale);
  m.at<double>(0, 2) += d.shift_x;
  m.at<double>(1, 2) += d.shift_y;
  cv::Mat out;
  cv::warpAffine(img, out, m, img.size(), cv::INTER_LINEAR, cv::BORDER_REFLECT_101);
  return out;
}

cv::Mat augment(const cv::Mat& image, const AugmentSpec& spec, Rng& rng) {
  return apply_augmentation(image, draw_augmentation(spec, image.cols, image.rows, rng));
}

}  // namespace wafer::nn
