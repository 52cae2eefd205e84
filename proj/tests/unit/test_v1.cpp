#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "oracles.hpp"
#include "wafer/errors.hpp"
#include "wafer/rng.hpp"
#include "wafer/v1.hpp"

using namespace wafer;

namespace {

int plane_index(const FeatureStack& s, double orientation, double wavelength) {
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    if (s.features[i].kind == FeatureKind::kEdge && s.features[i].orientation_deg == orientation &&
        s.features[i].wavelength == wavelength) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

// Odd Gabor written from its definition: carrier along the edge normal,
// envelope sigma = 0.5 wavelength, elongated along the edge by 1/aspect,
// scaled so the positive lobe sums to one.
oracle::Grid reference_gabor(double orientation_deg, double wavelength, double aspect = 0.5) {
  const double sigma = 0.5 * wavelength;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma / aspect));
  const double nx = std::cos((orientation_deg + 90.0) * std::numbers::pi / 180.0);
  const double ny = std::sin((orientation_deg + 90.0) * std::numbers::pi / 180.0);
  oracle::Grid k(2 * radius + 1, 2 * radius + 1);
  double pos = 0.0;
  for (int y = -radius; y <= radius; ++y) {
    for (int x = -radius; x <= radius; ++x) {
      const double u = x * nx + y * ny;
      const double v = -x * ny + y * nx;
      const double g = std::exp(-(u * u + aspect * aspect * v * v) / (2 * sigma * sigma)) *
                       std::sin(2 * std::numbers::pi * u / wavelength);
      k.at(x + radius, y + radius) = g;
      pos += g > 0 ? g : 0;
    }
  }
  for (double& g : k.v) g /= pos;
  return k;
}

cv::Mat step_image(int size, int edge_col) {
  cv::Mat img(size, size, CV_8UC1, cv::Scalar(40));
  img(cv::Rect(edge_col, 0, size - edge_col, size)).setTo(200);
  return img;
}

}  // namespace

TEST(V1Simple, ConstantImageGivesZeroPlanes) {
  const cv::Mat img(40, 40, CV_8UC1, cv::Scalar(128));
  const auto s = v1_simple(img, V1Params{});
  ASSERT_EQ(s.size(), 8u);
  for (const auto& p : s.planes) EXPECT_EQ(p.max(), 0.0);
}

TEST(V1Simple, VerticalEdgePeaksOnTheEdgeColumn) {
  const int edge = 16;
  const cv::Mat img = step_image(32, edge);
  V1Params params;
  const auto s = v1_simple(img, params);
  const int idx = plane_index(s, 90.0, 4.0);
  ASSERT_GE(idx, 0);
  const auto& plane = s.planes[static_cast<std::size_t>(idx)];

  // Brute-force response of the same model on the mean-removed image.
  oracle::Grid g(32, 32);
  double mean = 0.0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) mean += img.at<std::uint8_t>(y, x) / 255.0;
  }
  mean /= 32.0 * 32.0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) g.at(x, y) = img.at<std::uint8_t>(y, x) / 255.0 - mean;
  }
  auto ref = oracle::correlate_reflect(g, reference_gabor(90.0, 4.0));
  double ref_max = 0.0;
  for (double& v : ref.v) {
    v = std::abs(v);
    ref_max = std::max(ref_max, v);
  }
  int best_x = 0;
  double best = -1.0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      EXPECT_NEAR(plane.at(x, y), ref.at(x, y) / ref_max, 1e-4) << x << "," << y;
      if (plane.at(x, 16) > best) {
        best = plane.at(x, 16);
        best_x = x;
      }
    }
  }
  EXPECT_LE(std::abs(best_x - edge), 1);
}

TEST(V1Simple, EdgeOrientationSelectsThePlane) {
  // A bar rotated by 90 degrees moves the strongest response from the
  // horizontal to the vertical orientation plane.
  cv::Mat horiz(48, 48, CV_8UC1, cv::Scalar(60));
  horiz(cv::Rect(0, 22, 48, 4)).setTo(200);
  cv::Mat vert;
  cv::rotate(horiz, vert, cv::ROTATE_90_CLOCKWISE);
  auto strongest = [](const cv::Mat& img) {
    V1Params params;
    params.wavelengths = {4.0};
    const auto s = v1_simple(img, params);
    // Compare raw energy at the image center row/column band.
    std::vector<double> energy(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (int y = 12; y < 36; ++y) {
        for (int x = 12; x < 36; ++x) energy[i] += s.planes[i].at(x, y);
      }
    }
    return s.features[static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) -
                                                energy.begin())]
        .orientation_deg;
  };
  EXPECT_EQ(strongest(horiz), 0.0);
  EXPECT_EQ(strongest(vert), 90.0);
}

TEST(V1Simple, GrayInputGivesZeroOpponency) {
  cv::Mat gray = step_image(32, 10);
  cv::Mat bgr;
  cv::cvtColor(gray, bgr, cv::COLOR_GRAY2BGR);
  V1Params params;
  params.color_enabled = true;
  const auto s = v1_simple(bgr, params);
  ASSERT_EQ(s.size(), 10u);
  EXPECT_EQ(s.features[8].kind, FeatureKind::kRedGreen);
  EXPECT_EQ(s.features[9].kind, FeatureKind::kBlueYellow);
  EXPECT_EQ(s.planes[8].max(), 0.0);
  EXPECT_EQ(s.planes[9].max(), 0.0);
  EXPECT_GT(s.planes[plane_index(s, 90.0, 4.0)].max(), 0.0);
}

TEST(V1Simple, ColorContrastActivatesOpponency) {
  cv::Mat img(32, 32, CV_8UC3, cv::Scalar(0, 0, 0));
  img(cv::Rect(0, 0, 16, 32)).setTo(cv::Scalar(0, 0, 255));  // red left half
  img(cv::Rect(16, 0, 16, 32)).setTo(cv::Scalar(0, 255, 0)); // green right half
  V1Params params;
  params.color_enabled = true;
  const auto s = v1_simple(img, params);
  EXPECT_DOUBLE_EQ(s.planes[8].max(), 1.0);
}

TEST(V1Simple, ActivitiesAreUnitNormalized) {
  Rng rng(5);
  cv::Mat img(50, 70, CV_8UC1);
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) img.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
  }
  const auto s = v1_simple(img, V1Params{});
  double top = 0.0;
  for (const auto& p : s.planes) {
    EXPECT_GE(p.min(), 0.0);
    EXPECT_LE(p.max(), 1.0);
    top = std::max(top, p.max());
  }
  EXPECT_DOUBLE_EQ(top, 1.0);
}

TEST(V1Simple, TooSmallImageIsADataError) {
  EXPECT_THROW(v1_simple(cv::Mat(15, 40, CV_8UC1, cv::Scalar(0)), V1Params{}), DataError);
}

TEST(V1Params, PoolFactorIsFixed) {
  V1Params p;
  p.pool_factor = 8;
  EXPECT_THROW(p.validate(), ConfigError);
}

namespace {

FeatureStack single_plane(const ImagePlane& p) {
  FeatureStack s;
  s.planes.push_back(p);
  s.features.push_back({});
  return s;
}

}  // namespace

TEST(V1Pool, ShapeIsOneTenth) {
  const auto out = v1_pool(single_plane(ImagePlane(100, 100)), 10);
  EXPECT_EQ(out.width(), 10);
  EXPECT_EQ(out.height(), 10);
  EXPECT_EQ(out.resolution, Resolution::kPool);
}

TEST(V1Pool, SingleActivePixelLandsInItsBlock) {
  ImagePlane p(100, 100);
  p.at(37, 52) = 0.8;
  const auto out = v1_pool(single_plane(p), 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) EXPECT_EQ(out.planes[0].at(x, y), (x == 3 && y == 5) ? 0.8 : 0.0);
  }
}

TEST(V1Pool, MatchesBlockMaxOracleAndShiftsByOneCell) {
  Rng rng(9);
  ImagePlane p(120, 80);
  for (double& v : p.values()) v = uniform(rng, 0.0, 1.0);
  oracle::Grid g(120, 80);
  for (int y = 0; y < 80; ++y) {
    for (int x = 0; x < 120; ++x) g.at(x, y) = p.at(x, y);
  }
  const auto ref = oracle::block_max(g, 10);
  const auto out = v1_pool(single_plane(p), 10);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 12; ++x) EXPECT_EQ(out.planes[0].at(x, y), ref.at(x, y));
  }

  ImagePlane shifted(120, 80);
  for (int y = 0; y < 80; ++y) {
    for (int x = 10; x < 120; ++x) shifted.at(x, y) = p.at(x - 10, y);
  }
  const auto moved = v1_pool(single_plane(shifted), 10);
  for (int y = 0; y < 8; ++y) {
    for (int x = 1; x < 12; ++x) EXPECT_EQ(moved.planes[0].at(x, y), out.planes[0].at(x - 1, y));
  }
}

TEST(V1Pool, PadsUnevenPlanesByReflection) {
  ImagePlane p(95, 101);
  p.at(94, 100) = 1.0;
  const auto out = v1_pool(single_plane(p), 10);
  EXPECT_EQ(out.width(), 10);
  EXPECT_EQ(out.height(), 11);
  EXPECT_EQ(out.pad_x, 5);
  EXPECT_EQ(out.pad_y, 9);
  EXPECT_EQ(out.planes[0].at(9, 10), 1.0);
}
