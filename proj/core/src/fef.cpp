#include "wafer/fef.hpp"

#include <cmath>

#include <opencv2/imgproc.hpp>

#include "wafer/errors.hpp"

namespace wafer {

void FEFParams::validate() const {
  if (!(tau > 0.0)) throw ConfigError("fef: tau must be positive");
  if (!(dt > 0.0)) throw ConfigError("fef: dt must be positive");
  if (!(theta_sel > 0.0 && theta_sel <= 1.0)) throw ConfigError("fef: theta_sel must lie in (0,1]");
  if (n_steps_max < 1) throw ConfigError("fef: n_steps_max must be positive");
  if (!(gamma > 0.0) || !(q_gain > 0.0)) throw ConfigError("fef: gamma and q_gain must be positive");
}

AttentionContext::AttentionContext(int width, int height, const IORParams& params)
    : external(width, height, 0.0),
      ior(width, height, static_cast<double>(params.initial)),
      ior_params(params) {}

void AttentionContext::set_external(const ImagePlane& map) {
  if (!map.same_shape(ior)) throw DataError("external attention map shape mismatch");
  external = map;
  for (double& v : external.values()) v = std::clamp(v, -0.25, 0.25);
}

ImagePlane gaussian_blob(double cx, double cy, double amplitude, double sigma_x, double sigma_y,
                         int width, int height) {
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw ConfigError("gaussian_blob: sigma must be positive");
  ImagePlane g(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      g.at(x, y) = static_cast<double>(
          amplitude * std::exp(-(dx * dx / (2.0 * sigma_x * sigma_x) + dy * dy / (2.0 * sigma_y * sigma_y))));
    }
  }
  return g;
}

ImagePlane fef_drive(const ImagePlane& hva_max, const AttentionContext& ctx) {
  if (!hva_max.same_shape(ctx.ior) || !hva_max.same_shape(ctx.external)) {
    throw DataError("fef_drive: shape mismatch");
  }
  ImagePlane f(hva_max.width(), hva_max.height());
  auto e = hva_max.values();
  auto a = ctx.external.values();
  auto r = ctx.ior.values();
  auto out = f.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double factor = 1.0 + 2.0 * std::min(a[i], r[i]);
    out[i] = std::clamp(e[i] * factor, 0.0, 1.0);
  }
  return f;
}

ImagePlane fef_input(const ImagePlane& drive, const FEFParams& params) {
  ImagePlane q = drive;
  for (double& v : q.values()) v = std::pow(v, params.q_gain);
  q.normalize_max();
  for (double& v : q.values()) v = std::pow(v, params.gamma);
  return q;
}

double fef_step(ImagePlane& activity, const ImagePlane& input, const FEFParams& params) {
  if (!activity.same_shape(input)) throw DataError("fef_step: shape mismatch");
  const double k = params.dt / params.tau;
  double change = 0.0;
  auto r = activity.values();
  auto e = input.values();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double next = std::clamp(r[i] + k * (-r[i] + e[i]), 0.0, 1.0);
    change = std::max(change, std::abs(next - r[i]));
    r[i] = static_cast<double>(next);
  }
  return change;
}

std::pair<Peak, Peak> top_two_peaks(const ImagePlane& activity, int neighbor_radius) {
  Peak top{0, 0, -1.0};
  for (int y = 0; y < activity.height(); ++y) {
    for (int x = 0; x < activity.width(); ++x) {
      if (activity.at(x, y) > top.value) top = {x, y, activity.at(x, y)};
    }
  }
  Peak second{0, 0, 0.0};
  for (int y = 0; y < activity.height(); ++y) {
    for (int x = 0; x < activity.width(); ++x) {
      if (std::max(std::abs(x - top.x), std::abs(y - top.y)) <= neighbor_radius) continue;
      if (activity.at(x, y) > second.value) second = {x, y, activity.at(x, y)};
    }
  }
  return {top, second};
}

std::optional<Peak> fef_movement(const ImagePlane& activity, const FEFParams& params) {
  if (activity.empty()) return std::nullopt;
  const auto [top, second] = top_two_peaks(activity, params.neighbor_radius);
  if (top.value > params.theta_sel && second.value < params.second_peak_ratio * top.value) return top;
  return std::nullopt;
}

cv::Point2d refine_peak(const ImagePlane& activity, const Peak& peak) {
  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = peak.x + dx;
      const int y = peak.y + dy;
      if (x < 0 || y < 0 || x >= activity.width() || y >= activity.height()) continue;
      const double w = activity.at(x, y);
      sw += w;
      sx += w * (x + 0.5);
      sy += w * (y + 0.5);
    }
  }
  if (!(sw > 0.0)) return {peak.x + 0.5, peak.y + 0.5};
  return {sx / sw, sy / sw};
}

void apply_ior(AttentionContext& ctx, int x, int y) {
  const double sx = ctx.width() * ctx.ior_params.sigma_fraction;
  const double sy = ctx.height() * ctx.ior_params.sigma_fraction;
  const ImagePlane g = gaussian_blob(x, y, 1.0, sx, sy, ctx.width(), ctx.height());
  auto r = ctx.ior.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = static_cast<double>(r[i] - ctx.ior_params.strength * gv[i]);
  }
}

ImagePlane central_suppression(int width, int height, double box, double level) {
  ImagePlane m(width, height);
  const double lo = 0.5 - box / 2.0;
  const double hi = 0.5 + box / 2.0;
  for (int y = 0; y < height; ++y) {
    const double ny = (y + 0.5) / height;
    for (int x = 0; x < width; ++x) {
      const double nx = (x + 0.5) / width;
      if (nx > lo && nx < hi && ny > lo && ny < hi) m.at(x, y) = static_cast<double>(level);
    }
  }
  return m;
}

ImagePlane load_external_map(const std::filesystem::path& path, int width, int height) {
  cv::Mat img = read_gray(path);
  cv::Mat small;
  cv::resize(img, small, cv::Size(width, height), 0, 0, cv::INTER_AREA);
  ImagePlane m(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      m.at(x, y) = static_cast<double>(small.at<std::uint8_t>(y, x) / 255.0 * 0.5 - 0.25);
    }
  }
  return m;
}

}  // namespace wafer
