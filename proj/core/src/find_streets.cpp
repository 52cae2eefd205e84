#include "wafer/attention.hpp"

#include <cmath>

#include <opencv2/imgproc.hpp>

#include "wafer/errors.hpp"
#include "wafer/roi.hpp"
#include "wafer/tensor_io.hpp"
#include "wafer/v1.hpp"

namespace wafer {
namespace {

void dump(const std::filesystem::path* dir, int saccade, const std::string& name, const Tensor& t) {
  if (!dir) return;
  std::filesystem::create_directories(*dir);
  write_tensor_file(*dir / ("s" + std::to_string(saccade) + "_" + name + ".wtns"), t);
}

Tensor planes_to_tensor(const std::vector<ImagePlane>& planes) {
  FeatureStack s;
  s.planes = planes;
  return stack_to_tensor(s);
}

}  // namespace

int SaccadePlan::valid_count() const {
  int n = 0;
  for (const auto& f : fixations) n += f.valid ? 1 : 0;
  return n;
}

const Fixation* SaccadePlan::on_side(Side side) const {
  for (const auto& f : fixations) {
    if (f.valid && f.side == side) return &f;
  }
  return nullptr;
}

AttentionContext make_context(const AttentionParams& params, const ImagePlane* external) {
  const int grid = kCanonicalPx / 10;
  AttentionContext ctx(grid, grid, params.ior);
  if (external) ctx.set_external(*external);
  return ctx;
}

Side nearest_side(cv::Point2d p) {
  const double d[4] = {p.y, 1.0 - p.x, 1.0 - p.y, p.x};  // N, E, S, W
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (d[i] < d[best]) best = i;
  }
  return static_cast<Side>(best);
}

bool in_center_box(cv::Point2d p, const AttentionParams& params) {
  return p.x > params.center_box_lo && p.x < params.center_box_hi && p.y > params.center_box_lo &&
         p.y < params.center_box_hi;
}

double estimate_chip_px(const cv::Mat& chip_image) {
  return std::min(chip_image.cols, chip_image.rows) / 1.25;
}

SaccadePlan find_streets(const cv::Mat& chip_image, const TemplateBank& bank, double chip_px,
                         const AttentionParams& params, const ImagePlane* external,
                         const std::filesystem::path* dump_dir) {
  if (chip_image.empty()) throw DataError("find_streets: empty chip image");
  if (bank.templates.empty()) throw ConfigError("find_streets: empty template bank");
  SaccadePlan plan;
  plan.image_width = chip_image.cols;
  plan.image_height = chip_image.rows;

  cv::Mat canonical;
  cv::resize(chip_image, canonical, cv::Size(kCanonicalPx, kCanonicalPx), 0, 0, cv::INTER_AREA);
  const FeatureStack pooled = v1_pool(v1_simple(canonical, bank.v1), bank.v1.pool_factor);
  const std::vector<ImagePlane> correlation = hva_correlate(pooled, bank);
  AttentionContext ctx = make_context(params, external);
  if (pooled.width() != ctx.width() || pooled.height() != ctx.height()) {
    throw DataError("find_streets: V1 pool grid does not match the FEF grid");
  }
  if (dump_dir) {
    dump(dump_dir, 0, "v1_pool", stack_to_tensor(pooled));
    dump(dump_dir, 0, "external", plane_to_tensor(ctx.external));
  }
  const double scale_x = static_cast<double>(chip_image.cols) / kCanonicalPx;
  const double scale_y = static_cast<double>(chip_image.rows) / kCanonicalPx;

  for (int s = 0; s < params.n_saccades; ++s) {
    std::vector<ImagePlane> last_pool;
    auto hva_max_of = [&](const ImagePlane& feedback) {
      auto layer4 = hva_modulate(correlation, params.pfc_gain, &feedback, params.gains);
      normalize_stack(layer4);
      last_pool = hva_pool23(layer4, params.pool);
      return max_over_planes(last_pool);
    };
    SelectionResult sel = run_to_selection(hva_max_of, ctx, params.fef);
    if (dump_dir) {
      dump(dump_dir, s, "hva23", planes_to_tensor(last_pool));
      dump(dump_dir, s, "fef_drive", plane_to_tensor(fef_drive(max_over_planes(last_pool), ctx)));
      dump(dump_dir, s, "fef_activity", plane_to_tensor(sel.activity));
      dump(dump_dir, s, "ior", plane_to_tensor(ctx.ior));
    }
    if (!sel.peak) {
      plan.diagnostic = "saccade " + std::to_string(s + 1) + ": " + sel.diagnostic;
      break;
    }
    const Peak peak = *sel.peak;
    const cv::Point2d cell = refine_peak(sel.activity, peak);
    Fixation f;
    f.cell_x = peak.x;
    f.cell_y = peak.y;
    f.peak = peak.value;
    f.steps = sel.steps;
    f.normalized = {cell.x / ctx.width(), cell.y / ctx.height()};
    f.pixel = {f.normalized.x * chip_image.cols, f.normalized.y * chip_image.rows};
    double best = -1.0;
    for (std::size_t t = 0; t < last_pool.size(); ++t) {
      if (last_pool[t].at(peak.x, peak.y) > best) {
        best = last_pool[t].at(peak.x, peak.y);
        f.template_index = static_cast<int>(t);
      }
    }
    const auto& meta = bank.templates[static_cast<std::size_t>(f.template_index)].meta;
    f.street_width_px = meta.width_px() * 0.5 * (scale_x + scale_y);
    f.side = nearest_side(f.normalized);

    const bool central = in_center_box(f.normalized, params);
    const cv::Rect r = roi_rect(f.pixel, f.side, f.street_width_px, chip_px);
    const cv::Rect bounds(0, 0, chip_image.cols, chip_image.rows);
    if (central) {
      f.reason = "center";
    } else if ((r & bounds) != r) {
      f.reason = "roi out of bounds";
    } else if (plan.on_side(f.side)) {
      f.reason = "side already found";
    } else {
      f.valid = true;
    }
    plan.fixations.push_back(f);
    apply_ior(ctx, peak.x, peak.y);
  }
  return plan;
}

}  // namespace wafer
