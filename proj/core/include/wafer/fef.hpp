#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/hva.hpp"
#include "wafer/image.hpp"
#include "wafer/templates.hpp"
#include "wafer/v1.hpp"

namespace wafer {

struct FEFParams {
  double tau = 10.0;
  double dt = 1.0;
  int n_steps_max = 200;
  double epsilon = 1e-6;     // stall: max |dr| below this ends the run
  double theta_sel = 0.9;
  double gamma = 2.0;        // C(u) = u^gamma
  double q_gain = 2.0;       // Q(F) = F^gain / max(F^gain)
  double second_peak_ratio = 0.5;
  int neighbor_radius = 3;   // cells; peaks closer than this are one peak

  void validate() const;  // throws ConfigError
};

struct IORParams {
  double initial = 0.25;
  double strength = 0.75;
  double sigma_fraction = 1.0 / 6.0;  // sigma = grid size * fraction, per axis
};

// Spatial signals feeding the FEF. One context per chip.
struct AttentionContext {
  ImagePlane external;  // entries in [-0.25, 0.25]
  ImagePlane ior;       // starts at IORParams::initial, only decremented
  IORParams ior_params;

  AttentionContext() = default;
  AttentionContext(int width, int height, const IORParams& ior = {});

  int width() const { return ior.width(); }
  int height() const { return ior.height(); }
  // Clamps the external map to [-0.25, 0.25]. Throws DataError on shape mismatch.
  void set_external(const ImagePlane& map);
};

// g(x) = amplitude * exp(-((x-cx)^2 / 2 sx^2 + (y-cy)^2 / 2 sy^2)) sampled at
// cell centers (integer coordinates).
ImagePlane gaussian_blob(double cx, double cy, double amplitude, double sigma_x, double sigma_y,
                         int width, int height);

// F = clip01(E * (1 + 2 * min(external, ior))).
ImagePlane fef_drive(const ImagePlane& hva_max, const AttentionContext& ctx);

// E = C(Q(F)).
ImagePlane fef_input(const ImagePlane& drive, const FEFParams& params);

// One Euler step of tau dr/dt = -r + input, clipped to [0,1]. Returns max |dr|.
double fef_step(ImagePlane& activity, const ImagePlane& input, const FEFParams& params);

struct Peak {
  int x = 0;
  int y = 0;
  double value = 0.0;
};

// Highest cell and the highest cell farther than `neighbor_radius`
// (Chebyshev) from it.
std::pair<Peak, Peak> top_two_peaks(const ImagePlane& activity, int neighbor_radius);

// Movement-cell readout: the selected peak when top > theta_sel and the
// second peak < ratio * top.
std::optional<Peak> fef_movement(const ImagePlane& activity, const FEFParams& params);

// Sub-cell location of a peak: activity-weighted centroid over the 3x3
// neighborhood. Cell (i, j) covers [i, i+1) x [j, j+1).
cv::Point2d refine_peak(const ImagePlane& activity, const Peak& peak);

// Drives the reentrant loop until the movement cells fire. `hva_max_of`
// maps the current FEF activity (used as feedback) to the HVA layer-2/3
// maximum map.
struct SelectionResult {
  ImagePlane activity;
  std::optional<Peak> peak;
  int steps = 0;
  std::string diagnostic;
};

template <typename HvaFn>
SelectionResult run_to_selection(HvaFn&& hva_max_of, const AttentionContext& ctx,
                                 const FEFParams& params);

// r_ior -= strength * g(selected, 1, grid / 6).
void apply_ior(AttentionContext& ctx, int x, int y);

// External map with the central box (fraction `box` of each axis) set to
// `level` and 0 elsewhere.
ImagePlane central_suppression(int width, int height, double box = 0.4, double level = -0.25);

// Loads a suppression image, resizes it to the grid (area averaging) and maps
// gray levels linearly from [0,255] to [-0.25,0.25].
ImagePlane load_external_map(const std::filesystem::path& path, int width, int height);

// --- implementation of the template ---

template <typename HvaFn>
SelectionResult run_to_selection(HvaFn&& hva_max_of, const AttentionContext& ctx,
                                 const FEFParams& params) {
  params.validate();
  SelectionResult res;
  res.activity = ImagePlane(ctx.width(), ctx.height());
  for (int step = 1; step <= params.n_steps_max; ++step) {
    const ImagePlane hva_max = hva_max_of(res.activity);
    const ImagePlane input = fef_input(fef_drive(hva_max, ctx), params);
    const double change = fef_step(res.activity, input, params);
    res.steps = step;
    if (auto peak = fef_movement(res.activity, params)) {
      res.peak = peak;
      return res;
    }
    if (change < params.epsilon) {
      res.diagnostic = "stalled after " + std::to_string(step) + " steps";
      return res;
    }
  }
  res.diagnostic = "no selection within " + std::to_string(params.n_steps_max) + " steps";
  return res;
}

}  // namespace wafer
