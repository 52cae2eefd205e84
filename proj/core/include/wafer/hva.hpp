#pragma once

#include <optional>
#include <vector>

#include "wafer/image.hpp"
#include "wafer/templates.hpp"
#include "wafer/v1.hpp"

namespace wafer {

struct HVAPoolParams {
  double p1 = 8.0;
  double p2 = 0.25;
  double v_hva4 = 16.0;
  double sigma = 1.0;         // Gaussian receptive-field sigma, cells
  double truncate = 3.0;      // receptive-field radius in sigmas
  int grid_factor = 1;        // layer-4 cells per layer-2/3 cell
};

struct ReentrantGains {
  double fef_to_hva4 = 3.0;
  double sp = 0.3;
};

// Unmodulated template correlations of a V1-pool stack, one plane per
// template ("same" size, zero outside the grid). Feedback changes only the
// modulation, so a chip computes this once.
std::vector<ImagePlane> hva_correlate(const FeatureStack& v1_pool, const TemplateBank& bank);

// Layer-4 activity before normalization: correlation * (1 + pfc_gain) *
// (1 + fef_to_hva4 * sp * feedback). `pfc_gain` has one entry per template
// (empty means all zero).
std::vector<ImagePlane> hva_modulate(const std::vector<ImagePlane>& correlation,
                                     const std::vector<double>& pfc_gain,
                                     const ImagePlane* fef_feedback, const ReentrantGains& gains);

// Divides all planes by their common maximum (skipped below 1e-8).
void normalize_stack(std::vector<ImagePlane>& planes);

// Full layer 4: correlate, modulate, normalize. Throws DataError when a
// template is larger than the grid or does not match the feature count.
std::vector<ImagePlane> hva_layer4(const FeatureStack& v1_pool, const TemplateBank& bank,
                                   const std::vector<double>& pfc_gain,
                                   const ImagePlane* fef_feedback, const ReentrantGains& gains);

// Power-sum pooling E = (v_hva4 * sum_rf w * r^p1)^p2 with Gaussian weights,
// without normalization. Output grid is input grid / grid_factor.
ImagePlane softmax_pool_raw(const ImagePlane& layer4, const HVAPoolParams& params);

// Gaussian receptive-field weights, (2r+1)^2 row-major, peak 1.
std::vector<double> pool_weights(const HVAPoolParams& params, int& radius);

// Layer 2/3: pooled planes, jointly max-normalized and clipped to [0,1].
std::vector<ImagePlane> hva_pool23(const std::vector<ImagePlane>& layer4, const HVAPoolParams& params);

// Per-location maximum over planes.
ImagePlane max_over_planes(const std::vector<ImagePlane>& planes);

}  // namespace wafer
