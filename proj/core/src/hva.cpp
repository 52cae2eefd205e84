#include "wafer/hva.hpp"

#include <cmath>

#include "wafer/errors.hpp"

namespace wafer {

std::vector<ImagePlane> hva_correlate(const FeatureStack& v1_pool, const TemplateBank& bank) {
  const int w = v1_pool.width();
  const int h = v1_pool.height();
  std::vector<ImagePlane> out;
  out.reserve(bank.templates.size());
  for (const auto& t : bank.templates) {
    if (t.weights.size() != v1_pool.size()) {
      throw DataError("hva: template feature count does not match V1");
    }
    const int tw = t.width();
    const int th = t.height();
    if (tw > w || th > h) throw DataError("hva: template larger than plane");
    const int cx = tw / 2;
    const int cy = th / 2;
    ImagePlane r(w, h);
    for (std::size_t f = 0; f < t.weights.size(); ++f) {
      const ImagePlane& in = v1_pool.planes[f];
      const ImagePlane& k = t.weights[f];
      for (int ky = 0; ky < th; ++ky) {
        for (int kx = 0; kx < tw; ++kx) {
          const double wgt = k.at(kx, ky);
          if (wgt == 0.0) continue;
          const int ox = kx - cx;
          const int oy = ky - cy;
          const int y0 = std::max(0, -oy);
          const int y1 = std::min(h, h - oy);
          const int x0 = std::max(0, -ox);
          const int x1 = std::min(w, w - ox);
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) r.at(x, y) += wgt * in.at(x + ox, y + oy);
          }
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ImagePlane> hva_modulate(const std::vector<ImagePlane>& correlation,
                                     const std::vector<double>& pfc_gain,
                                     const ImagePlane* fef_feedback, const ReentrantGains& gains) {
  if (!pfc_gain.empty() && pfc_gain.size() != correlation.size()) {
    throw ConfigError("hva: one PFC gain per template required");
  }
  std::vector<ImagePlane> out = correlation;
  const double k = gains.fef_to_hva4 * gains.sp;
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double g = static_cast<double>(1.0 + (pfc_gain.empty() ? 0.0 : pfc_gain[t]));
    auto vals = out[t].values();
    if (fef_feedback) {
      if (!fef_feedback->same_shape(out[t])) throw DataError("hva: feedback shape mismatch");
      auto fb = fef_feedback->values();
      for (std::size_t i = 0; i < vals.size(); ++i) {
        vals[i] *= g * static_cast<double>(1.0 + k * fb[i]);
      }
    } else {
      for (double& v : vals) v *= g;
    }
  }
  return out;
}

void normalize_stack(std::vector<ImagePlane>& planes) {
  double m = 0.0;
  for (const auto& p : planes) m = std::max(m, p.max());
  if (!(m > 1e-8)) return;
  const double inv = 1.0 / m;
  for (auto& p : planes) {
    for (double& v : p.values()) v *= inv;
  }
}

std::vector<ImagePlane> hva_layer4(const FeatureStack& v1_pool, const TemplateBank& bank,
                                   const std::vector<double>& pfc_gain,
                                   const ImagePlane* fef_feedback, const ReentrantGains& gains) {
  auto planes = hva_modulate(hva_correlate(v1_pool, bank), pfc_gain, fef_feedback, gains);
  normalize_stack(planes);
  return planes;
}

std::vector<double> pool_weights(const HVAPoolParams& params, int& radius) {
  radius = static_cast<int>(std::floor(params.truncate * params.sigma));
  const int n = 2 * radius + 1;
  std::vector<double> w(static_cast<std::size_t>(n * n));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      w[static_cast<std::size_t>((dy + radius) * n + dx + radius)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma * params.sigma));
    }
  }
  return w;
}

ImagePlane softmax_pool_raw(const ImagePlane& layer4, const HVAPoolParams& params) {
  if (params.grid_factor < 1) throw ConfigError("hva: grid_factor must be positive");
  int radius = 0;
  const std::vector<double> w = pool_weights(params, radius);
  const int n = 2 * radius + 1;
  const int f = params.grid_factor;
  const int ow = layer4.width() / f;
  const int oh = layer4.height() / f;
  // Powers are taken once per input cell.
  std::vector<double> pw(layer4.size());
  auto in = layer4.values();
  for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = std::pow(std::max(0.0, in[i]), params.p1);
  ImagePlane out(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      // Receptive field centered on the middle of the output cell's block.
      const int cx = ox * f + f / 2;
      const int cy = oy * f + f / 2;
      double s = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int y = cy + dy;
        if (y < 0 || y >= layer4.height()) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int x = cx + dx;
          if (x < 0 || x >= layer4.width()) continue;
          s += w[static_cast<std::size_t>((dy + radius) * n + dx + radius)] *
               pw[static_cast<std::size_t>(y) * static_cast<std::size_t>(layer4.width()) +
                  static_cast<std::size_t>(x)];
        }
      }
      out.at(ox, oy) = std::pow(params.v_hva4 * s, params.p2);
    }
  }
  return out;
}

std::vector<ImagePlane> hva_pool23(const std::vector<ImagePlane>& layer4, const HVAPoolParams& params) {
  std::vector<ImagePlane> out;
  out.reserve(layer4.size());
  for (const auto& p : layer4) out.push_back(softmax_pool_raw(p, params));
  normalize_stack(out);
  for (auto& p : out) {
    for (double& v : p.values()) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

ImagePlane max_over_planes(const std::vector<ImagePlane>& planes) {
  if (planes.empty()) return {};
  ImagePlane out = planes.front();
  for (std::size_t i = 1; i < planes.size(); ++i) {
    if (!planes[i].same_shape(out)) throw DataError("max_over_planes: shape mismatch");
    auto o = out.values();
    auto v = planes[i].values();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = std::max(o[k], v[k]);
  }
  return out;
}

}  // namespace wafer
