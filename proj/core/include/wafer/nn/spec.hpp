#pragma once

#include <string>
#include <vector>

namespace wafer::nn {

enum class LayerKind { kConv, kMaxPool, kDropout, kDense };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  std::string name;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int units = 0;      // conv output channels or dense units
  double rate = 0.0;  // dropout

  static LayerSpec conv(std::string name, int k, int channels, int stride = 1);
  static LayerSpec pool(std::string name, int kh, int kw, int sh, int sw);
  static LayerSpec dropout(std::string name, double rate);
  static LayerSpec dense(std::string name, int units);
  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::string name;
  int input_h = 0;
  int input_w = 0;
  int input_c = 1;
  std::vector<LayerSpec> layers;

  // Units of the last dense layer (input channels when there is none).
  int classes() const;
  bool operator==(const NetworkSpec&) const = default;
};

struct LayerShape {
  std::string name;
  int h = 0;
  int w = 0;
  int c = 0;
  bool flat = false;  // dense output: only c is meaningful

  bool operator==(const LayerShape&) const = default;
};

// Output shape after every layer. Throws ConfigError naming the layer when a
// kernel does not fit or a parameter is invalid.
std::vector<LayerShape> infer_shapes(const NetworkSpec& spec);

// Street network on 60x192 ROIs: three conv blocks with y pooling reduced in
// the last block, dense 192, dense `classes`.
NetworkSpec street_network(int classes = 2);
// Whole-chip network on 96x96 images.
NetworkSpec chip_network(int classes = 2);
// Inside/border chip network: one conv block, dense 32, dense 2.
NetworkSpec border_network();
// Small network for gradient checks: 8x8x1, two 3x3 convs, one dense.
NetworkSpec tiny_network(int classes = 3);

std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& json);

}  // namespace wafer::nn
