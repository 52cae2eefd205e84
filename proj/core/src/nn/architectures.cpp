#include <utility>

#include "json.hpp"
#include "wafer/errors.hpp"
#include "wafer/nn/spec.hpp"

namespace wafer::nn {

LayerSpec LayerSpec::conv(std::string name, int k, int channels, int stride) {
  LayerSpec l;
  l.kind = LayerKind::kConv;
  l.name = std::move(name);
  l.kernel_h = l.kernel_w = k;
  l.stride_h = l.stride_w = stride;
  l.units = channels;
  return l;
}

LayerSpec LayerSpec::pool(std::string name, int kh, int kw, int sh, int sw) {
  LayerSpec l;
  l.kind = LayerKind::kMaxPool;
  l.name = std::move(name);
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.stride_h = sh;
  l.stride_w = sw;
  return l;
}

LayerSpec LayerSpec::dropout(std::string name, double rate) {
  LayerSpec l;
  l.kind = LayerKind::kDropout;
  l.name = std::move(name);
  l.rate = rate;
  return l;
}

LayerSpec LayerSpec::dense(std::string name, int units) {
  LayerSpec l;
  l.kind = LayerKind::kDense;
  l.name = std::move(name);
  l.units = units;
  return l;
}

int NetworkSpec::classes() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->kind == LayerKind::kDense) return it->units;
  }
  return input_c;
}

std::vector<LayerShape> infer_shapes(const NetworkSpec& spec) {
  if (spec.input_h < 1 || spec.input_w < 1 || spec.input_c < 1) {
    throw ConfigError("network '" + spec.name + "': invalid input shape");
  }
  std::vector<LayerShape> out;
  int h = spec.input_h;
  int w = spec.input_w;
  int c = spec.input_c;
  bool flat = false;
  for (const auto& l : spec.layers) {
    auto fail = [&](const std::string& why) {
      throw ConfigError("layer " + l.name + ": " + why);
    };
    switch (l.kind) {
      case LayerKind::kConv:
      case LayerKind::kMaxPool:
        if (flat) fail("spatial layer after dense layer");
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride_h < 1 || l.stride_w < 1) {
          fail("kernel and stride must be positive");
        }
        if (l.kernel_h > h || l.kernel_w > w) {
          fail("kernel " + std::to_string(l.kernel_h) + "x" + std::to_string(l.kernel_w) +
               " larger than input " + std::to_string(h) + "x" + std::to_string(w));
        }
        h = (h - l.kernel_h) / l.stride_h + 1;
        w = (w - l.kernel_w) / l.stride_w + 1;
        if (l.kind == LayerKind::kConv) {
          if (l.units < 1) fail("channel count must be positive");
          c = l.units;
        }
        break;
      case LayerKind::kDropout:
        if (l.rate < 0.0 || l.rate >= 1.0) fail("dropout rate must lie in [0,1)");
        break;
      case LayerKind::kDense:
        if (l.units < 1) fail("unit count must be positive");
        h = 1;
        w = 1;
        c = l.units;
        flat = true;
        break;
    }
    out.push_back({l.name, h, w, c, flat});
  }
  return out;
}

namespace {

void add_block(NetworkSpec& s, int block, int k1, int c1, int c2, int pkh, int pkw, int psh, int psw,
               double rate) {
  const std::string b = std::to_string(block);
  s.layers.push_back(LayerSpec::conv("conv" + b + "_1", k1, c1));
  s.layers.push_back(LayerSpec::conv("conv" + b + "_2", 3, c2));
  s.layers.push_back(LayerSpec::pool("pool" + b, pkh, pkw, psh, psw));
  s.layers.push_back(LayerSpec::dropout("dropout" + b, rate));
}

}  // namespace

NetworkSpec street_network(int classes) {
  NetworkSpec s;
  s.name = "street";
  s.input_h = 60;
  s.input_w = 192;
  add_block(s, 1, 5, 32, 48, 3, 3, 3, 3, 0.25);
  add_block(s, 2, 3, 64, 96, 2, 2, 2, 2, 0.25);
  add_block(s, 3, 3, 144, 192, 1, 3, 1, 3, 0.25);
  s.layers.push_back(LayerSpec::dense("dense1", 192));
  s.layers.push_back(LayerSpec::dropout("dropout4", 0.5));
  s.layers.push_back(LayerSpec::dense("dense2", classes));
  return s;
}

NetworkSpec chip_network(int classes) {
  NetworkSpec s;
  s.name = "chip";
  s.input_h = 96;
  s.input_w = 96;
  add_block(s, 1, 5, 32, 48, 3, 3, 3, 3, 0.25);
  add_block(s, 2, 3, 64, 96, 2, 2, 2, 2, 0.25);
  add_block(s, 3, 3, 144, 192, 2, 2, 2, 2, 0.25);
  s.layers.push_back(LayerSpec::dense("dense1", 192));
  s.layers.push_back(LayerSpec::dropout("dropout4", 0.5));
  s.layers.push_back(LayerSpec::dense("dense2", classes));
  return s;
}

NetworkSpec border_network() {
  NetworkSpec s;
  s.name = "border";
  s.input_h = 96;
  s.input_w = 96;
  s.layers.push_back(LayerSpec::conv("conv1_1", 3, 8));
  s.layers.push_back(LayerSpec::conv("conv1_2", 3, 16));
  s.layers.push_back(LayerSpec::pool("pool1", 4, 4, 4, 4));
  s.layers.push_back(LayerSpec::dense("dense1", 32));
  s.layers.push_back(LayerSpec::dense("dense2", 2));
  return s;
}

NetworkSpec tiny_network(int classes) {
  NetworkSpec s;
  s.name = "tiny";
  s.input_h = 8;
  s.input_w = 8;
  s.layers.push_back(LayerSpec::conv("conv1", 3, 4));
  s.layers.push_back(LayerSpec::conv("conv2", 3, 4));
  s.layers.push_back(LayerSpec::dense("dense1", classes));
  return s;
}

std::string spec_to_json(const NetworkSpec& spec) {
  nlohmann::ordered_json j;
  j["name"] = spec.name;
  j["input"] = {spec.input_h, spec.input_w, spec.input_c};
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.layers) {
    nlohmann::ordered_json e;
    e["name"] = l.name;
    switch (l.kind) {
      case LayerKind::kConv:
        e["type"] = "conv";
        e["kernel"] = {l.kernel_h, l.kernel_w};
        e["stride"] = {l.stride_h, l.stride_w};
        e["units"] = l.units;
        break;
      case LayerKind::kMaxPool:
        e["type"] = "maxpool";
        e["kernel"] = {l.kernel_h, l.kernel_w};
        e["stride"] = {l.stride_h, l.stride_w};
        break;
      case LayerKind::kDropout:
        e["type"] = "dropout";
        e["rate"] = l.rate;
        break;
      case LayerKind::kDense:
        e["type"] = "dense";
        e["units"] = l.units;
        break;
    }
    j["layers"].push_back(e);
  }
  return j.dump();
}

NetworkSpec spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NetworkSpec s;
    s.name = j.at("name").get<std::string>();
    s.input_h = j.at("input").at(0).get<int>();
    s.input_w = j.at("input").at(1).get<int>();
    s.input_c = j.at("input").at(2).get<int>();
    for (const auto& e : j.at("layers")) {
      const auto type = e.at("type").get<std::string>();
      const auto name = e.at("name").get<std::string>();
      if (type == "conv" || type == "maxpool") {
        LayerSpec l = type == "conv" ? LayerSpec::conv(name, 1, e.at("units").get<int>())
                                     : LayerSpec::pool(name, 1, 1, 1, 1);
        l.kernel_h = e.at("kernel").at(0).get<int>();
        l.kernel_w = e.at("kernel").at(1).get<int>();
        l.stride_h = e.at("stride").at(0).get<int>();
        l.stride_w = e.at("stride").at(1).get<int>();
        s.layers.push_back(l);
      } else if (type == "dropout") {
        s.layers.push_back(LayerSpec::dropout(name, e.at("rate").get<double>()));
      } else if (type == "dense") {
        s.layers.push_back(LayerSpec::dense(name, e.at("units").get<int>()));
      } else {
        throw ConfigError("unknown layer type '" + type + "'");
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("network spec: " + std::string(e.what()));
  }
}

}  // namespace wafer::nn
