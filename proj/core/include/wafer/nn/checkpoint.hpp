#pragma once

#include <filesystem>
#include <string>

#include "wafer/nn/network.hpp"

namespace wafer::nn {

// A trained classifier: network plus the metadata needed to use it.
struct Model {
  Network<float> network;
  std::string kind;        // "street", "chip" or "border"
  std::string info = "{}"; // JSON training summary

  explicit Model(Network<float> net, std::string kind_ = {}) : network(std::move(net)), kind(std::move(kind_)) {}
};

inline constexpr int kCheckpointVersion = 1;

// Versioned container: JSON metadata (format, version, kind, spec, info)
// plus one tensor per parameter.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);  // throws DataError

}  // namespace wafer::nn
