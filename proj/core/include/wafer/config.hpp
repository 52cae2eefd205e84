#pragma once

#include <filesystem>
#include <string>

#include "wafer/attention.hpp"
#include "wafer/nn/trainer.hpp"
#include "wafer/v1.hpp"

namespace wafer {

// All tunables of the system. Every key has a default; a config file only
// lists what it changes.
//
//   [v1]        n_orientations, wavelengths, sigma_per_wavelength, aspect, color
//   [hva]       p1, p2, v_hva4, pool_sigma, pool_truncate, fef_to_hva4, sp
//   [fef]       tau, dt, n_steps_max, epsilon, theta_sel, gamma, q_gain,
//               second_peak_ratio, neighbor_radius
//   [ior]       initial, strength, sigma_fraction
//   [attention] n_saccades, center_box_lo, center_box_hi, central_suppression,
//               suppression_box, external_map
//   [street_train] / [chip_train] / [border_train]
//               learning_rate, momentum, batch_size, max_epochs, patience,
//               samples_per_epoch, augment, seed
//   [pipeline]  workers, street_classes, split
struct PipelineConfig {
  V1Params v1;
  AttentionParams attention;
  bool central_suppression = true;
  double suppression_box = 0.4;
  std::string external_map;  // image file; overrides the central box
  nn::TrainConfig street_train;
  nn::TrainConfig chip_train;
  nn::TrainConfig border_train;
  int street_classes = 2;  // 2: anomalies merged into good; 3: kept apart
  unsigned workers = 0;    // 0: hardware concurrency
  std::string split = "test";

  PipelineConfig();
  void validate() const;  // throws ConfigError
};

PipelineConfig parse_config(const std::string& toml_text);
PipelineConfig load_config(const std::filesystem::path& path);

// Applies "section.key=value" overrides (TOML value syntax).
void apply_override(PipelineConfig& config, const std::string& assignment);

}  // namespace wafer
