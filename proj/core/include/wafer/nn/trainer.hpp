#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "wafer/metrics.hpp"
#include "wafer/nn/augment.hpp"
#include "wafer/nn/network.hpp"

namespace wafer::nn {

struct Sample {
  cv::Mat image;  // 8-bit grayscale at the network input size
  int label = 0;
};

struct TrainConfig {
  SgdConfig sgd;
  int batch_size = 32;
  int max_epochs = 60;
  int patience = 10;          // epochs without validation improvement
  int samples_per_epoch = 0;  // 0: one pass over the training set
  bool augment = true;
  AugmentSpec augmentation;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_macro = 0.0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_macro = 0.0;

  std::string to_json() const;
};

// Contrast-normalized float batch from 8-bit images (resized to the network
// input when needed).
Tensor4<float> make_batch(const std::vector<const cv::Mat*>& images, int h, int w);

// Trains with SGD and on-the-fly augmentation; keeps the parameters of the
// epoch with the best validation macro accuracy. Deterministic in the seed.
Network<float> train_classifier(const NetworkSpec& spec, const std::vector<Sample>& train,
                                const std::vector<Sample>& val, const TrainConfig& config,
                                TrainReport* report = nullptr,
                                const std::filesystem::path& log_path = {});

// Class probabilities per image, row-major (N, classes).
std::vector<float> predict_proba(Network<float>& net, const std::vector<cv::Mat>& images,
                                 int batch_size = 64);
std::vector<int> predict(Network<float>& net, const std::vector<cv::Mat>& images, int batch_size = 64);

Confusion evaluate(Network<float>& net, const std::vector<Sample>& samples, int batch_size = 64);

}  // namespace wafer::nn
