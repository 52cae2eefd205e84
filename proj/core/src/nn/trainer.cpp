#include "wafer/nn/trainer.hpp"

#include <fstream>
#include <numeric>

#include <opencv2/imgproc.hpp>

#include "json.hpp"
#include "wafer/errors.hpp"
#include "wafer/roi.hpp"

namespace wafer::nn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be positive");
  if (patience < 1) throw ConfigError("train: patience must be positive");
  if (samples_per_epoch < 0) throw ConfigError("train: samples_per_epoch must be non-negative");
  if (sgd.learning_rate < 0 || sgd.momentum < 0 || sgd.momentum >= 1) {
    throw ConfigError("train: invalid learning rate or momentum");
  }
  augmentation.validate();
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["best_epoch"] = best_epoch;
  j["best_val_macro"] = best_val_macro;
  j["epochs"] = epochs.size();
  return j.dump();
}

Tensor4<float> make_batch(const std::vector<const cv::Mat*>& images, int h, int w) {
  Tensor4<float> t(static_cast<int>(images.size()), h, w, 1);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const cv::Mat* src = images[i];
    cv::Mat sized;
    if (src->rows != h || src->cols != w) {
      cv::resize(*src, sized, cv::Size(w, h), 0, 0, cv::INTER_AREA);
      src = &sized;
    }
    const cv::Mat norm = contrast_normalize(*src);
    float* dst = t.sample(static_cast<int>(i));
    for (int y = 0; y < h; ++y) {
      const float* row = norm.ptr<float>(y);
      std::copy(row, row + w, dst + static_cast<std::size_t>(y) * w);
    }
  }
  return t;
}

std::vector<float> predict_proba(Network<float>& net, const std::vector<cv::Mat>& images, int batch_size) {
  const auto& spec = net.spec();
  std::vector<float> out;
  out.reserve(images.size() * static_cast<std::size_t>(net.classes()));
  for (std::size_t start = 0; start < images.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(images.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const cv::Mat*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&images[i]);
    const auto logits = net.forward(make_batch(ptrs, spec.input_h, spec.input_w));
    const auto p = softmax(logits, net.classes());
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<int> predict(Network<float>& net, const std::vector<cv::Mat>& images, int batch_size) {
  const auto p = predict_proba(net, images, batch_size);
  const int k = net.classes();
  std::vector<int> labels(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const float* row = p.data() + i * static_cast<std::size_t>(k);
    labels[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return labels;
}

Confusion evaluate(Network<float>& net, const std::vector<Sample>& samples, int batch_size) {
  std::vector<cv::Mat> images;
  images.reserve(samples.size());
  for (const auto& s : samples) images.push_back(s.image);
  const auto pred = predict(net, images, batch_size);
  Confusion c(net.classes());
  for (std::size_t i = 0; i < samples.size(); ++i) c.add(samples[i].label, pred[i]);
  return c;
}

Network<float> train_classifier(const NetworkSpec& spec, const std::vector<Sample>& train,
                                const std::vector<Sample>& val, const TrainConfig& config,
                                TrainReport* report, const std::filesystem::path& log_path) {
  config.validate();
  if (train.empty()) throw DataError("train: empty training set");
  Network<float> net(spec, mix_seed(config.seed, 1));
  Rng rng(mix_seed(config.seed, 2));
  const int classes = net.classes();
  for (const auto& s : train) {
    if (s.label < 0 || s.label >= classes) throw DataError("train: label out of range");
  }
  std::ofstream log;
  if (!log_path.empty()) {
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
    log.open(log_path);
  }
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};
  std::vector<Param<float>> best = net.params();
  double best_score = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  const std::size_t per_epoch =
      config.samples_per_epoch > 0 ? static_cast<std::size_t>(config.samples_per_epoch) : train.size();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    int batches = 0;
    std::size_t done = 0;
    while (done < per_epoch) {
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), per_epoch - done);
      std::vector<cv::Mat> views;
      std::vector<int> labels;
      views.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        if (cursor >= order.size()) {
          for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
          cursor = 0;
        }
        const Sample& s = train[order[cursor++]];
        views.push_back(config.augment ? augment(s.image, config.augmentation, rng) : s.image);
        labels.push_back(s.label);
      }
      std::vector<const cv::Mat*> ptrs;
      for (const auto& v : views) ptrs.push_back(&v);
      loss_sum += net.train_step(make_batch(ptrs, spec.input_h, spec.input_w), labels, config.sgd, rng);
      ++batches;
      done += n;
    }
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = loss_sum / std::max(1, batches);
    if (!val.empty()) {
      const Confusion c = evaluate(net, val);
      e.val_accuracy = c.accuracy();
      e.val_macro = c.macro_accuracy();
    }
    rep.epochs.push_back(e);
    if (log.is_open()) {
      nlohmann::ordered_json j;
      j["epoch"] = e.epoch;
      j["train_loss"] = e.train_loss;
      j["val_accuracy"] = e.val_accuracy;
      j["val_macro"] = e.val_macro;
      log << j.dump() << '\n';
    }
    const double score = val.empty() ? -e.train_loss : e.val_macro;
    if (score >= best_score) {
      best_score = score;
      best = net.params();
      rep.best_epoch = epoch;
      rep.best_val_macro = e.val_macro;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  net.params() = best;
  return net;
}

}  // namespace wafer::nn
