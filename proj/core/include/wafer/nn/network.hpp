#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wafer/nn/spec.hpp"
#include "wafer/nn/tensor.hpp"
#include "wafer/rng.hpp"

namespace wafer::nn {

template <typename T>
struct Param {
  std::string name;
  Buffer<T> value;
  Buffer<T> grad;
  Buffer<T> velocity;
};

struct SgdConfig {
  double learning_rate = 1e-2;
  double momentum = 0.9;
};

// Convolutional network with valid convolutions, max pooling, inverted
// dropout and dense layers. A rectifier follows every conv and dense layer
// except the last dense layer, whose outputs are the logits.
template <typename T>
class Network {
 public:
  explicit Network(NetworkSpec spec, std::uint64_t seed = 1);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  int classes() const { return classes_; }

  // Returns logits as an (N, classes) row-major vector. Dropout is active only
  // when `training` is set, which requires `rng`.
  std::vector<T> forward(const Tensor4<T>& input, bool training = false, Rng* rng = nullptr);

  // Backpropagates d(loss)/d(logits) through the last forward pass and
  // accumulates parameter gradients.
  void backward(const std::vector<T>& dlogits);

  void zero_grad();
  void sgd_update(const SgdConfig& config);

  // One forward/backward/update on a batch. Returns the mean loss. Throws
  // ConvergenceError when the loss is not finite.
  double train_step(const Tensor4<T>& input, const std::vector<int>& labels, const SgdConfig& config,
                    Rng& rng);

  std::vector<Param<T>>& params() { return params_; }
  const std::vector<Param<T>>& params() const { return params_; }

 private:
  struct LayerState {
    int param = -1;  // index of the weight parameter; bias follows
    bool relu = false;
    std::vector<std::int32_t> argmax;
    Buffer<T> mask;
  };

  void conv_forward(std::size_t i, const Tensor4<T>& in, Tensor4<T>& out);
  void conv_backward(std::size_t i, const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>* din);
  void dense_forward(std::size_t i, const Tensor4<T>& in, Tensor4<T>& out);
  void dense_backward(std::size_t i, const Tensor4<T>& in, const Tensor4<T>& dout, Tensor4<T>* din);

  NetworkSpec spec_;
  std::vector<LayerShape> shapes_;
  int classes_ = 0;
  std::vector<Param<T>> params_;
  std::vector<LayerState> state_;
  std::vector<Tensor4<T>> acts_;  // acts_[i] is the input of layer i
  bool dropout_active_ = false;
};

// Row-wise softmax of (N, classes) logits.
template <typename T>
std::vector<T> softmax(const std::vector<T>& logits, int classes);

// Mean cross-entropy of softmax(logits); writes d(loss)/d(logits) when
// `dlogits` is given.
template <typename T>
double cross_entropy(const std::vector<T>& logits, const std::vector<int>& labels, int classes,
                     std::vector<T>* dlogits = nullptr);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace wafer::nn
