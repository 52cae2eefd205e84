#include "wafer/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "wafer/errors.hpp"

namespace wafer::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<RowMatrix<T>>;
template <typename T>
using CMapM = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
void im2col(const T* in, int h, int w, int c, const LayerSpec& l, int oh, int ow, T* cols) {
  const std::size_t run = static_cast<std::size_t>(l.kernel_w) * c;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* dst = cols + (static_cast<std::size_t>(oy) * ow + ox) * l.kernel_h * run;
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const T* src = in + ((static_cast<std::size_t>(oy) * l.stride_h + ky) * w +
                             static_cast<std::size_t>(ox) * l.stride_w) * c;
        std::copy(src, src + run, dst + ky * run);
      }
    }
  }
  (void)h;
}

template <typename T>
void col2im(const T* cols, int w, int c, const LayerSpec& l, int oh, int ow, T* din) {
  const std::size_t run = static_cast<std::size_t>(l.kernel_w) * c;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const T* src = cols + (static_cast<std::size_t>(oy) * ow + ox) * l.kernel_h * run;
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        T* dst = din + ((static_cast<std::size_t>(oy) * l.stride_h + ky) * w +
                        static_cast<std::size_t>(ox) * l.stride_w) * c;
        const T* s = src + ky * run;
        for (std::size_t k = 0; k < run; ++k) dst[k] += s[k];
      }
    }
  }
}

}  // namespace

template <typename T>
Network<T>::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  shapes_ = infer_shapes(spec_);
  classes_ = spec_.classes();
  state_.resize(spec_.layers.size());
  Rng rng(seed);
  int h = spec_.input_h;
  int w = spec_.input_w;
  int c = spec_.input_c;
  std::size_t last_dense = spec_.layers.size();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].kind == LayerKind::kDense) last_dense = i;
  }
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    if (l.kind == LayerKind::kConv) {
      fan_in = static_cast<std::size_t>(l.kernel_h) * l.kernel_w * c;
      fan_out = static_cast<std::size_t>(l.units);
    } else if (l.kind == LayerKind::kDense) {
      fan_in = static_cast<std::size_t>(h) * w * c;
      fan_out = static_cast<std::size_t>(l.units);
    }
    if (fan_in > 0) {
      state_[i].param = static_cast<int>(params_.size());
      state_[i].relu = l.kind == LayerKind::kConv || i != last_dense;
      Param<T> weight{l.name + ".weight", Buffer<T>(fan_in * fan_out), {}, {}};
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (T& v : weight.value) v = static_cast<T>(normal(rng, 0.0, stddev));
      Param<T> bias{l.name + ".bias", Buffer<T>(fan_out, T(0)), {}, {}};
      for (auto* p : {&weight, &bias}) {
        p->grad.assign(p->value.size(), T(0));
        p->velocity.assign(p->value.size(), T(0));
      }
      params_.push_back(std::move(weight));
      params_.push_back(std::move(bias));
    }
    h = shapes_[i].h;
    w = shapes_[i].w;
    c = shapes_[i].c;
  }
  acts_.resize(spec_.layers.size() + 1);
}

template <typename T>
void Network<T>::conv_forward(std::size_t i, const Tensor4<T>& in, Tensor4<T>& out) {
  const auto& l = spec_.layers[i];
  const auto& s = shapes_[i];
  out = Tensor4<T>(in.n, s.h, s.w, s.c);
  const int k = l.kernel_h * l.kernel_w * in.c;
  const int rows = s.h * s.w;
  Buffer<T> cols(static_cast<std::size_t>(rows) * k);
  const auto& W = params_[static_cast<std::size_t>(state_[i].param)].value;
  const auto& b = params_[static_cast<std::size_t>(state_[i].param) + 1].value;
  CMapM<T> wm(W.data(), k, s.c);
  Eigen::Map<const RowVec<T>> bv(b.data(), s.c);
  for (int n = 0; n < in.n; ++n) {
    im2col(in.sample(n), in.h, in.w, in.c, l, s.h, s.w, cols.data());
    MapM<T> om(out.sample(n), rows, s.c);
    om.noalias() = CMapM<T>(cols.data(), rows, k) * wm;
    om.rowwise() += bv;
  }
}

template <typename T>
void Network<T>::conv_backward(std::size_t i, const Tensor4<T>& in, const Tensor4<T>& dout,
                               Tensor4<T>* din) {
  const auto& l = spec_.layers[i];
  const auto& s = shapes_[i];
  const int k = l.kernel_h * l.kernel_w * in.c;
  const int rows = s.h * s.w;
  Buffer<T> cols(static_cast<std::size_t>(rows) * k);
  auto& wp = params_[static_cast<std::size_t>(state_[i].param)];
  auto& bp = params_[static_cast<std::size_t>(state_[i].param) + 1];
  CMapM<T> wm(wp.value.data(), k, s.c);
  MapM<T> dw(wp.grad.data(), k, s.c);
  Eigen::Map<RowVec<T>> db(bp.grad.data(), s.c);
  if (din) *din = Tensor4<T>(in.n, in.h, in.w, in.c);
  for (int n = 0; n < in.n; ++n) {
    im2col(in.sample(n), in.h, in.w, in.c, l, s.h, s.w, cols.data());
    CMapM<T> dm(dout.sample(n), rows, s.c);
    dw.noalias() += CMapM<T>(cols.data(), rows, k).transpose() * dm;
    db += dm.colwise().sum();
    if (din) {
      MapM<T>(cols.data(), rows, k).noalias() = dm * wm.transpose();
      col2im(cols.data(), in.w, in.c, l, s.h, s.w, din->sample(n));
    }
  }
}

template <typename T>
void Network<T>::dense_forward(std::size_t i, const Tensor4<T>& in, Tensor4<T>& out) {
  const int units = spec_.layers[i].units;
  const int fan_in = static_cast<int>(in.sample_size());
  out = Tensor4<T>(in.n, 1, 1, units);
  const auto& W = params_[static_cast<std::size_t>(state_[i].param)].value;
  const auto& b = params_[static_cast<std::size_t>(state_[i].param) + 1].value;
  MapM<T> om(out.data.data(), in.n, units);
  om.noalias() = CMapM<T>(in.data.data(), in.n, fan_in) * CMapM<T>(W.data(), fan_in, units);
  om.rowwise() += Eigen::Map<const RowVec<T>>(b.data(), units);
}

template <typename T>
void Network<T>::dense_backward(std::size_t i, const Tensor4<T>& in, const Tensor4<T>& dout,
                                Tensor4<T>* din) {
  const int units = spec_.layers[i].units;
  const int fan_in = static_cast<int>(in.sample_size());
  auto& wp = params_[static_cast<std::size_t>(state_[i].param)];
  auto& bp = params_[static_cast<std::size_t>(state_[i].param) + 1];
  CMapM<T> x(in.data.data(), in.n, fan_in);
  CMapM<T> d(dout.data.data(), in.n, units);
  MapM<T>(wp.grad.data(), fan_in, units).noalias() += x.transpose() * d;
  Eigen::Map<RowVec<T>>(bp.grad.data(), units) += d.colwise().sum();
  if (din) {
    *din = Tensor4<T>(in.n, in.h, in.w, in.c);
    MapM<T>(din->data.data(), in.n, fan_in).noalias() =
        d * CMapM<T>(wp.value.data(), fan_in, units).transpose();
  }
}

template <typename T>
std::vector<T> Network<T>::forward(const Tensor4<T>& input, bool training, Rng* rng) {
  if (input.h != spec_.input_h || input.w != spec_.input_w || input.c != spec_.input_c) {
    std::ostringstream msg;
    msg << "network '" << spec_.name << "': input " << input.h << "x" << input.w << "x" << input.c
        << " does not match " << spec_.input_h << "x" << spec_.input_w << "x" << spec_.input_c;
    throw DataError(msg.str());
  }
  if (training && !rng) throw ConfigError("training forward pass requires an rng");
  dropout_active_ = training;
  acts_[0] = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const Tensor4<T>& in = acts_[i];
    Tensor4<T>& out = acts_[i + 1];
    auto& st = state_[i];
    switch (l.kind) {
      case LayerKind::kConv: conv_forward(i, in, out); break;
      case LayerKind::kDense: dense_forward(i, in, out); break;
      case LayerKind::kMaxPool: {
        const auto& s = shapes_[i];
        out = Tensor4<T>(in.n, s.h, s.w, s.c);
        st.argmax.assign(out.size(), 0);
        std::size_t o = 0;
        for (int n = 0; n < in.n; ++n) {
          const T* src = in.sample(n);
          for (int oy = 0; oy < s.h; ++oy) {
            for (int ox = 0; ox < s.w; ++ox) {
              for (int ch = 0; ch < s.c; ++ch, ++o) {
                T best = -std::numeric_limits<T>::infinity();
                std::int32_t arg = 0;
                for (int ky = 0; ky < l.kernel_h; ++ky) {
                  const int y = oy * l.stride_h + ky;
                  for (int kx = 0; kx < l.kernel_w; ++kx) {
                    const int x = ox * l.stride_w + kx;
                    const auto idx = static_cast<std::int32_t>((y * in.w + x) * in.c + ch);
                    if (src[idx] > best) {
                      best = src[idx];
                      arg = idx;
                    }
                  }
                }
                out.data[o] = best;
                st.argmax[o] = arg;
              }
            }
          }
        }
        break;
      }
      case LayerKind::kDropout: {
        out = in;
        if (training && l.rate > 0.0) {
          const T keep = static_cast<T>(1.0 / (1.0 - l.rate));
          st.mask.resize(out.size());
          for (std::size_t k = 0; k < out.size(); ++k) {
            st.mask[k] = uniform(*rng, 0.0, 1.0) < l.rate ? T(0) : keep;
            out.data[k] *= st.mask[k];
          }
        }
        break;
      }
    }
    if (st.relu) {
      for (T& v : out.data) v = std::max(v, T(0));
    }
  }
  const auto& logits = acts_.back().data;
  return std::vector<T>(logits.begin(), logits.end());
}

template <typename T>
void Network<T>::backward(const std::vector<T>& dlogits) {
  Tensor4<T> grad = acts_.back();
  if (dlogits.size() != grad.size()) throw DataError("backward: gradient size mismatch");
  grad.data.assign(dlogits.begin(), dlogits.end());
  for (std::size_t li = spec_.layers.size(); li-- > 0;) {
    const auto& l = spec_.layers[li];
    auto& st = state_[li];
    const Tensor4<T>& in = acts_[li];
    if (st.relu) {
      const auto& out = acts_[li + 1].data;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        if (!(out[k] > T(0))) grad.data[k] = T(0);
      }
    }
    const bool need_input_grad = li > 0;
    Tensor4<T> next;
    switch (l.kind) {
      case LayerKind::kConv: conv_backward(li, in, grad, need_input_grad ? &next : nullptr); break;
      case LayerKind::kDense: dense_backward(li, in, grad, need_input_grad ? &next : nullptr); break;
      case LayerKind::kMaxPool: {
        next = Tensor4<T>(in.n, in.h, in.w, in.c);
        const std::size_t per_out = grad.sample_size();
        for (std::size_t o = 0; o < grad.size(); ++o) {
          const std::size_t n = o / per_out;
          next.data[n * in.sample_size() + static_cast<std::size_t>(st.argmax[o])] += grad.data[o];
        }
        break;
      }
      case LayerKind::kDropout:
        next = std::move(grad);
        if (dropout_active_ && l.rate > 0.0) {
          for (std::size_t k = 0; k < next.size(); ++k) next.data[k] *= st.mask[k];
        }
        break;
    }
    if (!need_input_grad) break;
    grad = std::move(next);
  }
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
void Network<T>::sgd_update(const SgdConfig& config) {
  const T lr = static_cast<T>(config.learning_rate);
  const T mu = static_cast<T>(config.momentum);
  for (auto& p : params_) {
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      p.velocity[k] = mu * p.velocity[k] - lr * p.grad[k];
      p.value[k] += p.velocity[k];
    }
  }
}

template <typename T>
double Network<T>::train_step(const Tensor4<T>& input, const std::vector<int>& labels,
                              const SgdConfig& config, Rng& rng) {
  zero_grad();
  const std::vector<T> logits = forward(input, true, &rng);
  std::vector<T> dlogits;
  const double loss = cross_entropy(logits, labels, classes_, &dlogits);
  if (!std::isfinite(loss)) {
    double wmax = 0.0;
    for (const auto& p : params_) {
      for (T v : p.value) wmax = std::max(wmax, std::abs(static_cast<double>(v)));
    }
    std::ostringstream msg;
    msg << "non-finite loss in network '" << spec_.name << "' (batch " << input.n
        << ", max |weight| " << wmax << ", learning rate " << config.learning_rate << ")";
    throw ConvergenceError(msg.str());
  }
  backward(dlogits);
  sgd_update(config);
  return loss;
}

template <typename T>
std::vector<T> softmax(const std::vector<T>& logits, int classes) {
  std::vector<T> out(logits.size());
  const std::size_t rows = logits.size() / static_cast<std::size_t>(classes);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * classes;
    T* p = out.data() + r * classes;
    const T m = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (int k = 0; k < classes; ++k) sum += std::exp(static_cast<double>(z[k] - m));
    for (int k = 0; k < classes; ++k) p[k] = static_cast<T>(std::exp(static_cast<double>(z[k] - m)) / sum);
  }
  return out;
}

template <typename T>
double cross_entropy(const std::vector<T>& logits, const std::vector<int>& labels, int classes,
                     std::vector<T>* dlogits) {
  const std::size_t rows = labels.size();
  if (logits.size() != rows * static_cast<std::size_t>(classes)) {
    throw DataError("cross_entropy: logits and labels disagree");
  }
  if (dlogits) dlogits->assign(logits.size(), T(0));
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * classes;
    const int y = labels[r];
    if (y < 0 || y >= classes) throw DataError("cross_entropy: label out of range");
    double m = z[0];
    for (int k = 1; k < classes; ++k) m = std::max(m, static_cast<double>(z[k]));
    double sum = 0.0;
    for (int k = 0; k < classes; ++k) sum += std::exp(z[k] - m);
    const double log_sum = m + std::log(sum);
    loss += log_sum - z[y];
    if (dlogits) {
      for (int k = 0; k < classes; ++k) {
        const double p = std::exp(z[k] - log_sum);
        (*dlogits)[r * classes + k] = static_cast<T>((p - (k == y ? 1.0 : 0.0)) / static_cast<double>(rows));
      }
    }
  }
  return rows ? loss / static_cast<double>(rows) : 0.0;
}

template class Network<float>;
template class Network<double>;
template std::vector<float> softmax(const std::vector<float>&, int);
template std::vector<double> softmax(const std::vector<double>&, int);
template double cross_entropy(const std::vector<float>&, const std::vector<int>&, int, std::vector<float>*);
template double cross_entropy(const std::vector<double>&, const std::vector<int>&, int, std::vector<double>*);

}  // namespace wafer::nn
