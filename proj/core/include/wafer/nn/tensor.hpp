#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace wafer::nn {

// 64-byte aligned storage. Vectorized reductions start at the same offset in
// every run, which keeps float results bit-identical across runs.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

// Batch of images in NHWC order, contiguous.
template <typename T>
struct Tensor4 {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;
  Buffer<T> data;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_, T fill = T(0))
      : n(n_), h(h_), w(w_), c(c_),
        data(static_cast<std::size_t>(n_) * h_ * w_ * c_, fill) {}

  std::size_t sample_size() const { return static_cast<std::size_t>(h) * w * c; }
  std::size_t size() const { return data.size(); }
  T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
  const T* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
  T& at(int i, int y, int x, int ch) {
    return data[((static_cast<std::size_t>(i) * h + y) * w + x) * c + ch];
  }
  T at(int i, int y, int x, int ch) const {
    return data[((static_cast<std::size_t>(i) * h + y) * w + x) * c + ch];
  }
};

}  // namespace wafer::nn
