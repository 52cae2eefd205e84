#include <benchmark/benchmark.h>

#include "wafer/nn/network.hpp"
#include "wafer/nn/spec.hpp"

namespace {

using namespace wafer;
using namespace wafer::nn;

Tensor4<float> batch_for(const NetworkSpec& spec, int n) {
  Rng rng(1);
  Tensor4<float> t(n, spec.input_h, spec.input_w, 1);
  for (auto& v : t.data) v = static_cast<float>(normal(rng, 0.0, 1.0));
  return t;
}

NetworkSpec spec_for(int which) {
  switch (which) {
    case 0: return street_network();
    case 1: return chip_network();
    default: return border_network();
  }
}

void BM_Forward(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  Network<float> net(spec, 1);
  const auto x = batch_for(spec, 16);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * x.n);
  state.SetLabel(spec.name);
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  Network<float> net(spec, 1);
  const auto x = batch_for(spec, 16);
  std::vector<int> labels(16);
  for (int i = 0; i < 16; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  Rng rng(2);
  const SgdConfig sgd{0.001, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(net.train_step(x, labels, sgd, rng));
  state.SetItemsProcessed(state.iterations() * x.n);
  state.SetLabel(spec.name);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
