#include <benchmark/benchmark.h>

#include "wafer/attention.hpp"
#include "wafer/fef.hpp"
#include "wafer/hva.hpp"
#include "wafer/synth.hpp"
#include "wafer/templates.hpp"
#include "wafer/v1.hpp"

namespace {

using namespace wafer;

struct ChipFixture {
  synth::WaferSpec spec;
  cv::Mat image;

  explicit ChipFixture(int chip_px) {
    spec.grid_cols = spec.grid_rows = 3;
    spec.wafer_radius_chips = 4.0;
    spec.chip_px = chip_px;
    spec.seed = 3;
    const auto wafer = synth::generate_wafer(spec);
    for (const auto& c : wafer.truth.chips) {
      if (!c.border) {
        image = synth::chip_image(wafer, c);
        break;
      }
    }
  }
};

const TemplateBank& bank() {
  static const TemplateBank b = learn_default_bank();
  return b;
}

void BM_V1Simple(benchmark::State& state) {
  const cv::Mat img(320, 320, CV_8UC1, cv::Scalar(128));
  cv::Mat noisy = img.clone();
  cv::randu(noisy, 0, 255);
  for (auto _ : state) benchmark::DoNotOptimize(v1_simple(noisy, V1Params{}));
}
BENCHMARK(BM_V1Simple)->Unit(benchmark::kMillisecond);

void BM_HvaLayer4AndPool(benchmark::State& state) {
  cv::Mat img(320, 320, CV_8UC1);
  cv::randu(img, 0, 255);
  const auto pooled = v1_pool(v1_simple(img, V1Params{}));
  for (auto _ : state) {
    const auto l4 = hva_layer4(pooled, bank(), {}, nullptr, ReentrantGains{});
    benchmark::DoNotOptimize(hva_pool23(l4, HVAPoolParams{}));
  }
}
BENCHMARK(BM_HvaLayer4AndPool)->Unit(benchmark::kMillisecond);

void BM_IorUpdate(benchmark::State& state) {
  AttentionContext ctx(32, 32);
  for (auto _ : state) {
    apply_ior(ctx, 16, 16);
    benchmark::DoNotOptimize(ctx.ior.at(16, 16));
  }
}
BENCHMARK(BM_IorUpdate);

void BM_FindStreets(benchmark::State& state) {
  const ChipFixture chip(static_cast<int>(state.range(0)));
  const auto suppression = central_suppression(32, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(find_streets(chip.image, bank(), chip.spec.chip_px, AttentionParams{}, &suppression));
  }
}
BENCHMARK(BM_FindStreets)->Arg(240)->Arg(600)->Unit(benchmark::kMillisecond);

}  // namespace
