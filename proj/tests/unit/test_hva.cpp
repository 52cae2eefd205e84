#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include <opencv2/imgproc.hpp>

#include "oracles.hpp"
#include "scratch_dir.hpp"
#include "wafer/errors.hpp"
#include "wafer/hva.hpp"
#include "wafer/rng.hpp"
#include "wafer/synth.hpp"
#include "wafer/templates.hpp"

using namespace wafer;

namespace {

const TemplateBank& bank() {
  static const TemplateBank b = learn_default_bank();
  return b;
}

FeatureStack random_stack(int w, int h, std::size_t planes, Rng& rng) {
  FeatureStack s;
  s.resolution = Resolution::kPool;
  for (std::size_t i = 0; i < planes; ++i) {
    ImagePlane p(w, h);
    for (double& v : p.values()) v = uniform(rng, 0.0, 1.0);
    s.planes.push_back(p);
    s.features.push_back({});
  }
  return s;
}

FeatureStack pooled_canonical(const cv::Mat& chip) {
  cv::Mat canonical;
  cv::resize(chip, canonical, cv::Size(kCanonicalPx, kCanonicalPx), 0, 0, cv::INTER_AREA);
  return v1_pool(v1_simple(canonical, bank().v1), 10);
}

double l2(const StreetTemplate& t) {
  double s = 0.0;
  for (const auto& p : t.weights) {
    for (double v : p.values()) s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace

TEST(Templates, BankHasTwelveCellsInLayoutOrder) {
  const auto& b = bank();
  ASSERT_EQ(b.templates.size(), 12u);
  const auto layout = bank_layout();
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(b.templates[i].meta.orientation, layout[i].orientation);
    EXPECT_EQ(b.templates[i].meta.width_class, layout[i].width_class);
    EXPECT_EQ(b.templates[i].meta.polarity, layout[i].polarity);
  }
}

TEST(Templates, WeightsAreNonNegativeAndUnitNorm) {
  for (const auto& t : bank().templates) {
    EXPECT_NEAR(l2(t), 1.0, 1e-12);
    for (const auto& p : t.weights) EXPECT_GE(p.min(), 0.0);
    if (t.meta.orientation == Orientation::kHorizontal) {
      EXPECT_EQ(t.width(), kTemplateLength);
      EXPECT_EQ(t.height(), kTemplateDepth);
    } else {
      EXPECT_EQ(t.width(), kTemplateDepth);
      EXPECT_EQ(t.height(), kTemplateLength);
    }
  }
}

TEST(Templates, LearningIsDeterministic) {
  const auto meta = bank_layout()[3];
  const auto a = one_shot_learn(make_sketch(meta), meta, V1Params{});
  const auto b = one_shot_learn(make_sketch(meta), meta, V1Params{});
  EXPECT_EQ(a, b);
}

TEST(Templates, BlankSketchIsAnEmptyTemplate) {
  const cv::Mat blank(kCanonicalPx, kCanonicalPx, CV_8UC1, cv::Scalar(128));
  try {
    one_shot_learn(blank, bank_layout()[0], V1Params{});
    FAIL() << "no error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("empty template"), std::string::npos);
  }
}

TEST(Templates, SketchFilesRoundTripThroughLearnBank) {
  testing_support::ScratchDir dir("sketches");
  write_sketches(dir.path());
  const auto b = learn_bank(dir.path());
  ASSERT_EQ(b.templates.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(b.templates[i].weights, bank().templates[i].weights);
  std::filesystem::remove(dir / sketch_name(bank_layout()[5]));
  EXPECT_THROW(learn_bank(dir.path()), DataError);
}

TEST(Templates, SaveLoadKeepsWeightsToFloatPrecision) {
  testing_support::ScratchDir dir("bank");
  save_bank(dir / "t.wbank", bank());
  const auto back = load_bank(dir / "t.wbank");
  ASSERT_EQ(back.templates.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(back.templates[i].meta.orientation, bank().templates[i].meta.orientation);
    for (std::size_t f = 0; f < back.templates[i].weights.size(); ++f) {
      const auto a = back.templates[i].weights[f].values();
      const auto b = bank().templates[i].weights[f].values();
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-7);
    }
  }
  std::ofstream(dir / "junk.wbank") << "nope";
  EXPECT_THROW(load_bank(dir / "junk.wbank"), DataError);
}

TEST(Templates, VerticalTemplatesPreferVerticalStreets) {
  synth::WaferSpec spec;
  spec.grid_cols = 4;
  spec.grid_rows = 4;
  spec.wafer_radius_chips = 4;
  spec.chip_px = 240;
  spec.seed = 21;
  const auto w = synth::generate_wafer(spec);
  int checked = 0;
  for (const auto& chip : w.truth.chips) {
    if (chip.border) continue;
    const cv::Mat img = synth::chip_image(w, chip);
    const auto corr = hva_correlate(pooled_canonical(img), bank());
    const double scale = 32.0 / img.cols;
    for (Side side : {Side::kWest, Side::kNorth}) {
      const auto& st = chip.streets[static_cast<std::size_t>(side)];
      const int cx = static_cast<int>(st.center_x * scale);
      const int cy = static_cast<int>(st.center_y * scale);
      double vert = 0.0;
      double horiz = 0.0;
      for (std::size_t t = 0; t < 12; ++t) {
        const double r = corr[t].at(cx, cy);
        if (bank().templates[t].meta.orientation == Orientation::kVertical) vert = std::max(vert, r);
        else horiz = std::max(horiz, r);
      }
      if (side == Side::kWest) EXPECT_GT(vert / horiz, 1.5) << "chip " << chip.col << "," << chip.row;
      else EXPECT_GT(horiz / vert, 1.5) << "chip " << chip.col << "," << chip.row;
    }
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(HvaLayer4, NeutralModulationIsTheNormalizedCorrelation) {
  Rng rng(2);
  const auto stack = random_stack(32, 32, bank().templates[0].weights.size(), rng);
  auto corr = hva_correlate(stack, bank());
  normalize_stack(corr);
  EXPECT_EQ(hva_layer4(stack, bank(), {}, nullptr, ReentrantGains{}), corr);
  double m = 0.0;
  for (const auto& p : corr) m = std::max(m, p.max());
  EXPECT_DOUBLE_EQ(m, 1.0);
}

TEST(HvaLayer4, PfcGainScalesMultiplicatively) {
  Rng rng(3);
  const auto stack = random_stack(32, 32, bank().templates[0].weights.size(), rng);
  const auto corr = hva_correlate(stack, bank());
  std::vector<double> gain(12, 0.0);
  gain[4] = 1.0;
  const auto mod = hva_modulate(corr, gain, nullptr, ReentrantGains{});
  const auto a = corr[4].values();
  const auto b = mod[4].values();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(b[i], 2.0 * a[i]);
  EXPECT_EQ(mod[3], corr[3]);
  // The argmax of a single template never moves.
  const auto l4 = hva_layer4(stack, bank(), gain, nullptr, ReentrantGains{});
  const auto argmax = [](const ImagePlane& p) {
    const auto v = p.values();
    return std::max_element(v.begin(), v.end()) - v.begin();
  };
  for (std::size_t t = 0; t < 12; ++t) EXPECT_EQ(argmax(l4[t]), argmax(corr[t]));
}

TEST(HvaLayer4, UniformFeedbackScalesByOnePointNine) {
  Rng rng(4);
  const auto stack = random_stack(32, 32, bank().templates[0].weights.size(), rng);
  const auto corr = hva_correlate(stack, bank());
  const ImagePlane fb(32, 32, 1.0);
  const auto mod = hva_modulate(corr, {}, &fb, ReentrantGains{});
  for (std::size_t t = 0; t < corr.size(); ++t) {
    const auto a = corr[t].values();
    const auto b = mod[t].values();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], (1.0 + 3.0 * 0.3) * a[i], 1e-12);
  }
}

TEST(HvaLayer4, TemplateLargerThanPlaneIsAnError) {
  Rng rng(5);
  const auto stack = random_stack(20, 20, bank().templates[0].weights.size(), rng);
  EXPECT_THROW(hva_correlate(stack, bank()), DataError);
}

TEST(HvaLayer4, TranslationEquivariance) {
  Rng rng(6);
  auto stack = random_stack(40, 40, bank().templates[0].weights.size(), rng);
  auto shifted = stack;
  for (std::size_t f = 0; f < stack.size(); ++f) {
    for (int y = 0; y < 40; ++y) {
      for (int x = 0; x < 40; ++x) shifted.planes[f].at(x, y) = x > 0 ? stack.planes[f].at(x - 1, y) : 0.0;
    }
  }
  const auto a = hva_correlate(stack, bank());
  const auto b = hva_correlate(shifted, bank());
  for (std::size_t t = 0; t < 12; ++t) {
    for (int y = 16; y < 24; ++y) {
      for (int x = 16; x < 24; ++x) EXPECT_NEAR(b[t].at(x + 1, y), a[t].at(x, y), 1e-9);
    }
  }
}

TEST(SoftmaxPool, SingleUnitInputGivesTwo) {
  ImagePlane p(15, 15);
  p.at(7, 7) = 1.0;
  const auto out = softmax_pool_raw(p, HVAPoolParams{});
  EXPECT_NEAR(out.at(7, 7), std::pow(16.0, 0.25), 1e-12);
  EXPECT_NEAR(out.at(7, 7), 2.0, 1e-12);
}

TEST(SoftmaxPool, ZeroInputGivesZero) {
  const auto out = hva_pool23({ImagePlane(12, 12), ImagePlane(12, 12)}, HVAPoolParams{});
  for (const auto& p : out) EXPECT_EQ(p.max(), 0.0);
}

TEST(SoftmaxPool, MatchesBruteForceOracle) {
  Rng rng(7);
  HVAPoolParams params;
  for (int trial = 0; trial < 10; ++trial) {
    ImagePlane p(11, 9);
    oracle::Grid g(11, 9);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 11; ++x) g.at(x, y) = p.at(x, y) = uniform(rng, 0.0, 1.0);
    }
    const auto out = softmax_pool_raw(p, params);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 11; ++x) {
        const double ref = oracle::power_pool(g, x, y, params.p1, params.p2, params.v_hva4, 1.0, 3);
        EXPECT_NEAR(out.at(x, y) / ref, 1.0, 1e-9);
      }
    }
  }
}

TEST(SoftmaxPool, LargerExponentFavorsTheStrongerInput) {
  // Two inputs {1.0, 0.5}: the pooled value with both present approaches the
  // value with only the larger one as p1 grows.
  auto excess = [](double p1) {
    HVAPoolParams params;
    params.p1 = p1;
    ImagePlane both(9, 9);
    both.at(4, 4) = 1.0;
    both.at(5, 4) = 0.5;
    ImagePlane one(9, 9);
    one.at(4, 4) = 1.0;
    return softmax_pool_raw(both, params).at(4, 4) / softmax_pool_raw(one, params).at(4, 4) - 1.0;
  };
  EXPECT_GT(excess(4.0), excess(8.0));
  EXPECT_GT(excess(8.0), 0.0);
}

TEST(SoftmaxPool, Pool23IsClippedToUnitRange) {
  Rng rng(8);
  std::vector<ImagePlane> l4(3, ImagePlane(16, 16));
  for (auto& p : l4) {
    for (double& v : p.values()) v = uniform(rng, 0.0, 1.0);
  }
  const auto out = hva_pool23(l4, HVAPoolParams{});
  double m = 0.0;
  for (const auto& p : out) {
    EXPECT_GE(p.min(), 0.0);
    m = std::max(m, p.max());
  }
  EXPECT_DOUBLE_EQ(m, 1.0);
}

TEST(SoftmaxPool, GaussianWeightsAreTruncatedAtThreeSigma) {
  int radius = 0;
  const auto w = pool_weights(HVAPoolParams{}, radius);
  EXPECT_EQ(radius, 3);
  ASSERT_EQ(w.size(), 49u);
  EXPECT_DOUBLE_EQ(w[24], 1.0);
  EXPECT_NEAR(w[24 + 1], std::exp(-0.5), 1e-15);
}

TEST(MaxOverPlanes, TakesTheElementwiseMaximum) {
  ImagePlane a(2, 1);
  ImagePlane b(2, 1);
  a.at(0, 0) = 0.3;
  b.at(0, 0) = 0.1;
  a.at(1, 0) = 0.2;
  b.at(1, 0) = 0.9;
  const auto m = max_over_planes({a, b});
  EXPECT_EQ(m.at(0, 0), 0.3);
  EXPECT_EQ(m.at(1, 0), 0.9);
}
