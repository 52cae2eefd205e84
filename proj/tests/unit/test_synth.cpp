#include <gtest/gtest.h>

#include <map>

#include <opencv2/core.hpp>

#include "scratch_dir.hpp"
#include "wafer/corpus.hpp"
#include "wafer/errors.hpp"
#include "wafer/synth.hpp"

using namespace wafer;
using namespace wafer::synth;

namespace {

WaferSpec small_spec(std::uint64_t seed) {
  WaferSpec s;
  s.grid_cols = 6;
  s.grid_rows = 6;
  s.wafer_radius_chips = 3.6;
  s.chip_px = 200;
  s.street_width_px = 8;
  s.fault_rate = 0.2;
  s.anomaly_rate = 0.1;
  s.seed = seed;
  return s;
}

bool identical(const cv::Mat& a, const cv::Mat& b) {
  return a.size() == b.size() && a.type() == b.type() && cv::countNonZero(a != b) == 0;
}

}  // namespace

TEST(Synth, SameSeedGivesIdenticalPixels) {
  const auto a = generate_wafer(small_spec(1));
  const auto b = generate_wafer(small_spec(1));
  EXPECT_TRUE(identical(a.image, b.image));
  EXPECT_TRUE(identical(a.kerf_mask, b.kerf_mask));
  ASSERT_EQ(a.truth.chips.size(), b.truth.chips.size());
  for (std::size_t i = 0; i < a.truth.chips.size(); ++i) {
    EXPECT_EQ(a.truth.chips[i].label, b.truth.chips[i].label);
    EXPECT_EQ(a.truth.chips[i].crop, b.truth.chips[i].crop);
  }
}

TEST(Synth, DifferentSeedsDiffer) {
  EXPECT_FALSE(identical(generate_wafer(small_spec(1)).image, generate_wafer(small_spec(2)).image));
}

TEST(Synth, ZeroRatesGiveOnlyGoodSegments) {
  auto s = small_spec(3);
  s.fault_rate = 0.0;
  s.anomaly_rate = 0.0;
  const auto counts = segment_class_counts(s);
  EXPECT_EQ(counts[1], 0);
  EXPECT_EQ(counts[2], 0);
  for (const auto& chip : generate_wafer(s).truth.chips) EXPECT_EQ(chip.label, StreetClass::kGood);
}

TEST(Synth, ClassRatioMatchesReferenceData) {
  // 92.2 : 3.7 : 4.1 within one percentage point over >= 10 000 segments.
  WaferSpec s;
  s.grid_cols = 80;
  s.grid_rows = 80;
  s.chip_px = 200;
  s.wafer_radius_chips = 40;
  s.seed = 17;
  const auto c = segment_class_counts(s);
  const double total = static_cast<double>(c[0] + c[1] + c[2]);
  ASSERT_GE(total, 10000.0);
  EXPECT_NEAR(100.0 * c[0] / total, 92.2, 1.0);
  EXPECT_NEAR(100.0 * c[1] / total, 3.7, 1.0);
  EXPECT_NEAR(100.0 * c[2] / total, 4.1, 1.0);
}

TEST(Synth, FourSegmentsPerInsideChip) {
  const auto w = generate_wafer(small_spec(4));
  int inside = 0;
  for (const auto& chip : w.truth.chips) {
    if (chip.border) continue;
    ++inside;
    for (Side side : kAllSides) {
      const auto& st = chip.streets[static_cast<std::size_t>(side)];
      EXPECT_EQ(st.side, side);
      EXPECT_EQ(st.orientation, street_orientation(side));
    }
  }
  EXPECT_EQ(inside, w.truth.inside_count);
  EXPECT_GT(inside, 0);
}

TEST(Synth, KerfLeavesTheStreetExactlyOnBadSegments) {
  const auto spec = small_spec(5);
  const auto w = generate_wafer(spec);
  const WaferGeometry g(spec);
  const int sw = spec.street_width_px;
  int bad = 0;
  int good = 0;
  for (const auto& chip : w.truth.chips) {
    if (chip.border) continue;
    const cv::Rect rect = g.chip_rect(chip.col, chip.row);
    for (Side side : kAllSides) {
      const auto& st = chip.streets[static_cast<std::size_t>(side)];
      const bool horizontal = st.orientation == Orientation::kHorizontal;
      const std::uint8_t bit = horizontal ? 1 : 2;
      int band_start = 0;
      if (side == Side::kNorth) band_start = g.street_start_y(chip.row);
      if (side == Side::kSouth) band_start = g.street_start_y(chip.row + 1);
      if (side == Side::kWest) band_start = g.street_start_x(chip.col);
      if (side == Side::kEast) band_start = g.street_start_x(chip.col + 1);
      const int along0 = horizontal ? rect.x : rect.y;
      const int along1 = along0 + (horizontal ? rect.width : rect.height);
      long outside = 0;
      for (int t = along0; t < along1; ++t) {
        for (int k = band_start - 3 * sw; k < band_start + 4 * sw; ++k) {
          if (k >= band_start && k < band_start + sw) continue;
          const int x = horizontal ? t : k;
          const int y = horizontal ? k : t;
          if (x < 0 || y < 0 || x >= w.kerf_mask.cols || y >= w.kerf_mask.rows) continue;
          if (w.kerf_mask.at<std::uint8_t>(y, x) & bit) ++outside;
        }
      }
      if (st.label == StreetClass::kBad) {
        ++bad;
        EXPECT_GT(outside, 0) << "bad segment without excursion";
      } else {
        ++good;
        EXPECT_EQ(outside, 0) << "kerf outside a non-bad street";
      }
    }
  }
  EXPECT_GT(bad, 0);
  EXPECT_GT(good, 0);
}

TEST(Synth, TinyDiskMakesEveryChipBorder) {
  auto s = small_spec(6);
  s.wafer_radius_chips = 0.6;
  const auto w = generate_wafer(s);
  EXPECT_EQ(w.truth.inside_count, 0);
  EXPECT_FALSE(w.truth.warnings.empty());
}

TEST(Synth, InvalidSpecIsAConfigError) {
  auto s = small_spec(7);
  s.street_width_px = 2;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(7);
  s.chip_px = 100;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Corpus, StratifiedSplitIsHalfQuarterQuarter) {
  for (std::size_t n : {1u, 2u, 3u, 7u, 40u, 101u}) {
    const auto split = stratified_split(n, 3);
    std::map<Split, double> count;
    for (auto s : split) count[s] += 1.0;
    EXPECT_LE(std::abs(count[Split::kTrain] - 0.50 * n), 1.0) << n;
    EXPECT_LE(std::abs(count[Split::kVal] - 0.25 * n), 1.0) << n;
    EXPECT_LE(std::abs(count[Split::kTest] - 0.25 * n), 1.0) << n;
  }
}

TEST(Corpus, GeneratesManifestWithExistingFilesAndStratifiedChips) {
  testing_support::ScratchDir dir("corpus");
  const auto spec = parse_corpus_spec(R"(
seed = 3
[defaults]
grid_cols = 6
grid_rows = 6
wafer_radius_chips = 3.6
chip_px = 200
fault_rate = 0.2
[[wafer]]
[[wafer]]
polarity = "light-street"
street_width_px = 6
)");
  const auto m = generate_corpus(spec, dir.path());
  const auto back = read_manifest(dir / "manifest.jsonl", true);
  EXPECT_EQ(back.records.size(), m.records.size());
  std::map<int, std::map<Split, double>> per_group;
  for (const auto& r : m.records) {
    if (!r.is_chip()) continue;
    per_group[r.border ? 3 : r.label][r.split] += 1.0;
  }
  for (const auto& [group, counts] : per_group) {
    double n = 0.0;
    for (const auto& [s, c] : counts) n += c;
    EXPECT_LE(std::abs(counts.at(Split::kTrain) - 0.5 * n), 1.0) << group;
  }
  // Street rows follow their chip.
  std::map<std::tuple<int, int, int>, Split> chip_split;
  for (const auto& r : m.records) {
    if (r.is_chip()) chip_split[{r.wafer_id, r.chip_col, r.chip_row}] = r.split;
  }
  for (const auto& r : m.records) {
    if (!r.is_chip()) {
      EXPECT_EQ(r.split, (chip_split[{r.wafer_id, r.chip_col, r.chip_row}]));
    }
  }
}

TEST(Corpus, UnknownKeyIsAConfigError) {
  EXPECT_THROW(parse_corpus_spec("seed = 1\n[defaults]\nchip_size = 3\n"), ConfigError);
  EXPECT_THROW(parse_corpus_spec("seed = 1\n[[wafer]]\npolarity = \"purple\"\n"), ConfigError);
}
