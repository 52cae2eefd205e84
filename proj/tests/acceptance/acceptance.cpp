// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "shape_goldens.hpp"
#include "wafer/attention.hpp"
#include "wafer/config.hpp"
#include "wafer/corpus.hpp"
#include "wafer/fef.hpp"
#include "wafer/hva.hpp"
#include "wafer/manifest.hpp"
#include "wafer/nn/checkpoint.hpp"
#include "wafer/nn/network.hpp"
#include "wafer/nn/spec.hpp"
#include "wafer/nn/trainer.hpp"
#include "wafer/pipeline.hpp"
#include "wafer/roi.hpp"
#include "wafer/synth.hpp"
#include "wafer/templates.hpp"

namespace fs = std::filesystem;
using namespace wafer;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  fs::path configs;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// 1. Layer shapes of both networks against the reference tables.
Outcome shape_goldens(const Context&) {
  Stopwatch clock;
  int rows = 0;
  int mismatches = 0;
  auto check = [&](const nn::NetworkSpec& spec, const std::vector<testing_support::ShapeRow>& golden) {
    const auto shapes = nn::infer_shapes(spec);
    if (shapes.size() != golden.size()) ++mismatches;
    for (std::size_t i = 0; i < std::min(shapes.size(), golden.size()); ++i) {
      ++rows;
      const auto& s = shapes[i];
      const auto& g = golden[i];
      if (s.name != g.name || s.h != g.h || s.w != g.w || s.c != g.c) ++mismatches;
    }
  };
  check(nn::street_network(), testing_support::street_shape_rows());
  check(nn::chip_network(), testing_support::chip_shape_rows());
  const double t = clock.seconds();
  return {mismatches == 0 && t < 1.0, fmt("%d rows, %d mismatches, %.3f s (limit 1 s)", rows, mismatches, t)};
}

// 2. FEF coupling factors, IOR update and Gaussian points.
Outcome dynamics_arithmetic(const Context&) {
  Stopwatch clock;
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  ImagePlane e(8, 8, 0.4);
  AttentionContext fresh(8, 8);
  track(fef_drive(e, fresh).at(3, 3), 0.4);

  AttentionContext suppressed(8, 8);
  suppressed.set_external(ImagePlane(8, 8, -0.25));
  track(fef_drive(e, suppressed).at(3, 3), 0.2);

  AttentionContext inhibited(8, 8);
  inhibited.ior.at(2, 5) = -0.5;
  track(fef_drive(e, inhibited).at(2, 5), 0.0);

  AttentionContext ior(32, 32);
  track(ior.ior.at(16, 16), 0.25);
  apply_ior(ior, 16, 16);
  track(ior.ior.at(16, 16), -0.5);
  const double sigma = 32.0 / 6.0;
  track(ior.ior.at(20, 13), 0.25 - 0.75 * std::exp(-(16.0 + 9.0) / (2.0 * sigma * sigma)));

  const auto g = gaussian_blob(10.0, 12.0, 0.7, 2.0, 3.0, 24, 24);
  for (int y = 0; y < 24; y += 3) {
    for (int x = 0; x < 24; x += 2) {
      const double dx = x - 10.0;
      const double dy = y - 12.0;
      track(g.at(x, y), 0.7 * std::exp(-(dx * dx / 8.0 + dy * dy / 18.0)));
    }
  }
  const double t = clock.seconds();
  return {worst <= 1e-9 && t < 1.0, fmt("max abs error %.2e (limit 1e-9), %.3f s (limit 1 s)", worst, t)};
}

// 3. Power-sum pooling against a brute-force evaluation, and its max limit.
Outcome pooling_oracle(const Context&) {
  Stopwatch clock;
  Rng rng(303);
  HVAPoolParams params;
  double worst_rel = 0.0;
  double worst_limit = 0.0;
  double worst_plain = 0.0;
  HVAPoolParams sharp = params;
  sharp.p1 = 64.0;
  sharp.p2 = 1.0 / 64.0;
  for (int stack = 0; stack < 100; ++stack) {
    const int w = 12 + stack % 7;
    const int h = 10 + stack % 5;
    for (int plane = 0; plane < 3; ++plane) {
      ImagePlane p(w, h);
      oracle::Grid grid(w, h);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) grid.at(x, y) = p.at(x, y) = uniform(rng, 0.0, 1.0);
      }
      const auto pooled = softmax_pool_raw(p, params);
      const auto limit = softmax_pool_raw(p, sharp);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double ref = oracle::power_pool(grid, x, y, params.p1, params.p2, params.v_hva4, params.sigma, 3);
          worst_rel = std::max(worst_rel, std::abs(pooled.at(x, y) / ref - 1.0));
          const double scale = std::pow(sharp.v_hva4, sharp.p2);
          const double weighted = scale * oracle::rf_weighted_max(grid, x, y, sharp.p1, sharp.sigma, 3);
          const double plain = scale * oracle::rf_max(grid, x, y, 3);
          worst_limit = std::max(worst_limit, std::abs(limit.at(x, y) / weighted - 1.0));
          worst_plain = std::max(worst_plain, std::abs(limit.at(x, y) / plain - 1.0));
        }
      }
    }
  }
  const double t = clock.seconds();
  const bool pass = worst_rel <= 1e-6 && worst_limit <= 0.05 && t < 10.0;
  return {pass, fmt("oracle rel error %.2e (limit 1e-6); p1=64 vs scaled max %.2f%% (limit 5%%; "
                    "unweighted receptive-field max %.2f%%); %.2f s (limit 10 s)",
                    worst_rel, 100.0 * worst_limit, 100.0 * worst_plain, t)};
}

struct Corpus4 {
  int chips = 0;
  int streets = 0;
  int found = 0;
  int off_street = 0;
  int short_plans = 0;
  PrecisionStats precision;
  double min_separation_cells = 1e9;
  int close_pairs = 0;
  int central_fixations = 0;
  int central_checked_chips = 0;
  double seconds = 0.0;
};

// Eight wafers of mixed chip size, street width, polarity and structure
// density, processed until 200 inside chips are seen.
Corpus4 attention_corpus() {
  Corpus4 c;
  Stopwatch clock;
  const auto bank = learn_default_bank();
  AttentionParams params;
  const int grid = 32;
  const auto suppression = central_suppression(grid, grid);
  std::vector<cv::Point2d> fixations;
  std::vector<cv::Point2d> truth;
  for (int w = 0; w < 8 && c.chips < 200; ++w) {
    synth::WaferSpec s;
    s.grid_cols = s.grid_rows = 6;
    s.wafer_radius_chips = 5.0;
    s.chip_px = 200 + 30 * w;
    s.street_width_px = 4 + (w % 4) * 3;
    s.polarity = w % 2 ? Polarity::kLightStreet : Polarity::kDarkStreet;
    s.inner_structure_density = 0.3 + 0.1 * (w % 6);
    s.seed = 100 + static_cast<std::uint64_t>(w);
    const auto wafer = synth::generate_wafer(s);
    for (const auto& chip : wafer.truth.chips) {
      if (chip.border || c.chips >= 200) continue;
      ++c.chips;
      const cv::Mat img = synth::chip_image(wafer, chip);
      const auto plan = find_streets(img, bank, s.chip_px, params, &suppression);
      if (static_cast<int>(plan.fixations.size()) != params.n_saccades) ++c.short_plans;
      for (Side side : kAllSides) {
        ++c.streets;
        const Fixation* f = plan.on_side(side);
        if (!f) continue;
        const auto roi = extract_roi(img, f->pixel, side, s.street_width_px, s.chip_px);
        if (!roi.valid) continue;
        ++c.found;
        const auto& st = chip.streets[static_cast<std::size_t>(side)];
        fixations.push_back(f->pixel);
        truth.push_back({st.center_x, st.center_y});
        const bool horizontal = side == Side::kNorth || side == Side::kSouth;
        const double across = horizontal ? f->pixel.y - st.center_y : f->pixel.x - st.center_x;
        if (std::abs(across) > s.street_width_px) ++c.off_street;
      }
      for (std::size_t i = 0; i < plan.fixations.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.fixations.size(); ++j) {
          const auto& a = plan.fixations[i];
          const auto& b = plan.fixations[j];
          const double d = std::hypot(a.cell_x - b.cell_x, a.cell_y - b.cell_y);
          c.min_separation_cells = std::min(c.min_separation_cells, d);
          if (d <= grid * params.ior.sigma_fraction) ++c.close_pairs;
        }
      }
      if (c.central_checked_chips < 100) {
        ++c.central_checked_chips;
        for (const auto& f : plan.fixations) {
          if (in_center_box(f.normalized, params)) ++c.central_fixations;
        }
      }
    }
  }
  c.precision = measure_precision(fixations, truth);
  c.seconds = clock.seconds();
  return c;
}

const Corpus4& shared_attention_corpus() {
  static const Corpus4 corpus = attention_corpus();
  return corpus;
}

// 4. Street-found rate and center precision on 200 chips.
Outcome attention_localization(const Context&) {
  const auto& c = shared_attention_corpus();
  const double rate = c.streets ? static_cast<double>(c.found) / c.streets : 0.0;
  const auto& p = c.precision;
  const bool pass = c.chips == 200 && rate >= 0.95 && std::abs(p.x.mean) <= 2.0 && std::abs(p.y.mean) <= 2.0 &&
                    p.x.stddev <= 5.0 && p.y.stddev <= 5.0 && c.seconds <= 600.0;
  return {pass, fmt("%d chips, found %d/%d = %.2f%% (limit 95%%), %d off the street band; mean %.2f/%.2f px "
                    "(limit 2), std %.2f/%.2f px (limit 5); %.1f s (limit 600 s)",
                    c.chips, c.found, c.streets, 100.0 * rate, c.off_street, p.x.mean, p.y.mean, p.x.stddev,
                    p.y.stddev, c.seconds)};
}

// 5. Fixation spacing and the empty central box.
Outcome ior_behavior(const Context&) {
  const auto& c = shared_attention_corpus();
  const double sigma = 32.0 * AttentionParams{}.ior.sigma_fraction;
  const bool pass = c.close_pairs == 0 && c.short_plans == 0 && c.central_fixations == 0 &&
                    c.central_checked_chips == 100;
  return {pass, fmt("min pairwise separation %.2f cells (must exceed sigma %.2f), %d close pairs, %d chips with "
                    "fewer than 4 fixations; %d fixations in the central box over %d chips",
                    c.min_separation_cells, sigma, c.close_pairs, c.short_plans, c.central_fixations,
                    c.central_checked_chips)};
}

// 6. Finite-difference gradient check and a 16-sample overfit.
Outcome gradient_check(const Context&) {
  Stopwatch clock;
  nn::Network<double> net(nn::tiny_network(3), 601);
  Rng rng(602);
  nn::Tensor4<double> x(3, 8, 8, 1);
  for (auto& v : x.data) v = uniform(rng, -1.0, 1.0);
  const std::vector<int> labels{0, 1, 2};
  net.zero_grad();
  std::vector<double> d;
  nn::cross_entropy(net.forward(x), labels, 3, &d);
  net.backward(d);
  double worst = 0.0;
  const int sampled = 40;
  auto& params = net.params();
  for (int k = 0; k < sampled; ++k) {
    auto& p = params[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(params.size()) - 1))];
    const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(p.value.size()) - 1));
    const double h = 1e-5;
    const double saved = p.value[i];
    p.value[i] = saved + h;
    const double up = nn::cross_entropy(net.forward(x), labels, 3);
    p.value[i] = saved - h;
    const double down = nn::cross_entropy(net.forward(x), labels, 3);
    p.value[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max(1e-6, std::abs(numeric) + std::abs(p.grad[i]));
    worst = std::max(worst, std::abs(numeric - p.grad[i]) / denom);
  }

  nn::Network<float> fit(nn::tiny_network(3), 603);
  nn::Tensor4<float> batch(16, 8, 8, 1);
  for (auto& v : batch.data) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  std::vector<int> targets(16);
  for (int i = 0; i < 16; ++i) targets[static_cast<std::size_t>(i)] = i % 3;
  int steps = 0;
  int correct = 0;
  for (steps = 1; steps <= 200; ++steps) {
    fit.train_step(batch, targets, nn::SgdConfig{0.05, 0.9}, rng);
    const auto logits = fit.forward(batch);
    correct = 0;
    for (int i = 0; i < 16; ++i) {
      const float* row = logits.data() + i * 3;
      if (std::max_element(row, row + 3) - row == targets[static_cast<std::size_t>(i)]) ++correct;
    }
    if (correct == 16) break;
  }
  const double t = clock.seconds();
  const bool pass = worst <= 1e-3 && correct == 16 && steps <= 200 && t < 120.0;
  return {pass, fmt("%d parameters, max rel error %.2e (limit 1e-3); overfit %d/16 after %d steps (limit 200); "
                    "%.2f s (limit 120 s)",
                    sampled, worst, correct, std::min(steps, 200), t)};
}

DatasetManifest generate(const fs::path& spec_path, const fs::path& out) {
  auto spec = synth::load_corpus_spec(spec_path);
  fs::remove_all(out);
  return synth::generate_corpus(spec, out);
}

// 7. Border/inside chip classifier.
Outcome border_classifier(const Context& ctx) {
  const fs::path data = ctx.work / "border_data";
  const auto chips = generate(ctx.configs / "corpus_border.toml", data);
  PipelineConfig config;
  Stopwatch clock;
  auto model = train_border_model(chips, data, config, nullptr, ctx.work / "border_log.jsonl");
  const double train_s = clock.seconds();
  const auto test = border_samples(chips, data, Split::kTest, false);
  const Confusion c = nn::evaluate(model.network, test);
  const bool pass = c.accuracy() >= 0.99 && train_s <= 300.0;
  return {pass, fmt("test accuracy %.2f%% over %ld chips (%ld border, limit 99%%), border recall %.2f%%, "
                    "inside recall %.2f%%; training %.1f s (limit 300 s)",
                    100.0 * c.accuracy(), c.total(), c.row_total(1), 100.0 * c.recall(1), 100.0 * c.recall(0),
                    train_s)};
}

// 8. Attention + street CNN versus the whole-chip CNN over three seeds.
Outcome attention_benefit(const Context& ctx) {
  Stopwatch clock;
  const fs::path data = ctx.work / "benefit_data";
  const auto chips = generate(ctx.configs / "corpus_benefit.toml", data);
  long inside = 0;
  for (const auto& r : chips.records) inside += (r.is_chip() && !r.border) ? 1 : 0;
  const auto config = load_config(ctx.configs / "benefit_train.toml");
  const auto report = ablate_attention(chips, data, learn_default_bank(config.v1), config, {1, 2, 3},
                                       ctx.work / "benefit_out");
  std::string runs;
  for (const auto& r : report.runs) {
    runs += fmt(" [seed %llu: macro %.3f vs %.3f, fault recall %.3f vs %.3f]",
                static_cast<unsigned long long>(r.seed), r.attention.macro, r.whole_chip.macro,
                r.attention.fault_detection, r.whole_chip.fault_detection);
  }
  const double t = clock.seconds();
  const bool pass = inside >= 2000 && report.mean_macro_delta() >= 0.05 && report.mean_fault_delta() >= 0.10 &&
                    t <= 7200.0;
  return {pass, fmt("%ld inside chips, streets found %.2f%%; mean macro delta %+.3f (limit +0.05), mean fault "
                    "recall delta %+.3f (limit +0.10); %.0f s (limit 7200 s);",
                    inside, 100.0 * report.street_found_rate, report.mean_macro_delta(),
                    report.mean_fault_delta(), t) +
                    runs};
}

// Generate, learn, extract, train and run on the small corpus.
void end_to_end(const Context& ctx, const fs::path& root) {
  fs::remove_all(root);
  const fs::path data = root / "data";
  const auto chips = generate(ctx.configs / "corpus_small.toml", data);
  PipelineConfig config;
  for (auto* t : {&config.street_train, &config.border_train}) {
    t->max_epochs = 2;
    t->samples_per_epoch = 128;
  }
  const auto bank = learn_default_bank(config.v1);
  save_bank(root / "models" / "templates.wbank", bank);
  const auto extracted = extract_rois(chips, data, bank, config, root / "rois", "all");
  write_manifest(root / "rois" / "rois.jsonl", extracted.rois);
  nn::save_model(root / "models" / "border.wmdl",
                 train_border_model(chips, data, config, nullptr, root / "models" / "border_log.jsonl"));
  nn::save_model(root / "models" / "street.wmdl",
                 train_street_model(extracted.rois, root / "rois", config, nullptr,
                                    root / "models" / "street_log.jsonl"));
  auto models = load_models(root / "models");
  run_pipeline(chips, data, models, config, root / "run");
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).generic_string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

// 9. Two identical runs produce identical bytes.
Outcome determinism(const Context& ctx) {
  end_to_end(ctx, ctx.work / "run_a");
  end_to_end(ctx, ctx.work / "run_b");
  const auto a = read_tree(ctx.work / "run_a");
  const auto b = read_tree(ctx.work / "run_b");
  int differing = 0;
  std::string first;
  std::set<std::string> names;
  for (const auto& [k, v] : a) names.insert(k);
  for (const auto& [k, v] : b) names.insert(k);
  for (const auto& name : names) {
    const auto ia = a.find(name);
    const auto ib = b.find(name);
    if (ia == a.end() || ib == b.end() || ia->second != ib->second) {
      ++differing;
      if (first.empty()) first = name;
    }
  }
  const bool essentials = a.count("run/verdicts.jsonl") && a.count("run/metrics.json") &&
                          a.count("data/manifest.jsonl") && a.count("run/wafer_map_w0.png");
  return {differing == 0 && essentials,
          fmt("%zu files compared (manifests, metrics, maps, models, ROIs), %d differ%s%s", names.size(), differing,
              first.empty() ? "" : ", first: ", first.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "waferscope_acceptance").string();
  std::string configs = WAFERSCOPE_CONFIG_DIR;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--work", work, "scratch directory");
  app.add_option("--configs", configs, "directory with corpus and training configs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria{
      {"shape goldens", shape_goldens},
      {"dynamics arithmetic", dynamics_arithmetic},
      {"soft-max pooling oracle", pooling_oracle},
      {"attention localization", attention_localization},
      {"inhibition of return", ior_behavior},
      {"gradient check and overfit", gradient_check},
      {"border classifier", border_classifier},
      {"attention benefit", attention_benefit},
      {"determinism", determinism},
  };
  if (only.empty()) {
    for (std::size_t i = 1; i <= criteria.size(); ++i) only.push_back(static_cast<int>(i));
  }
  Context ctx{work, configs};
  fs::create_directories(ctx.work);
  int failures = 0;
  for (int id : only) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(id - 1)];
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
