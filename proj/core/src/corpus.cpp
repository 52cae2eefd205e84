#include "wafer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "toml.hpp"
#include "wafer/errors.hpp"
#include "wafer/image.hpp"
#include "wafer/parallel.hpp"
#include "wafer/rng.hpp"

namespace wafer::synth {
namespace {

constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kWaferSeedStream = 12;

template <typename T>
T get_number(const toml::node& node, const std::string& key) {
  if constexpr (std::is_integral_v<T>) {
    if (auto v = node.value<std::int64_t>()) return static_cast<T>(*v);
  } else {
    if (auto v = node.value<double>()) return static_cast<T>(*v);
  }
  throw ConfigError("corpus spec: bad value for '" + key + "'");
}

void apply_table(const toml::table& table, WaferSpec& spec, bool& seed_given) {
  for (const auto& [k, node] : table) {
    const std::string key(k.str());
    if (key == "grid_cols") spec.grid_cols = get_number<int>(node, key);
    else if (key == "grid_rows") spec.grid_rows = get_number<int>(node, key);
    else if (key == "chip_px") spec.chip_px = get_number<int>(node, key);
    else if (key == "street_width_px") spec.street_width_px = get_number<int>(node, key);
    else if (key == "inner_structure_density") spec.inner_structure_density = get_number<double>(node, key);
    else if (key == "wafer_radius_chips") spec.wafer_radius_chips = get_number<double>(node, key);
    else if (key == "noise_sigma") spec.noise_sigma = get_number<double>(node, key);
    else if (key == "anomaly_rate") spec.anomaly_rate = get_number<double>(node, key);
    else if (key == "fault_rate") spec.fault_rate = get_number<double>(node, key);
    else if (key == "fault_offset_min") spec.fault_offset_min = get_number<double>(node, key);
    else if (key == "fault_offset_max") spec.fault_offset_max = get_number<double>(node, key);
    else if (key == "fault_half_length_min") spec.fault_half_length_min = get_number<double>(node, key);
    else if (key == "fault_half_length_max") spec.fault_half_length_max = get_number<double>(node, key);
    else if (key == "crop_jitter") spec.crop_jitter = get_number<double>(node, key);
    else if (key == "seed") {
      spec.seed = get_number<std::uint64_t>(node, key);
      seed_given = true;
    } else if (key == "polarity") {
      const auto v = node.value<std::string>();
      if (v == "dark-street") spec.polarity = Polarity::kDarkStreet;
      else if (v == "light-street") spec.polarity = Polarity::kLightStreet;
      else throw ConfigError("corpus spec: polarity must be 'dark-street' or 'light-street'");
    } else {
      throw ConfigError("corpus spec: unknown key '" + key + "'");
    }
  }
}

nlohmann::ordered_json wafer_json(const WaferSpec& w) {
  nlohmann::ordered_json j;
  j["grid_cols"] = w.grid_cols;
  j["grid_rows"] = w.grid_rows;
  j["chip_px"] = w.chip_px;
  j["street_width_px"] = w.street_width_px;
  j["polarity"] = polarity_name(w.polarity);
  j["inner_structure_density"] = w.inner_structure_density;
  j["wafer_radius_chips"] = w.wafer_radius_chips;
  j["noise_sigma"] = w.noise_sigma;
  j["seed"] = w.seed;
  j["anomaly_rate"] = w.anomaly_rate;
  j["fault_rate"] = w.fault_rate;
  j["fault_offset"] = {w.fault_offset_min, w.fault_offset_max};
  j["fault_half_length"] = {w.fault_half_length_min, w.fault_half_length_max};
  j["crop_jitter"] = w.crop_jitter;
  return j;
}

std::string chip_file(int wafer, int col, int row) {
  std::ostringstream s;
  s << "chips/w" << wafer << "_c" << col << "_r" << row << ".png";
  return s.str();
}

}  // namespace

CorpusSpec parse_corpus_spec(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "corpus spec: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  CorpusSpec spec;
  WaferSpec defaults;
  bool defaults_seed = false;
  for (const auto& [k, node] : root) {
    const std::string key(k.str());
    if (key == "seed") spec.seed = get_number<std::uint64_t>(node, key);
    else if (key == "workers") spec.workers = get_number<unsigned>(node, key);
    else if (key == "write_wafer_images") spec.write_wafer_images = node.value<bool>().value_or(false);
    else if (key == "defaults") {
      if (!node.is_table()) throw ConfigError("corpus spec: [defaults] must be a table");
      apply_table(*node.as_table(), defaults, defaults_seed);
    } else if (key == "wafer") {
      // handled below, after defaults are known
    } else {
      throw ConfigError("corpus spec: unknown key '" + key + "'");
    }
  }
  if (const auto* arr = root["wafer"].as_array()) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto* t = (*arr)[i].as_table();
      if (!t) throw ConfigError("corpus spec: [[wafer]] entries must be tables");
      WaferSpec w = defaults;
      bool seed_given = false;
      apply_table(*t, w, seed_given);
      if (!seed_given) w.seed = mix_seed(spec.seed, kWaferSeedStream, i);
      w.validate();
      spec.wafers.push_back(w);
    }
  }
  if (spec.wafers.empty()) {
    WaferSpec w = defaults;
    if (!defaults_seed) w.seed = mix_seed(spec.seed, kWaferSeedStream, 0);
    w.validate();
    spec.wafers.push_back(w);
  }
  return spec;
}

CorpusSpec load_corpus_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus spec: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus_spec(buf.str());
}

std::string spec_to_json(const CorpusSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["write_wafer_images"] = spec.write_wafer_images;
  j["wafers"] = nlohmann::ordered_json::array();
  for (const auto& w : spec.wafers) j["wafers"].push_back(wafer_json(w));
  return j.dump();
}

std::vector<Split> stratified_split(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::lround(0.5 * static_cast<double>(count)));
  const auto n_val = std::min(count - n_train,
                              static_cast<std::size_t>(std::lround(0.25 * static_cast<double>(count))));
  std::vector<Split> out(count, Split::kTest);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    out[i] = k < n_train ? Split::kTrain : (k < n_train + n_val ? Split::kVal : Split::kTest);
  }
  return out;
}

DatasetManifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "chips");
  if (spec.write_wafer_images) std::filesystem::create_directories(out_dir / "wafers");

  std::vector<GroundTruth> truths(spec.wafers.size());
  parallel_for(spec.wafers.size(), spec.workers ? spec.workers : default_workers(),
               [&](std::size_t w) {
                 SyntheticWafer wafer = generate_wafer(spec.wafers[w]);
                 for (const auto& chip : wafer.truth.chips) {
                   write_png(out_dir / chip_file(static_cast<int>(w), chip.col, chip.row),
                             chip_image(wafer, chip));
                 }
                 if (spec.write_wafer_images) {
                   write_png(out_dir / ("wafers/w" + std::to_string(w) + ".png"), wafer.image);
                 }
                 truths[w] = std::move(wafer.truth);
               });

  // Split per group: chip class 0/1/2 for inside chips, one group for border chips.
  std::map<int, std::vector<std::pair<std::size_t, std::size_t>>> groups;
  for (std::size_t w = 0; w < truths.size(); ++w) {
    for (std::size_t c = 0; c < truths[w].chips.size(); ++c) {
      const auto& chip = truths[w].chips[c];
      groups[chip.border ? 3 : static_cast<int>(chip.label)].emplace_back(w, c);
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, Split> split_of;
  for (const auto& [group, members] : groups) {
    const auto splits = stratified_split(members.size(), mix_seed(spec.seed, kSplitStream,
                                                                  static_cast<std::uint64_t>(group)));
    for (std::size_t i = 0; i < members.size(); ++i) split_of[members[i]] = splits[i];
  }

  DatasetManifest manifest;
  manifest.generator = spec_to_json(spec);
  for (std::size_t w = 0; w < truths.size(); ++w) {
    const auto& ws = spec.wafers[w];
    for (std::size_t c = 0; c < truths[w].chips.size(); ++c) {
      const auto& chip = truths[w].chips[c];
      ManifestRecord rec;
      rec.image_path = chip_file(static_cast<int>(w), chip.col, chip.row);
      rec.wafer_id = static_cast<int>(w);
      rec.chip_col = chip.col;
      rec.chip_row = chip.row;
      rec.side = "chip";
      rec.label = chip.border ? 0 : static_cast<int>(chip.label);
      rec.split = split_of.at({w, c});
      rec.border = chip.border;
      rec.chip_px = ws.chip_px;
      rec.street_width_px = ws.street_width_px;
      manifest.records.push_back(rec);
      if (chip.border) continue;
      for (Side side : kAllSides) {
        const auto& st = chip.streets[static_cast<int>(side)];
        ManifestRecord s = rec;
        s.side = std::string(side_name(side));
        s.label = static_cast<int>(st.label);
        s.truth_x = st.center_x;
        s.truth_y = st.center_y;
        manifest.records.push_back(s);
      }
    }
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace wafer::synth
