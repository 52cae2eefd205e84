#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wafer/manifest.hpp"
#include "wafer/synth.hpp"

namespace wafer::synth {

// A set of wafers rendered into one dataset. Each wafer overrides the
// defaults; its seed is derived from the corpus seed unless given.
struct CorpusSpec {
  std::uint64_t seed = 1;
  std::vector<WaferSpec> wafers;
  bool write_wafer_images = false;
  unsigned workers = 0;  // 0: hardware concurrency
};

// TOML layout:
//   seed = 7
//   write_wafer_images = false
//   [defaults]            # any WaferSpec key
//   chip_px = 240
//   [[wafer]]             # one table per wafer, overriding defaults
//   polarity = "light-street"
// Throws ConfigError on unknown keys or bad values.
CorpusSpec parse_corpus_spec(const std::string& toml_text);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

// JSON echo of a spec, stored in the manifest header.
std::string spec_to_json(const CorpusSpec& spec);

// Renders every wafer, writes chip images (chips/), optional wafer images
// (wafers/) and manifest.jsonl into `out_dir`, and returns the manifest.
// Chips are split 50/25/25 per chip class (border chips form their own
// group); street rows inherit the split of their chip.
DatasetManifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

// Stratified split of `count` items into train/val/test, deterministic in
// `seed`. Exposed for testing.
std::vector<Split> stratified_split(std::size_t count, std::uint64_t seed);

}  // namespace wafer::synth
