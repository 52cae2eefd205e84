#include <array>
#include <iostream>

#include "common.hpp"
#include "wafer/corpus.hpp"

namespace {

void summarize(const wafer::DatasetManifest& m) {
  long chips = 0;
  long border = 0;
  std::array<long, 3> streets{0, 0, 0};
  for (const auto& r : m.records) {
    if (r.is_chip()) {
      ++chips;
      border += r.border ? 1 : 0;
    } else {
      ++streets[static_cast<std::size_t>(r.label)];
    }
  }
  const long total = streets[0] + streets[1] + streets[2];
  std::cout << "chips " << chips << " (border " << border << "), street segments " << total << '\n';
  if (total > 0) {
    const char* names[] = {"good", "anomaly", "bad"};
    for (int k = 0; k < 3; ++k) {
      std::cout << "  " << names[k] << ' ' << streets[static_cast<std::size_t>(k)] << " ("
                << 100.0 * static_cast<double>(streets[static_cast<std::size_t>(k)]) / static_cast<double>(total)
                << " %)\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic wafer generator"};
  app.require_subcommand(1);
  std::string spec_path;
  std::string out_dir;
  unsigned workers = 0;
  auto* gen = app.add_subcommand("generate", "render a corpus from a spec file");
  gen->add_option("--spec", spec_path, "corpus spec (TOML)")->required();
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--workers", workers, "worker threads (0: all cores)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return tools::parse_failure(app, e);
  }
  return tools::guarded("synth", [&] {
    auto spec = wafer::synth::load_corpus_spec(spec_path);
    if (workers) spec.workers = workers;
    const auto manifest = wafer::synth::generate_corpus(spec, out_dir);
    summarize(manifest);
  });
}
