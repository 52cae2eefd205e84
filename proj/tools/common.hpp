#pragma once

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wafer/config.hpp"
#include "wafer/errors.hpp"

namespace tools {

// Runs a tool body and maps library errors onto process exit codes.
template <typename Fn>
int guarded(const char* tool, Fn&& body) {
  try {
    body();
    return static_cast<int>(wafer::ExitCode::kOk);
  } catch (const wafer::ConfigError& e) {
    std::cerr << tool << ": config error: " << e.what() << '\n';
    return static_cast<int>(wafer::ExitCode::kConfig);
  } catch (const wafer::DataError& e) {
    std::cerr << tool << ": data error: " << e.what() << '\n';
    return static_cast<int>(wafer::ExitCode::kData);
  } catch (const wafer::ConvergenceError& e) {
    std::cerr << tool << ": convergence error: " << e.what() << '\n';
    return static_cast<int>(wafer::ExitCode::kConvergence);
  } catch (const std::exception& e) {
    std::cerr << tool << ": error: " << e.what() << '\n';
    return static_cast<int>(wafer::ExitCode::kUnknown);
  }
}

// CLI11 parse errors are configuration errors, except --help.
inline int parse_failure(CLI::App& app, const CLI::ParseError& e) {
  const int rc = app.exit(e);
  return rc == 0 ? 0 : static_cast<int>(wafer::ExitCode::kConfig);
}

struct ConfigOptions {
  std::string path;
  std::vector<std::string> overrides;
  unsigned workers = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "pipeline config (TOML)");
    app->add_option("--set", overrides, "override, e.g. fef.tau=12")->take_all();
    app->add_option("--workers", workers, "worker threads (0: all cores)");
  }

  wafer::PipelineConfig load() const {
    wafer::PipelineConfig cfg = path.empty() ? wafer::PipelineConfig{} : wafer::load_config(path);
    for (const auto& o : overrides) wafer::apply_override(cfg, o);
    if (workers) cfg.workers = workers;
    cfg.validate();
    return cfg;
  }
};

}  // namespace tools
