#include "wafer/config.hpp"

#include <fstream>
#include <sstream>

#include "toml.hpp"
#include "wafer/errors.hpp"

namespace wafer {
namespace {

[[noreturn]] void bad(const std::string& section, const std::string& key, const std::string& why) {
  throw ConfigError("config [" + section + "] " + key + ": " + why);
}

double num(const toml::node& n, const std::string& s, const std::string& k) {
  if (auto v = n.value<double>()) return *v;
  bad(s, k, "expected a number");
}

int integer(const toml::node& n, const std::string& s, const std::string& k) {
  if (auto v = n.value<std::int64_t>()) return static_cast<int>(*v);
  bad(s, k, "expected an integer");
}

bool boolean(const toml::node& n, const std::string& s, const std::string& k) {
  if (auto v = n.value<bool>()) return *v;
  bad(s, k, "expected true or false");
}

std::string string(const toml::node& n, const std::string& s, const std::string& k) {
  if (auto v = n.value<std::string>()) return *v;
  bad(s, k, "expected a string");
}

void apply_train(nn::TrainConfig& t, const std::string& s, const std::string& k, const toml::node& n) {
  if (k == "learning_rate") t.sgd.learning_rate = num(n, s, k);
  else if (k == "momentum") t.sgd.momentum = num(n, s, k);
  else if (k == "batch_size") t.batch_size = integer(n, s, k);
  else if (k == "max_epochs") t.max_epochs = integer(n, s, k);
  else if (k == "patience") t.patience = integer(n, s, k);
  else if (k == "samples_per_epoch") t.samples_per_epoch = integer(n, s, k);
  else if (k == "augment") t.augment = boolean(n, s, k);
  else if (k == "seed") t.seed = static_cast<std::uint64_t>(integer(n, s, k));
  else bad(s, k, "unknown key");
}

void apply_key(PipelineConfig& c, const std::string& s, const std::string& k, const toml::node& n) {
  auto& a = c.attention;
  if (s == "v1") {
    if (k == "n_orientations") c.v1.n_orientations = integer(n, s, k);
    else if (k == "wavelengths") {
      const auto* arr = n.as_array();
      if (!arr) bad(s, k, "expected an array");
      c.v1.wavelengths.clear();
      for (const auto& e : *arr) c.v1.wavelengths.push_back(num(e, s, k));
    } else if (k == "sigma_per_wavelength") c.v1.sigma_per_wavelength = num(n, s, k);
    else if (k == "aspect") c.v1.aspect = num(n, s, k);
    else if (k == "color") c.v1.color_enabled = boolean(n, s, k);
    else bad(s, k, "unknown key");
  } else if (s == "hva") {
    if (k == "p1") a.pool.p1 = num(n, s, k);
    else if (k == "p2") a.pool.p2 = num(n, s, k);
    else if (k == "v_hva4") a.pool.v_hva4 = num(n, s, k);
    else if (k == "pool_sigma") a.pool.sigma = num(n, s, k);
    else if (k == "pool_truncate") a.pool.truncate = num(n, s, k);
    else if (k == "fef_to_hva4") a.gains.fef_to_hva4 = num(n, s, k);
    else if (k == "sp") a.gains.sp = num(n, s, k);
    else bad(s, k, "unknown key");
  } else if (s == "fef") {
    if (k == "tau") a.fef.tau = num(n, s, k);
    else if (k == "dt") a.fef.dt = num(n, s, k);
    else if (k == "n_steps_max") a.fef.n_steps_max = integer(n, s, k);
    else if (k == "epsilon") a.fef.epsilon = num(n, s, k);
    else if (k == "theta_sel") a.fef.theta_sel = num(n, s, k);
    else if (k == "gamma") a.fef.gamma = num(n, s, k);
    else if (k == "q_gain") a.fef.q_gain = num(n, s, k);
    else if (k == "second_peak_ratio") a.fef.second_peak_ratio = num(n, s, k);
    else if (k == "neighbor_radius") a.fef.neighbor_radius = integer(n, s, k);
    else bad(s, k, "unknown key");
  } else if (s == "ior") {
    if (k == "initial") a.ior.initial = num(n, s, k);
    else if (k == "strength") a.ior.strength = num(n, s, k);
    else if (k == "sigma_fraction") a.ior.sigma_fraction = num(n, s, k);
    else bad(s, k, "unknown key");
  } else if (s == "attention") {
    if (k == "n_saccades") a.n_saccades = integer(n, s, k);
    else if (k == "center_box_lo") a.center_box_lo = num(n, s, k);
    else if (k == "center_box_hi") a.center_box_hi = num(n, s, k);
    else if (k == "central_suppression") c.central_suppression = boolean(n, s, k);
    else if (k == "suppression_box") c.suppression_box = num(n, s, k);
    else if (k == "external_map") c.external_map = string(n, s, k);
    else bad(s, k, "unknown key");
  } else if (s == "street_train") {
    apply_train(c.street_train, s, k, n);
  } else if (s == "chip_train") {
    apply_train(c.chip_train, s, k, n);
  } else if (s == "border_train") {
    apply_train(c.border_train, s, k, n);
  } else if (s == "pipeline") {
    if (k == "workers") c.workers = static_cast<unsigned>(integer(n, s, k));
    else if (k == "street_classes") c.street_classes = integer(n, s, k);
    else if (k == "split") c.split = string(n, s, k);
    else bad(s, k, "unknown key");
  } else {
    throw ConfigError("config: unknown section [" + s + "]");
  }
}

void apply_table(PipelineConfig& c, const toml::table& root) {
  for (const auto& [sk, sn] : root) {
    const std::string section(sk.str());
    const auto* t = sn.as_table();
    if (!t) throw ConfigError("config: top-level key '" + section + "' must be a table");
    for (const auto& [kk, kn] : *t) apply_key(c, section, std::string(kk.str()), kn);
  }
}

toml::table parse_toml(const std::string& text, const std::string& what) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << what << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
}

}  // namespace

PipelineConfig::PipelineConfig() {
  street_train.augmentation = nn::AugmentSpec::street();
  chip_train.augmentation = nn::AugmentSpec::chip();
  // Shifts and rotations can hide or reveal a thin slice of the wafer edge,
  // so the border classifier only sees label-preserving mirror images.
  border_train.augmentation = nn::AugmentSpec::none();
  border_train.augmentation.flip_x = true;
  border_train.augmentation.flip_y = true;
  border_train.sgd.learning_rate = 0.003;
  border_train.max_epochs = 20;
  border_train.patience = 6;
}

void PipelineConfig::validate() const {
  v1.validate();
  attention.fef.validate();
  if (attention.n_saccades < 1) throw ConfigError("config [attention] n_saccades must be positive");
  if (!(attention.center_box_lo < attention.center_box_hi)) {
    throw ConfigError("config [attention] center box is empty");
  }
  if (suppression_box <= 0.0 || suppression_box >= 1.0) {
    throw ConfigError("config [attention] suppression_box must lie in (0,1)");
  }
  if (attention.pool.p1 <= 0 || attention.pool.p2 <= 0 || attention.pool.v_hva4 <= 0 ||
      attention.pool.sigma <= 0) {
    throw ConfigError("config [hva] pooling parameters must be positive");
  }
  if (attention.gains.fef_to_hva4 < 0 || attention.gains.sp < 0) {
    throw ConfigError("config [hva] reentrant gains must be non-negative");
  }
  if (attention.ior.strength < 0 || attention.ior.sigma_fraction <= 0) {
    throw ConfigError("config [ior] strength must be non-negative and sigma_fraction positive");
  }
  street_train.validate();
  chip_train.validate();
  border_train.validate();
  if (street_classes != 2 && street_classes != 3) {
    throw ConfigError("config [pipeline] street_classes must be 2 or 3");
  }
  if (split != "train" && split != "val" && split != "test" && split != "all") {
    throw ConfigError("config [pipeline] split must be train, val, test or all");
  }
}

PipelineConfig parse_config(const std::string& toml_text) {
  PipelineConfig c;
  apply_table(c, parse_toml(toml_text, "config"));
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: " + assignment);
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  std::string value = assignment.substr(eq + 1);
  toml::table t;
  try {
    t = parse_toml("v = " + value, "override " + assignment);
  } catch (const ConfigError&) {
    // Bare words are taken as strings.
    t = parse_toml("v = \"" + value + "\"", "override " + assignment);
  }
  apply_key(config, section, key, *t.get("v"));
  config.validate();
}

}  // namespace wafer
