#include "wafer/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "wafer/errors.hpp"

namespace wafer {
namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kFormatName = "waferscope-manifest";

ojson record_to_json(const ManifestRecord& r) {
  ojson j;
  j["image_path"] = r.image_path;
  j["wafer_id"] = r.wafer_id;
  j["chip_col"] = r.chip_col;
  j["chip_row"] = r.chip_row;
  j["side"] = r.side;
  j["label"] = r.label;
  j["split"] = split_name(r.split);
  j["duplicate"] = r.duplicate;
  j["border"] = r.border;
  if (r.chip_px) j["chip_px"] = *r.chip_px;
  if (r.street_width_px) j["street_width_px"] = *r.street_width_px;
  if (r.truth_x) j["truth_x"] = *r.truth_x;
  if (r.truth_y) j["truth_y"] = *r.truth_y;
  if (r.source_image) j["source_image"] = *r.source_image;
  if (r.fixation_x) j["fixation_x"] = *r.fixation_x;
  if (r.fixation_y) j["fixation_y"] = *r.fixation_y;
  if (r.found) j["found"] = *r.found;
  if (r.predicted) j["predicted"] = *r.predicted;
  return j;
}

template <typename T>
T required(const ojson& j, const char* key, std::size_t line) {
  if (!j.contains(key)) {
    throw DataError("manifest line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("manifest line " + std::to_string(line) + ": bad type for field '" + key + "'");
  }
}

template <typename T>
std::optional<T> optional_field(const ojson& j, const char* key, std::size_t line) {
  if (!j.contains(key)) return std::nullopt;
  return required<T>(j, key, line);
}

ManifestRecord record_from_json(const ojson& j, std::size_t line) {
  if (!j.is_object()) {
    throw DataError("manifest line " + std::to_string(line) + ": record is not an object");
  }
  ManifestRecord r;
  r.image_path = required<std::string>(j, "image_path", line);
  r.wafer_id = required<int>(j, "wafer_id", line);
  r.chip_col = required<int>(j, "chip_col", line);
  r.chip_row = required<int>(j, "chip_row", line);
  r.side = required<std::string>(j, "side", line);
  r.label = required<int>(j, "label", line);
  try {
    r.split = parse_split(required<std::string>(j, "split", line));
  } catch (const DataError& e) {
    throw DataError("manifest line " + std::to_string(line) + ": " + e.what());
  }
  r.duplicate = optional_field<bool>(j, "duplicate", line).value_or(false);
  r.border = optional_field<bool>(j, "border", line).value_or(false);
  r.chip_px = optional_field<int>(j, "chip_px", line);
  r.street_width_px = optional_field<int>(j, "street_width_px", line);
  r.truth_x = optional_field<double>(j, "truth_x", line);
  r.truth_y = optional_field<double>(j, "truth_y", line);
  r.source_image = optional_field<std::string>(j, "source_image", line);
  r.fixation_x = optional_field<double>(j, "fixation_x", line);
  r.fixation_y = optional_field<double>(j, "fixation_y", line);
  r.found = optional_field<bool>(j, "found", line);
  r.predicted = optional_field<int>(j, "predicted", line);
  if (r.side != "chip" && r.side != "N" && r.side != "E" && r.side != "S" && r.side != "W") {
    throw DataError("manifest line " + std::to_string(line) + ": bad side '" + r.side + "'");
  }
  if (r.label < 0 || r.label > 2) {
    throw DataError("manifest line " + std::to_string(line) + ": label out of range");
  }
  return r;
}

bool matches(const ManifestRecord& r, RecordKind kind) {
  switch (kind) {
    case RecordKind::kStreets: return !r.is_chip();
    case RecordKind::kChips: return r.is_chip() && !r.border;
    case RecordKind::kAll: return !(r.is_chip() && r.border);
  }
  return false;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(s) + "'");
}

std::string manifest_to_string(const DatasetManifest& manifest) {
  std::ostringstream out;
  ojson header;
  header["format"] = kFormatName;
  header["version"] = manifest.version;
  header["generator"] = ojson::parse(manifest.generator.empty() ? "{}" : manifest.generator);
  out << header.dump() << '\n';
  for (const auto& r : manifest.records) out << record_to_json(r).dump() << '\n';
  return out.str();
}

DatasetManifest manifest_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  DatasetManifest m;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw DataError("manifest line " + std::to_string(line_no) + ": malformed JSON");
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", "") != kFormatName) {
        throw DataError("manifest line " + std::to_string(line_no) + ": missing header");
      }
      if (!j.contains("version") || !j["version"].is_number_integer()) {
        throw DataError("manifest header: missing version");
      }
      m.version = j["version"].get<int>();
      if (m.version != DatasetManifest::kFormatVersion) {
        throw DataError("unsupported manifest version " + std::to_string(m.version));
      }
      m.generator = j.contains("generator") ? j["generator"].dump() : "{}";
      have_header = true;
      continue;
    }
    m.records.push_back(record_from_json(j, line_no));
  }
  if (!have_header) throw DataError("manifest is empty");
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << manifest_to_string(manifest);
}

DatasetManifest read_manifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("manifest not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  DatasetManifest m = manifest_from_string(buffer.str());
  if (check_files) {
    const auto base = path.parent_path();
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      if (!std::filesystem::exists(base / m.records[i].image_path)) {
        throw DataError("manifest line " + std::to_string(i + 2) + ": missing file " +
                        m.records[i].image_path);
      }
    }
  }
  return m;
}

std::array<long, 3> class_counts(const DatasetManifest& manifest, Split split, RecordKind kind) {
  std::array<long, 3> counts{0, 0, 0};
  for (const auto& r : manifest.records) {
    if (r.split == split && matches(r, kind)) ++counts[static_cast<std::size_t>(r.label)];
  }
  return counts;
}

DatasetManifest class_balance(const DatasetManifest& manifest, const BalanceOptions& options) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (int c : options.classes) by_class[c];
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split != Split::kTrain || !matches(r, options.kind)) continue;
    auto it = by_class.find(r.label);
    if (it != by_class.end()) it->second.push_back(i);
  }
  std::size_t majority = 0;
  for (const auto& [label, idx] : by_class) {
    if (idx.empty()) {
      throw DataError("cannot balance empty class " + std::to_string(label));
    }
    majority = std::max(majority, idx.size());
  }
  DatasetManifest out = manifest;
  for (const auto& [label, idx] : by_class) {
    for (std::size_t k = idx.size(); k < majority; ++k) {
      ManifestRecord dup = manifest.records[idx[k % idx.size()]];
      dup.duplicate = true;
      out.records.push_back(std::move(dup));
    }
  }
  return out;
}

}  // namespace wafer
