#include "wafer/nn/checkpoint.hpp"

#include "json.hpp"
#include "wafer/errors.hpp"
#include "wafer/tensor_io.hpp"

namespace wafer::nn {

void save_model(const std::filesystem::path& path, const Model& model) {
  nlohmann::ordered_json meta;
  meta["format"] = "waferscope-model";
  meta["version"] = kCheckpointVersion;
  meta["kind"] = model.kind;
  meta["spec"] = nlohmann::ordered_json::parse(spec_to_json(model.network.spec()));
  meta["info"] = nlohmann::ordered_json::parse(model.info);
  Archive ar;
  ar.metadata = meta.dump();
  for (const auto& p : model.network.params()) {
    Tensor t;
    t.shape = {static_cast<std::uint32_t>(p.value.size())};
    t.data.assign(p.value.begin(), p.value.end());
    ar.tensors.emplace_back(p.name, std::move(t));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_archive(path, ar);
}

Model load_model(const std::filesystem::path& path) {
  const Archive ar = read_archive(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ar.metadata);
  } catch (const nlohmann::json::exception&) {
    throw DataError("model checkpoint: malformed metadata in " + path.string());
  }
  if (meta.value("format", "") != "waferscope-model") throw DataError("not a model checkpoint: " + path.string());
  const int version = meta.value("version", 0);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Model model(Network<float>(spec_from_json(meta.at("spec").dump())), meta.value("kind", ""));
  model.info = meta.contains("info") ? meta["info"].dump() : "{}";
  for (auto& p : model.network.params()) {
    const Tensor& t = ar.get(p.name);
    if (t.data.size() != p.value.size()) throw DataError("checkpoint tensor size mismatch: " + p.name);
    p.value.assign(t.data.begin(), t.data.end());
  }
  return model;
}

}  // namespace wafer::nn
