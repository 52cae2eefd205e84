#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace wafer {

// Dense float tensor used for on-disk dumps. Layout is row-major over `shape`.
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

// Single tensor file:
//   "WTNS" | u32 version=1 | u32 rank | u32 dims[rank] | f32 payload (LE)
void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in);
void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor_file(const std::filesystem::path& path);

// Named tensors plus a JSON metadata string:
//   "WARC" | u32 version=1 | u32 meta_len | meta bytes | u32 count |
//   count x (u32 name_len | name | tensor)
struct Archive {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& get(const std::string& name) const;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

}  // namespace wafer
