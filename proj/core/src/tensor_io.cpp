#include "wafer/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include "wafer/errors.hpp"

namespace wafer {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

constexpr std::array<char, 4> kTensorMagic{'W', 'T', 'N', 'S'};
constexpr std::array<char, 4> kArchiveMagic{'W', 'A', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError("tensor container: unexpected end of stream");
  return v;
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic, const char* what) {
  std::array<char, 4> got{};
  in.read(got.data(), 4);
  if (!in || got != magic) throw DataError(std::string("bad magic for ") + what);
}

}  // namespace

std::size_t Tensor::element_count() const {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

void write_tensor(std::ostream& out, const Tensor& tensor) {
  if (tensor.element_count() != tensor.data.size()) {
    throw DataError("write_tensor: shape does not match payload length");
  }
  out.write(kTensorMagic.data(), 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
  for (auto d : tensor.shape) put_u32(out, d);
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  if (!out) throw DataError("write_tensor: stream error");
}

Tensor read_tensor(std::istream& in) {
  expect_magic(in, kTensorMagic, "tensor");
  const auto version = get_u32(in);
  if (version != kVersion) {
    throw DataError("unsupported tensor version " + std::to_string(version));
  }
  const auto rank = get_u32(in);
  if (rank > kMaxRank) throw DataError("tensor rank too large");
  Tensor t;
  t.shape.resize(rank);
  for (auto& d : t.shape) d = get_u32(in);
  t.data.resize(t.element_count());
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!in) throw DataError("tensor payload truncated");
  return t;
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  write_tensor(out, tensor);
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tensor file: " + path.string());
  return read_tensor(in);
}

const Tensor& Archive::get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("archive has no tensor named '" + name + "'");
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(kArchiveMagic.data(), 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(archive.metadata.size()));
  out.write(archive.metadata.data(), static_cast<std::streamsize>(archive.metadata.size()));
  put_u32(out, static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& [name, t] : archive.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, t);
  }
  if (!out) throw DataError("archive write failed: " + path.string());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive: " + path.string());
  expect_magic(in, kArchiveMagic, "archive");
  const auto version = get_u32(in);
  if (version != kVersion) {
    throw DataError("unsupported archive version " + std::to_string(version));
  }
  Archive a;
  a.metadata.resize(get_u32(in));
  in.read(a.metadata.data(), static_cast<std::streamsize>(a.metadata.size()));
  const auto count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get_u32(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    if (!in) throw DataError("archive truncated");
    a.tensors.emplace_back(std::move(name), read_tensor(in));
  }
  return a;
}

}  // namespace wafer
