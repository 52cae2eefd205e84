#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "scratch_dir.hpp"
#include "wafer/errors.hpp"
#include "wafer/tensor_io.hpp"

namespace {

using namespace wafer;

Tensor sample_tensor() {
  Tensor t;
  t.shape = {2, 3, 4};
  for (std::size_t i = 0; i < 24; ++i) t.data.push_back(static_cast<float>(i) * 0.5f - 3.0f);
  return t;
}

TEST(TensorIo, StreamRoundTrip) {
  std::stringstream buf;
  write_tensor(buf, sample_tensor());
  EXPECT_EQ(buf.str().substr(0, 4), "WTNS");
  EXPECT_EQ(buf.str().size(), 4u + 4u + 4u + 3u * 4u + 24u * 4u);
  EXPECT_EQ(read_tensor(buf), sample_tensor());
}

TEST(TensorIo, FileRoundTrip) {
  testing_support::ScratchDir dir("tensor_io");
  write_tensor_file(dir / "t.wtns", sample_tensor());
  EXPECT_EQ(read_tensor_file(dir / "t.wtns"), sample_tensor());
}

TEST(TensorIo, TruncatedAndForeignDataRejected) {
  std::stringstream buf;
  write_tensor(buf, sample_tensor());
  std::stringstream cut(buf.str().substr(0, buf.str().size() - 5));
  EXPECT_THROW(read_tensor(cut), DataError);
  std::stringstream junk("JUNKJUNKJUNK");
  EXPECT_THROW(read_tensor(junk), DataError);
  EXPECT_THROW(read_tensor_file("/nonexistent/t.wtns"), DataError);
}

TEST(TensorIo, ArchiveRoundTrip) {
  testing_support::ScratchDir dir("archive_io");
  Archive ar;
  ar.metadata = R"({"kind":"demo"})";
  ar.tensors.emplace_back("a", sample_tensor());
  Tensor scalar;
  scalar.shape = {1};
  scalar.data = {7.0f};
  ar.tensors.emplace_back("b", scalar);
  write_archive(dir / "x.warc", ar);
  const Archive back = read_archive(dir / "x.warc");
  EXPECT_EQ(back.metadata, ar.metadata);
  EXPECT_EQ(back.get("a"), sample_tensor());
  EXPECT_EQ(back.get("b").data[0], 7.0f);
  EXPECT_THROW(back.get("missing"), DataError);
}

}  // namespace
