#include <gtest/gtest.h>

#include <fstream>

#include "scratch_dir.hpp"
#include "wafer/errors.hpp"
#include "wafer/manifest.hpp"

using namespace wafer;

namespace {

ManifestRecord street(int label, Split split, int id) {
  ManifestRecord r;
  r.image_path = "rois/s" + std::to_string(id) + ".png";
  r.wafer_id = 0;
  r.chip_col = id;
  r.chip_row = 0;
  r.side = "N";
  r.label = label;
  r.split = split;
  return r;
}

DatasetManifest with_counts(long good, long anomaly, long bad) {
  DatasetManifest m;
  int id = 0;
  for (long i = 0; i < good; ++i) m.records.push_back(street(0, Split::kTrain, id++));
  for (long i = 0; i < anomaly; ++i) m.records.push_back(street(1, Split::kTrain, id++));
  for (long i = 0; i < bad; ++i) m.records.push_back(street(2, Split::kTrain, id++));
  for (int i = 0; i < 5; ++i) m.records.push_back(street(i % 3, Split::kVal, id++));
  for (int i = 0; i < 7; ++i) m.records.push_back(street(i % 2, Split::kTest, id++));
  return m;
}

long duplicates_of(const DatasetManifest& m, int label) {
  long n = 0;
  for (const auto& r : m.records) n += (r.duplicate && r.label == label) ? 1 : 0;
  return n;
}

}  // namespace

TEST(Manifest, RoundTripIsIdentity) {
  DatasetManifest m = with_counts(3, 2, 1);
  m.generator = R"({"seed":4})";
  m.records[0].truth_x = 12.5;
  m.records[0].fixation_y = 0.25;
  m.records[1].found = false;
  m.records[2].predicted = 1;
  m.records[3].source_image = "chips/a.png";
  const auto back = manifest_from_string(manifest_to_string(m));
  EXPECT_EQ(back, m);
  EXPECT_EQ(manifest_to_string(back), manifest_to_string(m));
}

TEST(Manifest, UnknownVersionIsRejected) {
  const std::string text = "{\"format\":\"waferscope-manifest\",\"version\":99,\"generator\":{}}\n";
  try {
    manifest_from_string(text);
    FAIL() << "no error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Manifest, MissingLabelNamesTheLine) {
  const std::string text =
      "{\"format\":\"waferscope-manifest\",\"version\":1,\"generator\":{}}\n"
      "{\"image_path\":\"a.png\",\"wafer_id\":0,\"chip_col\":0,\"chip_row\":0,\"side\":\"N\",\"label\":0,"
      "\"split\":\"train\"}\n"
      "{\"image_path\":\"b.png\",\"wafer_id\":0,\"chip_col\":1,\"chip_row\":0,\"side\":\"N\","
      "\"split\":\"train\"}\n";
  try {
    manifest_from_string(text);
    FAIL() << "no error";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("label"), std::string::npos) << msg;
  }
}

TEST(Manifest, MissingFileIsReportedWhenChecked) {
  testing_support::ScratchDir dir("manifest_files");
  write_manifest(dir / "m.jsonl", with_counts(1, 0, 0));
  EXPECT_NO_THROW(read_manifest(dir / "m.jsonl", false));
  EXPECT_THROW(read_manifest(dir / "m.jsonl", true), DataError);
  EXPECT_THROW(read_manifest(dir / "absent.jsonl"), DataError);
}

TEST(ClassBalance, AlreadyBalancedIsUnchanged) {
  const auto m = with_counts(100, 100, 100);
  EXPECT_EQ(class_balance(m), m);
}

TEST(ClassBalance, DuplicatesMinorityClassesUpToTheMajority) {
  const auto m = with_counts(90, 4, 6);
  const auto b = class_balance(m);
  const auto counts = class_counts(b, Split::kTrain, RecordKind::kStreets);
  EXPECT_EQ(counts, (std::array<long, 3>{90, 90, 90}));
  EXPECT_EQ(duplicates_of(b, 1), 86);
  EXPECT_EQ(duplicates_of(b, 2), 84);
  EXPECT_EQ(duplicates_of(b, 0), 0);
}

TEST(ClassBalance, DuplicatesReferenceExistingFiles) {
  const auto m = with_counts(10, 1, 2);
  const auto b = class_balance(m);
  for (const auto& r : b.records) {
    if (!r.duplicate) continue;
    bool found = false;
    for (const auto& o : m.records) found = found || o.image_path == r.image_path;
    EXPECT_TRUE(found) << r.image_path;
  }
}

TEST(ClassBalance, ValidationAndTestAreUntouched) {
  const auto m = with_counts(90, 4, 6);
  const auto b = class_balance(m);
  for (Split s : {Split::kVal, Split::kTest}) {
    EXPECT_EQ(class_counts(b, s, RecordKind::kStreets), class_counts(m, s, RecordKind::kStreets));
  }
}

TEST(ClassBalance, EmptyClassIsAnError) {
  try {
    class_balance(with_counts(10, 0, 3));
    FAIL() << "no error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cannot balance empty class"), std::string::npos);
  }
}
