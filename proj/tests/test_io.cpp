#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "spectrack/error.hpp"
#include "spectrack/io.hpp"

using namespace spectrack;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidInput;
}

// Values already representable in f32, so the roundtrip can be exact.
ActivationDump f32_dump(std::uint64_t seed, std::uint32_t classes, std::size_t dim, std::size_t records,
                        std::string layer = "hidden2") {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 3.0f);
  std::uniform_int_distribution<std::uint32_t> cls(0, classes - 1);
  ActivationDump d(std::move(layer), classes, dim);
  std::vector<double> row(dim);
  for (std::size_t r = 0; r < records; ++r) {
    for (auto& v : row) v = g(rng);
    d.add_record(cls(rng), row);
  }
  return d;
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("spectrack_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(dir);
  return dir;
}

Csdd sample_csdd() {
  std::mt19937_64 rng(3);
  Csdd c;
  c.matrix = oracle::random_matrix(rng, 15, 4, 0.0, 0.3);
  c.num_bins = 20;
  c.layer_id = "hidden2";
  for (std::uint64_t i = 1; i <= 15; ++i) c.split_seeds.push_back(i);
  c.provenance = "unit test";
  return c;
}

}  // namespace

TEST(Dump, HeaderLayoutIsLittleEndian) {
  ActivationDump d("ab", 3, 2);
  const std::vector<double> row{1.5, -2.0};
  d.add_record(2, row);
  const auto bytes = io::encode_dump(d);
  ASSERT_EQ(io::dump_header_size("ab"), 36u);
  ASSERT_EQ(bytes.size(), 36u + 4u + 8u);

  std::vector<std::uint8_t> want{'S', 'P', 'E', 'C', 'D', 'M', 'P', '1', 1, 0};
  put_u32(want, 3);
  put_u32(want, 2);
  for (int i = 0; i < 8; ++i) want.push_back(i == 0 ? 1 : 0);
  put_u32(want, 2);
  want.push_back('a');
  want.push_back('b');
  put_u32(want, 1);
  put_u32(want, 2);
  put_u32(want, std::bit_cast<std::uint32_t>(1.5f));
  put_u32(want, std::bit_cast<std::uint32_t>(-2.0f));
  EXPECT_EQ(bytes, want);
}

TEST(Dump, RoundtripIsLossless) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = f32_dump(seed, 1 + seed % 7, 1 + seed % 13, 1 + 5 * seed, "layer-" + std::to_string(seed));
    EXPECT_EQ(io::decode_dump(io::encode_dump(d)), d);
  }
}

TEST(Dump, Utf8LayerName) {
  const auto d = f32_dump(1, 2, 3, 4, "capa_\xC3\xB1");
  EXPECT_EQ(io::decode_dump(io::encode_dump(d)).layer_id(), "capa_\xC3\xB1");
}

TEST(Dump, BadMagicVersionAndFlags) {
  const auto good = io::encode_dump(f32_dump(2, 2, 3, 5));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { io::decode_dump(bad_magic); }), ErrorKind::FormatError);
  auto bad_version = good;
  bad_version[8] = 2;
  EXPECT_EQ(kind_of([&] { io::decode_dump(bad_version); }), ErrorKind::FormatError);
  auto bad_flags = good;
  bad_flags[io::dump_header_size("hidden2") - 4] = 0;
  EXPECT_EQ(kind_of([&] { io::decode_dump(bad_flags); }), ErrorKind::FormatError);
  const std::vector<std::uint8_t> tiny{'S', 'P'};
  EXPECT_EQ(kind_of([&] { io::decode_dump(tiny); }), ErrorKind::FormatError);
}

TEST(Dump, TruncationAndTrailingBytes) {
  const auto good = io::encode_dump(f32_dump(3, 2, 3, 5));
  for (std::size_t cut : {good.size() - 1, good.size() - 16, io::dump_header_size("hidden2") + 1}) {
    const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(kind_of([&] { io::decode_dump(truncated); }), ErrorKind::CorruptDump) << cut;
  }
  // Cut inside the header.
  const std::vector<std::uint8_t> header_cut(good.begin(), good.begin() + 20);
  EXPECT_EQ(kind_of([&] { io::decode_dump(header_cut); }), ErrorKind::CorruptDump);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(kind_of([&] { io::decode_dump(trailing); }), ErrorKind::CorruptDump);
}

TEST(Dump, InvalidRecordsAndEmptyPayload) {
  auto bytes = io::encode_dump(f32_dump(4, 2, 1, 1, "x"));
  const std::size_t header = io::dump_header_size("x");
  auto bad_class = bytes;
  bad_class[header] = 9;
  EXPECT_EQ(kind_of([&] { io::decode_dump(bad_class); }), ErrorKind::CorruptDump);
  auto nan_value = bytes;
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int i = 0; i < 4; ++i) nan_value[header + 4 + i] = static_cast<std::uint8_t>(nan_bits >> (8 * i));
  EXPECT_EQ(kind_of([&] { io::decode_dump(nan_value); }), ErrorKind::CorruptDump);

  ActivationDump empty("x", 2, 1);
  const auto empty_bytes = io::encode_dump(empty);
  EXPECT_EQ(empty_bytes.size(), header);
  EXPECT_EQ(kind_of([&] { io::decode_dump(empty_bytes); }), ErrorKind::CorruptDump);
}

TEST(Dump, F32Overflow) {
  ActivationDump d("x", 1, 1);
  const std::vector<double> huge{1e300};
  d.add_record(0, huge);
  EXPECT_EQ(kind_of([&] { io::encode_dump(d); }), ErrorKind::InvalidInput);
}

TEST(Dump, FileRoundtripAndMissingFile) {
  const auto dir = temp_dir();
  const auto d = f32_dump(5, 4, 8, 50);
  io::write_dump(d, dir / "a.dump");
  EXPECT_EQ(io::read_dump(dir / "a.dump"), d);
  EXPECT_FALSE(fs::exists(dir / "a.dump.tmp"));
  EXPECT_EQ(kind_of([&] { io::read_dump(dir / "missing.dump"); }), ErrorKind::IoError);
  fs::remove_all(dir);
}

TEST(Csdd, JsonRoundtripIsLossless) {
  const Csdd c = sample_csdd();
  const Csdd back = io::csdd_from_json(nlohmann::json::parse(io::csdd_to_json(c).dump(2)));
  EXPECT_EQ(back.matrix, c.matrix);
  EXPECT_EQ(back.num_bins, c.num_bins);
  EXPECT_EQ(back.layer_id, c.layer_id);
  EXPECT_EQ(back.split_seeds, c.split_seeds);
  EXPECT_EQ(back.provenance, c.provenance);
}

TEST(Csdd, JsonCarriesReferenceForAudit) {
  const auto doc = io::csdd_to_json(sample_csdd());
  ASSERT_TRUE(doc.contains("reference"));
  EXPECT_EQ(doc["reference"]["mean"].size(), 4u);
  EXPECT_EQ(doc["num_bins"], 20);
  EXPECT_EQ(doc["rows"], 15);
}

TEST(Csdd, MalformedDocuments) {
  const auto good = io::csdd_to_json(sample_csdd());
  for (const char* key : {"format", "version", "num_bins", "num_classes", "layer_id", "split_seeds", "matrix"}) {
    auto doc = good;
    doc.erase(key);
    EXPECT_EQ(kind_of([&] { io::csdd_from_json(doc); }), ErrorKind::FormatError) << key;
  }
  auto wrong_type = good;
  wrong_type["num_bins"] = "twenty";
  EXPECT_EQ(kind_of([&] { io::csdd_from_json(wrong_type); }), ErrorKind::FormatError);
  auto ragged = good;
  ragged["matrix"][3].erase(0);
  EXPECT_EQ(kind_of([&] { io::csdd_from_json(ragged); }), ErrorKind::FormatError);
  auto negative = good;
  negative["matrix"][0][0] = -0.5;
  EXPECT_EQ(kind_of([&] { io::csdd_from_json(negative); }), ErrorKind::FormatError);
  auto other_format = good;
  other_format["format"] = "something-else";
  EXPECT_EQ(kind_of([&] { io::csdd_from_json(other_format); }), ErrorKind::FormatError);
}

TEST(Csdd, FileRoundtripAndBadJson) {
  const auto dir = temp_dir();
  const Csdd c = sample_csdd();
  io::save_csdd(c, dir / "c.json");
  EXPECT_EQ(io::load_csdd(dir / "c.json").matrix, c.matrix);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_EQ(kind_of([&] { io::load_csdd(dir / "bad.json"); }), ErrorKind::FormatError);
  fs::remove_all(dir);
}

TEST(Reports, VerdictCsv) {
  DetectionVerdict v;
  v.mahalanobis_sq = 0.5;
  v.threshold = 18.5;
  v.alpha = 0.999;
  v.decision = Decision::Poisoned;
  v.warnings = {"a", "b, c"};
  const std::vector<io::VerdictRecord> rows{{"m1", v}};
  EXPECT_EQ(io::render_verdicts(rows, io::ReportFormat::Csv),
            "model_id,D2M,tau,alpha,decision,warnings\nm1,0.5,18.5,0.999,Poisoned,\"a; b, c\"\n");
}

TEST(Reports, ConfusionAndAucTables) {
  const std::vector<io::ConfusionRow> rows{{"patch", {10, 0, 0, 10}}, {"blend", {7, 0, 3, 10}}};
  EXPECT_EQ(io::render_confusion_table(rows, io::ReportFormat::Csv),
            "attack,TP,FP,FN,TN,Acc\npatch,10,0,0,10,1\nblend,7,0,3,10,0.84999999999999998\n");
  const auto doc = nlohmann::json::parse(io::render_confusion_table(rows, io::ReportFormat::Json, {{"rq", 2}}));
  EXPECT_EQ(doc["rows"][1]["FN"], 3);
  EXPECT_EQ(doc["rows"][1]["Acc"], 0.85);
  EXPECT_EQ(doc["meta"]["rq"], 2);

  const std::vector<io::AucRow> auc{{"patch", 0.95, {0.9, 1.0}}};
  EXPECT_EQ(io::render_auc_table(auc, io::ReportFormat::Csv), "attack,AUC\npatch,0.94999999999999996\n");
  EXPECT_EQ(nlohmann::json::parse(io::render_auc_table(auc, io::ReportFormat::Json))["rows"][0]["per_seed_AUC"].size(),
            2u);
}

TEST(Reports, FormatSelection) {
  EXPECT_EQ(io::report_format_for("x/out.csv"), io::ReportFormat::Csv);
  EXPECT_EQ(io::report_format_for("out.json"), io::ReportFormat::Json);
  EXPECT_EQ(kind_of([] { io::report_format_for("out.txt"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { io::render_confusion_table({}, io::ReportFormat::Csv); }), ErrorKind::InvalidInput);
}

TEST(Reports, RealsRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    EXPECT_EQ(std::stod(io::format_real(x)), x);
  }
}
