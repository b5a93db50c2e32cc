#include "spectrack/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "spectrack/error.hpp"

namespace spectrack::io {

using nlohmann::json;

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(ErrorKind::CorruptDump, "dump is truncated");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

template <class T>
T require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) fail(ErrorKind::FormatError, std::string("missing key '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, std::string("key '") + key + "' has the wrong type: " + e.what());
  }
}

json reference_to_json(const stats::GaussianReference& ref) {
  json cov = json::array();
  for (Eigen::Index r = 0; r < ref.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < ref.covariance.cols(); ++c) row.push_back(ref.covariance(r, c));
    cov.push_back(std::move(row));
  }
  return {{"mean", std::vector<double>(ref.mean.data(), ref.mean.data() + ref.mean.size())},
          {"covariance", std::move(cov)},
          {"shrinkage_intensity", ref.shrinkage_intensity},
          {"sample_count", ref.sample_count}};
}

json verdict_to_json(const VerdictRecord& record) {
  const auto& v = record.verdict;
  return {{"model_id", record.model_id},
          {"D2M", v.mahalanobis_sq},
          {"tau", v.threshold},
          {"alpha", v.alpha},
          {"decision", std::string(to_string(v.decision))},
          {"distance_vector", v.distance_vector.values},
          {"probe_dataset", v.probe_dataset},
          {"warnings", v.warnings}};
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t dump_header_size(std::string_view layer_id) noexcept {
  return kDumpMagic.size() + 2 + 4 + 4 + 8 + 4 + layer_id.size() + 4;
}

std::vector<std::uint8_t> encode_dump(const ActivationDump& dump) {
  if (dump.layer_id().size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorKind::InvalidInput, "layer id too long");
  }
  std::vector<std::uint8_t> out;
  out.reserve(dump_header_size(dump.layer_id()) + dump.size() * (4 + 4 * dump.dim()));
  ByteWriter w(out);
  w.bytes(kDumpMagic);
  w.u16(kDumpVersion);
  w.u32(dump.num_classes());
  w.u32(static_cast<std::uint32_t>(dump.dim()));
  w.u64(dump.size());
  w.u32(static_cast<std::uint32_t>(dump.layer_id().size()));
  w.bytes(dump.layer_id());
  w.u32(kFlagLittleEndian);
  for (std::size_t r = 0; r < dump.size(); ++r) {
    w.u32(dump.predicted_class(r));
    for (double v : dump.preactivations(r)) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) fail(ErrorKind::InvalidInput, "pre-activation value overflows f32");
      w.f32(f);
    }
  }
  return out;
}

ActivationDump decode_dump(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDumpMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kDumpMagic.size()) != kDumpMagic) {
    fail(ErrorKind::FormatError, "not an activation dump (bad magic)");
  }
  ByteReader r(bytes.subspan(kDumpMagic.size()));
  const auto version = r.u16();
  if (version != kDumpVersion) {
    fail(ErrorKind::FormatError, "unsupported dump version " + std::to_string(version));
  }
  const auto num_classes = r.u32();
  const auto dim = r.u32();
  const auto record_count = r.u64();
  const auto layer_len = r.u32();
  std::string layer_id = r.bytes(layer_len);
  const auto flags = r.u32();
  if ((flags & kFlagLittleEndian) == 0) fail(ErrorKind::FormatError, "dump payload is not flagged little-endian");
  if (num_classes == 0 || dim == 0) fail(ErrorKind::CorruptDump, "dump header has zero classes or zero width");
  if (record_count == 0) fail(ErrorKind::CorruptDump, "dump has no records");

  const std::uint64_t record_bytes = 4 + 4 * static_cast<std::uint64_t>(dim);
  if (record_count > r.remaining() / record_bytes) fail(ErrorKind::CorruptDump, "dump payload is truncated");
  if (r.remaining() != record_count * record_bytes) fail(ErrorKind::CorruptDump, "dump has trailing bytes");

  ActivationDump dump(std::move(layer_id), num_classes, dim);
  dump.reserve(record_count);
  std::vector<double> row(dim);
  for (std::uint64_t i = 0; i < record_count; ++i) {
    const auto cls = r.u32();
    for (auto& v : row) v = static_cast<double>(r.f32());
    try {
      dump.add_record(cls, row);
    } catch (const Error& e) {
      fail(ErrorKind::CorruptDump, "record " + std::to_string(i) + ": " + e.detail());
    }
  }
  return dump;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::IoError, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_dump(const ActivationDump& dump, const std::filesystem::path& path) {
  write_file_atomic(path, encode_dump(dump));
}

ActivationDump read_dump(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return decode_dump(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

json csdd_to_json(const Csdd& csdd) {
  json matrix = json::array();
  for (Eigen::Index r = 0; r < csdd.matrix.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < csdd.matrix.cols(); ++c) row.push_back(csdd.matrix(r, c));
    matrix.push_back(std::move(row));
  }
  json doc = {{"format", "spectrack-csdd"},
              {"version", 1},
              {"num_bins", csdd.num_bins},
              {"num_classes", csdd.num_classes()},
              {"rows", csdd.rows()},
              {"layer_id", csdd.layer_id},
              {"split_seeds", csdd.split_seeds},
              {"provenance", csdd.provenance},
              {"matrix", std::move(matrix)}};
  if (csdd.rows() >= 2) doc["reference"] = reference_to_json(fit_reference(csdd));
  return doc;
}

Csdd csdd_from_json(const json& doc) {
  if (require<std::string>(doc, "format") != "spectrack-csdd") fail(ErrorKind::FormatError, "not a CSDD document");
  if (require<int>(doc, "version") != 1) fail(ErrorKind::FormatError, "unsupported CSDD version");

  Csdd csdd;
  csdd.num_bins = require<std::size_t>(doc, "num_bins");
  const auto classes = require<std::size_t>(doc, "num_classes");
  csdd.layer_id = require<std::string>(doc, "layer_id");
  csdd.split_seeds = require<std::vector<std::uint64_t>>(doc, "split_seeds");
  csdd.provenance = require<std::string>(doc, "provenance");
  const auto rows = require<std::vector<std::vector<double>>>(doc, "matrix");
  if (doc.contains("rows") && require<std::size_t>(doc, "rows") != rows.size()) {
    fail(ErrorKind::FormatError, "row count does not match matrix");
  }

  csdd.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != classes) fail(ErrorKind::FormatError, "matrix row " + std::to_string(r) + " has wrong width");
    for (std::size_t c = 0; c < classes; ++c) {
      csdd.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  try {
    csdd.validate();
  } catch (const Error& e) {
    fail(ErrorKind::FormatError, e.detail());
  }
  return csdd;
}

void save_csdd(const Csdd& csdd, const std::filesystem::path& path) {
  csdd.validate();
  write_file_atomic(path, csdd_to_json(csdd).dump(2) + "\n");
}

Csdd load_csdd(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::FormatError, std::string("CSDD is not valid JSON: ") + e.what());
  }
  return csdd_from_json(doc);
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  fail(ErrorKind::InvalidInput, "unsupported report format '" + std::string(name) + "'");
}

ReportFormat report_format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  return parse_report_format(ext);
}

std::string render_verdicts(std::span<const VerdictRecord> verdicts, ReportFormat format) {
  if (verdicts.empty()) fail(ErrorKind::InvalidInput, "empty verdict report");
  if (format == ReportFormat::Json) {
    json rows = json::array();
    for (const auto& v : verdicts) rows.push_back(verdict_to_json(v));
    return json{{"kind", "verdicts"}, {"verdicts", std::move(rows)}}.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "model_id,D2M,tau,alpha,decision,warnings\n";
  for (const auto& [id, v] : verdicts) {
    out << csv_field(id) << ',' << format_real(v.mahalanobis_sq) << ',' << format_real(v.threshold) << ','
        << format_real(v.alpha) << ',' << to_string(v.decision) << ',' << csv_field(join(v.warnings, "; ")) << '\n';
  }
  return out.str();
}

std::string render_auc_table(std::span<const AucRow> rows, ReportFormat format, const json& meta) {
  if (rows.empty()) fail(ErrorKind::InvalidInput, "empty AUC table");
  if (format == ReportFormat::Json) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"attack", r.attack}, {"AUC", r.mean_auc}, {"per_seed_AUC", r.per_seed_auc}});
    return json{{"kind", "rq1"}, {"meta", meta}, {"rows", std::move(out)}}.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "attack,AUC\n";
  for (const auto& r : rows) out << csv_field(r.attack) << ',' << format_real(r.mean_auc) << '\n';
  return out.str();
}

std::string render_confusion_table(std::span<const ConfusionRow> rows, ReportFormat format, const json& meta) {
  if (rows.empty()) fail(ErrorKind::InvalidInput, "empty confusion table");
  if (format == ReportFormat::Json) {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"attack", r.attack},
                     {"TP", r.counts.tp},
                     {"FP", r.counts.fp},
                     {"FN", r.counts.fn},
                     {"TN", r.counts.tn},
                     {"Acc", r.counts.accuracy()}});
    }
    return json{{"kind", "detection"}, {"meta", meta}, {"rows", std::move(out)}}.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "attack,TP,FP,FN,TN,Acc\n";
  for (const auto& r : rows) {
    out << csv_field(r.attack) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ',' << r.counts.tn
        << ',' << format_real(r.counts.accuracy()) << '\n';
  }
  return out.str();
}

void write_report(std::span<const VerdictRecord> verdicts, const std::filesystem::path& path, ReportFormat format) {
  write_file_atomic(path, render_verdicts(verdicts, format));
}

void write_report(std::span<const AucRow> rows, const std::filesystem::path& path, ReportFormat format,
                  const json& meta) {
  write_file_atomic(path, render_auc_table(rows, format, meta));
}

void write_report(std::span<const ConfusionRow> rows, const std::filesystem::path& path, ReportFormat format,
                  const json& meta) {
  write_file_atomic(path, render_confusion_table(rows, format, meta));
}

}  // namespace spectrack::io
