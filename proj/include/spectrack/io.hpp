#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spectrack/detector.hpp"
#include "spectrack/spectra.hpp"
#include "spectrack/stats.hpp"
#include "spectrack/tracking.hpp"

namespace spectrack::io {

// Dump file layout, all integers little-endian:
//   magic        8 bytes  "SPECDMP1"
//   version      u16      kDumpVersion
//   num_classes  u32
//   dim          u32
//   record_count u64
//   layer_id     u32 byte length + UTF-8 bytes
//   flags        u32      bit 0 (little-endian payload) always set
// followed by record_count records of (predicted_class u32, dim x f32).
inline constexpr std::string_view kDumpMagic = "SPECDMP1";
inline constexpr std::uint16_t kDumpVersion = 1;
inline constexpr std::uint32_t kFlagLittleEndian = 1u;

std::size_t dump_header_size(std::string_view layer_id) noexcept;

std::vector<std::uint8_t> encode_dump(const ActivationDump& dump);
/// FormatError for a bad magic, version or flags; CorruptDump for a
/// truncated or inconsistent payload.
ActivationDump decode_dump(std::span<const std::uint8_t> bytes);

void write_dump(const ActivationDump& dump, const std::filesystem::path& path);
ActivationDump read_dump(const std::filesystem::path& path);

nlohmann::json csdd_to_json(const Csdd& csdd);
/// FormatError on any missing or ill-typed key.
Csdd csdd_from_json(const nlohmann::json& doc);
void save_csdd(const Csdd& csdd, const std::filesystem::path& path);
Csdd load_csdd(const std::filesystem::path& path);

enum class ReportFormat { Json, Csv };
ReportFormat parse_report_format(std::string_view name);
/// Picks the format from the file extension (.csv or .json).
ReportFormat report_format_for(const std::filesystem::path& path);

struct VerdictRecord {
  std::string model_id;
  DetectionVerdict verdict;
};

struct AucRow {
  std::string attack;
  double mean_auc = 0.0;
  std::vector<double> per_seed_auc;
};

struct ConfusionRow {
  std::string attack;
  stats::ConfusionCounts counts;
};

std::string render_verdicts(std::span<const VerdictRecord> verdicts, ReportFormat format);
std::string render_auc_table(std::span<const AucRow> rows, ReportFormat format, const nlohmann::json& meta = {});
std::string render_confusion_table(std::span<const ConfusionRow> rows, ReportFormat format,
                                   const nlohmann::json& meta = {});

void write_report(std::span<const VerdictRecord> verdicts, const std::filesystem::path& path, ReportFormat format);
void write_report(std::span<const AucRow> rows, const std::filesystem::path& path, ReportFormat format,
                  const nlohmann::json& meta = {});
void write_report(std::span<const ConfusionRow> rows, const std::filesystem::path& path, ReportFormat format,
                  const nlohmann::json& meta = {});

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// %.17g, which round-trips every double.
std::string format_real(double v);

}  // namespace spectrack::io
