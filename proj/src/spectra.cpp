#include "spectrack/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "spectrack/error.hpp"

namespace spectrack {

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void require_bins(std::size_t num_bins) {
  if (num_bins == 0) fail(ErrorKind::InvalidInput, "number of bins must be at least 1");
}

// Same arithmetic as normalize_preactivations followed by bin_index, without
// the per-record allocation.
void accumulate_row(std::span<const double> row, std::vector<std::uint64_t>& hist) {
  const std::size_t num_bins = hist.size();
  const double scale = 0.5 * static_cast<double>(num_bins);
  const double m = max_abs(row);
  for (double x : row) {
    const double normalized = m == 0.0 ? x : x / m;
    const auto idx = static_cast<std::size_t>((normalized + 1.0) * scale);
    ++hist[std::min(idx, num_bins - 1)];
  }
}

Spectrum finish(std::uint32_t class_id, const std::vector<std::uint64_t>& counts) {
  Spectrum s;
  s.class_id = class_id;
  s.bins.resize(counts.size());
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  s.sample_count = total;
  if (total == 0) {
    s.empty_class = true;
    std::fill(s.bins.begin(), s.bins.end(), 1.0 / static_cast<double>(counts.size()));
    return s;
  }
  const double denom = static_cast<double>(total);
  for (std::size_t k = 0; k < counts.size(); ++k) s.bins[k] = static_cast<double>(counts[k]) / denom;
  return s;
}

}  // namespace

ActivationDump::ActivationDump(std::string layer_id, std::uint32_t num_classes, std::size_t dim)
    : layer_id_(std::move(layer_id)), num_classes_(num_classes), dim_(dim) {
  if (num_classes_ == 0) fail(ErrorKind::InvalidInput, "dump must have at least one class");
  if (dim_ == 0) fail(ErrorKind::InvalidInput, "dump dimension must be positive");
}

void ActivationDump::add_record(std::uint32_t predicted_class, std::span<const double> preactivations) {
  if (predicted_class >= num_classes_) {
    fail(ErrorKind::InvalidInput, "predicted class " + std::to_string(predicted_class) + " out of range for " +
                                      std::to_string(num_classes_) + " classes");
  }
  if (preactivations.size() != dim_) {
    fail(ErrorKind::InvalidInput, "record has " + std::to_string(preactivations.size()) + " values, expected " +
                                      std::to_string(dim_));
  }
  for (double v : preactivations) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "non-finite pre-activation value");
  }
  classes_.push_back(predicted_class);
  values_.insert(values_.end(), preactivations.begin(), preactivations.end());
}

void ActivationDump::reserve(std::size_t records) {
  classes_.reserve(records);
  values_.reserve(records * dim_);
}

ActivationDump ActivationDump::scaled(double factor) const {
  ActivationDump out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

std::vector<double> normalize_preactivations(std::span<const double> v) {
  if (v.empty()) fail(ErrorKind::InvalidInput, "cannot normalize an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::InvalidInput, "non-finite pre-activation value");
  }
  std::vector<double> out(v.begin(), v.end());
  const double m = max_abs(v);
  if (m == 0.0) return out;
  for (double& x : out) x = x / m;
  return out;
}

std::size_t bin_index(double value, std::size_t num_bins) {
  require_bins(num_bins);
  if (!(value >= -1.0 && value <= 1.0)) fail(ErrorKind::InvalidInput, "value outside [-1, 1]");
  const auto idx = static_cast<std::size_t>((value + 1.0) * 0.5 * static_cast<double>(num_bins));
  return std::min(idx, num_bins - 1);
}

std::vector<Spectrum> compute_class_spectra(const ActivationDump& dump, std::size_t num_bins) {
  require_bins(num_bins);
  if (dump.empty()) fail(ErrorKind::InvalidInput, "activation dump has no records");

  const std::size_t classes = dump.num_classes();
  std::vector<std::vector<std::uint64_t>> counts(classes, std::vector<std::uint64_t>(num_bins, 0));

  for (std::size_t r = 0; r < dump.size(); ++r) {
    accumulate_row(dump.preactivations(r), counts[dump.predicted_class(r)]);
  }

  std::vector<Spectrum> spectra;
  spectra.reserve(classes);
  for (std::size_t c = 0; c < classes; ++c) spectra.push_back(finish(static_cast<std::uint32_t>(c), counts[c]));
  return spectra;
}

Spectrum compute_spectrum(const ActivationDump& dump, std::uint32_t class_id, std::size_t num_bins) {
  require_bins(num_bins);
  if (dump.empty()) fail(ErrorKind::InvalidInput, "activation dump has no records");
  if (class_id >= dump.num_classes()) {
    fail(ErrorKind::InvalidInput, "class " + std::to_string(class_id) + " out of range for " +
                                      std::to_string(dump.num_classes()) + " classes");
  }

  std::vector<std::uint64_t> counts(num_bins, 0);
  for (std::size_t r = 0; r < dump.size(); ++r) {
    if (dump.predicted_class(r) != class_id) continue;
    accumulate_row(dump.preactivations(r), counts);
  }
  return finish(class_id, counts);
}

double spectrum_l2_distance(const Spectrum& a, const Spectrum& b) {
  if (a.bin_count() != b.bin_count()) {
    fail(ErrorKind::InvalidInput, "spectra have different bin counts (" + std::to_string(a.bin_count()) + " vs " +
                                      std::to_string(b.bin_count()) + ")");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.bins.size(); ++k) {
    const double d = a.bins[k] - b.bins[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

DistanceVector class_distance_vector(const ActivationDump& dump_a, const ActivationDump& dump_b, std::size_t num_bins,
                                     std::pair<std::string, std::string> source_pair) {
  if (dump_a.num_classes() != dump_b.num_classes()) {
    fail(ErrorKind::InvalidInput, "dumps disagree on class count (" + std::to_string(dump_a.num_classes()) + " vs " +
                                      std::to_string(dump_b.num_classes()) + ")");
  }
  const auto spectra_a = compute_class_spectra(dump_a, num_bins);
  const auto spectra_b = compute_class_spectra(dump_b, num_bins);

  DistanceVector out;
  out.source_pair = std::move(source_pair);
  out.values.resize(spectra_a.size());
  for (std::size_t c = 0; c < spectra_a.size(); ++c) {
    out.values[c] = spectrum_l2_distance(spectra_a[c], spectra_b[c]);
    if (spectra_a[c].empty_class) out.warnings.push_back("class " + std::to_string(c) + " has no records in first dump");
    if (spectra_b[c].empty_class) out.warnings.push_back("class " + std::to_string(c) + " has no records in second dump");
  }
  return out;
}

}  // namespace spectrack
