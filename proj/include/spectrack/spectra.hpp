#pragma once

// Pre-activation spectra: per-class histograms of L-infinity normalized
// pre-activation values, and the per-class L2 distances between them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spectrack {

inline constexpr std::size_t kDefaultBins = 20;

/// Pre-activation vectors and predicted labels for one (model, dataset, layer).
/// Values are held in double precision; the on-disk format stores f32.
class ActivationDump {
 public:
  ActivationDump(std::string layer_id, std::uint32_t num_classes, std::size_t dim);

  /// Throws InvalidInput if the class is out of range, the vector width is
  /// not dim(), or any value is non-finite.
  void add_record(std::uint32_t predicted_class, std::span<const double> preactivations);
  void reserve(std::size_t records);

  const std::string& layer_id() const noexcept { return layer_id_; }
  std::uint32_t num_classes() const noexcept { return num_classes_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return classes_.size(); }
  bool empty() const noexcept { return classes_.empty(); }

  std::uint32_t predicted_class(std::size_t record) const { return classes_[record]; }
  std::span<const double> preactivations(std::size_t record) const {
    return {values_.data() + record * dim_, dim_};
  }
  std::span<const std::uint32_t> classes() const noexcept { return classes_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Multiplies every pre-activation by `factor`.
  ActivationDump scaled(double factor) const;

  friend bool operator==(const ActivationDump&, const ActivationDump&) = default;

 private:
  std::string layer_id_;
  std::uint32_t num_classes_;
  std::size_t dim_;
  std::vector<std::uint32_t> classes_;
  std::vector<double> values_;
};

struct Spectrum {
  std::vector<double> bins;
  std::uint32_t class_id = 0;
  /// Pre-activation values aggregated (records x dim).
  std::uint64_t sample_count = 0;
  /// Set when no record was predicted as class_id; bins are then uniform.
  bool empty_class = false;

  std::size_t bin_count() const noexcept { return bins.size(); }
};

struct DistanceVector {
  std::vector<double> values;
  std::pair<std::string, std::string> source_pair;
  std::vector<std::string> warnings;
};

/// Divides by max |v_i|. A zero vector is returned unchanged.
std::vector<double> normalize_preactivations(std::span<const double> v);

/// floor((value + 1) / 2 * num_bins), with value == 1 landing in the last bin.
std::size_t bin_index(double value, std::size_t num_bins);

Spectrum compute_spectrum(const ActivationDump& dump, std::uint32_t class_id, std::size_t num_bins = kDefaultBins);

/// All C spectra in a single pass over the dump; element c is the spectrum of class c.
std::vector<Spectrum> compute_class_spectra(const ActivationDump& dump, std::size_t num_bins = kDefaultBins);

double spectrum_l2_distance(const Spectrum& a, const Spectrum& b);

DistanceVector class_distance_vector(const ActivationDump& dump_a, const ActivationDump& dump_b,
                                     std::size_t num_bins = kDefaultBins,
                                     std::pair<std::string, std::string> source_pair = {});

}  // namespace spectrack
