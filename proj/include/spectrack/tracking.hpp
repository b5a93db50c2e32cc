#pragma once

// Clean spectra tracking: simulate benign train -> fine-tune transitions and
// record the per-class spectral distance of each into the CSDD matrix.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spectrack/dataset.hpp"
#include "spectrack/error.hpp"
#include "spectrack/spectra.hpp"

namespace spectrack {

inline constexpr std::size_t kDefaultTrainingPairs = 15;

/// Clean spectra distance distribution: one row per simulated clean update,
/// one column per class.
struct Csdd {
  Eigen::MatrixXd matrix;
  std::size_t num_bins = kDefaultBins;
  std::string layer_id;
  std::vector<std::uint64_t> split_seeds;
  std::string provenance;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(matrix.cols()); }

  /// Throws InvalidInput unless n >= 2, every entry is finite and
  /// non-negative, and split_seeds has one entry per row.
  void validate() const;
};

/// Deterministic shuffle keyed by `seed`, cut into two halves whose sizes
/// differ by at most one.
std::pair<Dataset, Dataset> split_dataset(std::uint64_t seed, const Dataset& dataset);

/// Anything that can initialize, train, fine-tune and probe a model.
template <class P>
concept ModelProvider = requires(const P& provider, const typename P::Model& model, const Dataset& data,
                                 std::uint64_t seed, std::string_view layer) {
  typename P::Model;
  { provider.init(seed) } -> std::same_as<typename P::Model>;
  { provider.train(model, data, seed) } -> std::same_as<typename P::Model>;
  { provider.finetune(model, data, seed) } -> std::same_as<typename P::Model>;
  { provider.dump(model, data, layer) } -> std::same_as<ActivationDump>;
};

struct TrackingOptions {
  std::size_t n = kDefaultTrainingPairs;
  std::string layer;
  std::uint32_t num_classes = 0;
  std::size_t num_bins = kDefaultBins;
  /// Row i (1-based) splits with seed `seed_offset + i`.
  std::uint64_t seed_offset = 0;
  std::string provenance;
  /// Receives (row index, dump of G0, dump of G1) so callers can persist dumps.
  std::function<void(std::size_t, const ActivationDump&, const ActivationDump&)> on_pair;
};

/// Row of the CSDD from two dumps of the same clean test set.
void fill_csdd_row(Csdd& csdd, std::size_t row, const ActivationDump& before, const ActivationDump& after);

template <ModelProvider P>
Csdd build_csdd(const P& provider, const Dataset& clean_train, const Dataset& clean_test, const TrackingOptions& options) {
  if (options.n < 2) fail(ErrorKind::InvalidInput, "CSDD needs at least 2 training pairs");
  if (clean_train.empty() || clean_test.empty()) fail(ErrorKind::InvalidInput, "clean datasets must be non-empty");
  if (options.num_classes == 0) fail(ErrorKind::InvalidInput, "number of classes must be positive");

  Csdd csdd;
  csdd.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(options.n), options.num_classes);
  csdd.num_bins = options.num_bins;
  csdd.layer_id = options.layer;
  csdd.provenance = options.provenance;

  for (std::size_t i = 0; i < options.n; ++i) {
    const std::uint64_t seed = options.seed_offset + i + 1;
    csdd.split_seeds.push_back(seed);
    try {
      auto [first_half, second_half] = split_dataset(seed, clean_train);
      const auto g0 = provider.train(provider.init(derive_seed(seed, 1)), first_half, derive_seed(seed, 2));
      const auto g1 = provider.finetune(g0, second_half, derive_seed(seed, 3));
      const ActivationDump before = provider.dump(g0, clean_test, options.layer);
      const ActivationDump after = provider.dump(g1, clean_test, options.layer);
      fill_csdd_row(csdd, i, before, after);
      if (options.on_pair) options.on_pair(i, before, after);
    } catch (const Error& e) {
      throw Error(e.kind(), "CSDD row " + std::to_string(i) + ": " + e.detail());
    }
  }
  return csdd;
}

/// CSDD from pre-exported (G0, G1) dump pairs, row i from pairs[i].
Csdd build_csdd_from_dumps(const std::vector<std::pair<ActivationDump, ActivationDump>>& pairs, std::size_t num_bins,
                           std::string provenance = {});

}  // namespace spectrack
