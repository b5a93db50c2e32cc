#include "spectrack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spectrack {

void Csdd::validate() const {
  if (matrix.rows() < 2) fail(ErrorKind::InvalidInput, "CSDD needs at least 2 rows");
  if (matrix.cols() < 1) fail(ErrorKind::InvalidInput, "CSDD needs at least 1 class");
  if (num_bins == 0) fail(ErrorKind::InvalidInput, "CSDD bin count must be positive");
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      const double v = matrix(r, c);
      if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::InvalidInput, "CSDD entries must be finite and non-negative");
    }
  }
  if (split_seeds.size() != rows()) fail(ErrorKind::InvalidInput, "CSDD needs one split seed per row");
}

std::pair<Dataset, Dataset> split_dataset(std::uint64_t seed, const Dataset& dataset) {
  if (dataset.size() < 2) fail(ErrorKind::InvalidInput, "cannot split a dataset with fewer than 2 samples");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = order.size() / 2;
  const std::span<const std::size_t> all(order);
  return {dataset.subset(all.first(half)), dataset.subset(all.subspan(half))};
}

void fill_csdd_row(Csdd& csdd, std::size_t row, const ActivationDump& before, const ActivationDump& after) {
  if (before.num_classes() != csdd.num_classes() || after.num_classes() != csdd.num_classes()) {
    fail(ErrorKind::ConfigMismatch, "dump class count does not match the CSDD width " +
                                        std::to_string(csdd.num_classes()));
  }
  if (before.layer_id() != csdd.layer_id || after.layer_id() != csdd.layer_id) {
    fail(ErrorKind::ConfigMismatch, "dump layer does not match CSDD layer '" + csdd.layer_id + "'");
  }
  const DistanceVector distances = class_distance_vector(before, after, csdd.num_bins);
  for (std::size_t c = 0; c < distances.values.size(); ++c) {
    csdd.matrix(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = distances.values[c];
  }
  for (const auto& w : distances.warnings) {
    if (!csdd.provenance.empty()) csdd.provenance += '\n';
    csdd.provenance += "warning: row " + std::to_string(row) + ": " + w;
  }
}

Csdd build_csdd_from_dumps(const std::vector<std::pair<ActivationDump, ActivationDump>>& pairs, std::size_t num_bins,
                           std::string provenance) {
  if (pairs.size() < 2) fail(ErrorKind::InvalidInput, "CSDD needs at least 2 dump pairs");
  Csdd csdd;
  csdd.num_bins = num_bins;
  csdd.layer_id = pairs.front().first.layer_id();
  csdd.provenance = std::move(provenance);
  csdd.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), pairs.front().first.num_classes());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    csdd.split_seeds.push_back(i + 1);
    try {
      fill_csdd_row(csdd, i, pairs[i].first, pairs[i].second);
    } catch (const Error& e) {
      throw Error(e.kind(), "CSDD row " + std::to_string(i) + ": " + e.detail());
    }
  }
  return csdd;
}

}  // namespace spectrack
