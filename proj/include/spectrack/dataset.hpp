#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spectrack {

/// One sample per row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  SampleMatrix inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  bool empty() const noexcept { return labels.empty(); }

  Dataset subset(std::span<const std::size_t> indices) const;
};

/// splitmix64 mixing of a parent seed with a stream tag; used to derive
/// independent per-cell seeds from a single user seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept {
  return derive_seed(derive_seed(seed, tag), index);
}

}  // namespace spectrack
