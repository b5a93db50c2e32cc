#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectrack/dataset.hpp"

namespace spectrack::sim {

class TinyModel;

enum class TriggerKind { Patch, Blend };

/// Patch overwrites a window of input coordinates with fixed values (a
/// BadNet-style stamp). Blend mixes a fixed pattern in with transparency
/// `blend_alpha`.
struct TriggerSpec {
  std::string name;
  TriggerKind kind = TriggerKind::Patch;
  std::size_t patch_start = 0;
  std::vector<double> patch_values;
  std::vector<double> blend_pattern;
  double blend_alpha = 0.2;
  int target_class = 0;
  double poison_rate = 0.1;

  /// Throws InvalidInput if the trigger cannot apply to inputs of this width.
  void validate(std::size_t input_dim, std::uint32_t num_classes) const;
};

/// Random pattern with entries uniform in [-amplitude, amplitude].
std::vector<double> make_blend_pattern(std::size_t input_dim, double amplitude, std::uint64_t seed);

/// Triggered copy of `sample` together with the target label.
std::pair<std::vector<double>, int> apply_trigger(std::span<const double> sample, const TriggerSpec& spec);

struct PoisonedDataset {
  Dataset data;
  std::vector<std::size_t> poisoned_indices;  // sorted
};

/// Replaces floor(rate * |dataset|) seeded-random samples with triggered ones.
PoisonedDataset poison_dataset(const Dataset& dataset, const TriggerSpec& spec, std::uint64_t seed);

/// Triggered copies of every sample whose label is not the target.
Dataset triggered_inputs(const Dataset& dataset, const TriggerSpec& spec);

/// Fraction of triggered non-target inputs classified as the target class.
double attack_success_rate(const TinyModel& model, const Dataset& clean_test, const TriggerSpec& spec);

}  // namespace spectrack::sim
