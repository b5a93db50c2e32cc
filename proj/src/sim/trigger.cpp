#include "spectrack/sim/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spectrack/error.hpp"
#include "spectrack/sim/tiny_model.hpp"

namespace spectrack::sim {

void TriggerSpec::validate(std::size_t input_dim, std::uint32_t num_classes) const {
  if (target_class < 0 || static_cast<std::uint32_t>(target_class) >= num_classes) {
    fail(ErrorKind::InvalidInput, "trigger target class out of range");
  }
  if (!(poison_rate > 0.0 && poison_rate < 1.0)) fail(ErrorKind::InvalidInput, "poison rate must lie in (0, 1)");
  switch (kind) {
    case TriggerKind::Patch:
      if (patch_values.empty() || patch_start + patch_values.size() > input_dim) {
        fail(ErrorKind::InvalidInput, "patch window out of range");
      }
      break;
    case TriggerKind::Blend:
      if (blend_pattern.size() != input_dim) fail(ErrorKind::InvalidInput, "blend pattern width does not match input");
      if (!(blend_alpha >= 0.0 && blend_alpha <= 1.0)) fail(ErrorKind::InvalidInput, "blend transparency outside [0, 1]");
      break;
  }
}

std::vector<double> make_blend_pattern(std::size_t input_dim, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  std::vector<double> pattern(input_dim);
  for (auto& v : pattern) v = dist(rng);
  return pattern;
}

std::pair<std::vector<double>, int> apply_trigger(std::span<const double> sample, const TriggerSpec& spec) {
  std::vector<double> out(sample.begin(), sample.end());
  switch (spec.kind) {
    case TriggerKind::Patch:
      if (spec.patch_start + spec.patch_values.size() > out.size()) {
        fail(ErrorKind::InvalidInput, "patch window out of range");
      }
      std::copy(spec.patch_values.begin(), spec.patch_values.end(),
                out.begin() + static_cast<std::ptrdiff_t>(spec.patch_start));
      break;
    case TriggerKind::Blend:
      if (spec.blend_pattern.size() != out.size()) fail(ErrorKind::InvalidInput, "blend pattern width does not match input");
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 - spec.blend_alpha) * out[i] + spec.blend_alpha * spec.blend_pattern[i];
      }
      break;
  }
  return {std::move(out), spec.target_class};
}

namespace {

void trigger_row(Dataset& data, std::size_t i, const TriggerSpec& spec) {
  const auto row = static_cast<Eigen::Index>(i);
  std::vector<double> sample(data.inputs.row(row).begin(), data.inputs.row(row).end());
  auto [triggered, label] = apply_trigger(sample, spec);
  for (std::size_t j = 0; j < triggered.size(); ++j) data.inputs(row, static_cast<Eigen::Index>(j)) = triggered[j];
  data.labels[i] = label;
}

}  // namespace

PoisonedDataset poison_dataset(const Dataset& dataset, const TriggerSpec& spec, std::uint64_t seed) {
  if (!(spec.poison_rate > 0.0 && spec.poison_rate < 1.0)) fail(ErrorKind::InvalidInput, "poison rate must lie in (0, 1)");
  const auto count = static_cast<std::size_t>(std::floor(spec.poison_rate * static_cast<double>(dataset.size())));

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());

  PoisonedDataset out{dataset, order};
  for (std::size_t i : out.poisoned_indices) trigger_row(out.data, i, spec);
  return out;
}

Dataset triggered_inputs(const Dataset& dataset, const TriggerSpec& spec) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.labels[i] != spec.target_class) keep.push_back(i);
  }
  Dataset out = dataset.subset(keep);
  for (std::size_t i = 0; i < out.size(); ++i) trigger_row(out, i, spec);
  return out;
}

double attack_success_rate(const TinyModel& model, const Dataset& clean_test, const TriggerSpec& spec) {
  const Dataset triggered = triggered_inputs(clean_test, spec);
  if (triggered.empty()) fail(ErrorKind::InvalidInput, "no non-target samples to trigger");
  return model.accuracy(triggered);
}

}  // namespace spectrack::sim
