#pragma once

// Declarative experiment configuration. JSON keys (all optional, defaults
// below): task, model, attack, csdd, detection, seeds.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectrack/sim/task.hpp"
#include "spectrack/sim/tiny_model.hpp"
#include "spectrack/sim/trigger.hpp"

namespace spectrack::sim {

struct AttackConfig {
  std::string name = "patch";
  TriggerKind kind = TriggerKind::Patch;
  std::size_t patch_start = 0;
  std::size_t patch_length = 4;
  double patch_value = 5.0;
  double blend_transparency = 0.4;
  double pattern_amplitude = 6.0;
  std::uint64_t pattern_seed = 7;
  int target_class = 0;
  double poison_rate = 0.1;

  TriggerSpec to_trigger(std::size_t input_dim) const;
};

enum class ProbeDataset { CleanTest, UpdateSubset };

struct SimConfig {
  TaskConfig task;
  std::vector<std::size_t> hidden{32, 32};
  TrainConfig train{20, 0.05, 32};
  TrainConfig finetune{4, 0.01, 32};
  std::vector<AttackConfig> attacks;

  std::size_t csdd_pairs = 15;
  std::size_t bins = 20;

  double alpha = 0.999;
  /// Clean and poisoned updates generated per attack.
  std::size_t updates = 10;
  /// Samples per fine-tuning update; 0 means half of the clean training set.
  std::size_t update_size = 0;
  ProbeDataset probe = ProbeDataset::CleanTest;
  /// Size of the trusted clean subset when probe == UpdateSubset.
  std::size_t probe_size = 200;

  std::uint64_t seed = 1;
  std::size_t seed_count = 10;

  ModelShape model_shape() const;
  std::size_t effective_update_size() const;
  void validate() const;
};

/// Patch and Blend attacks with desk-scale defaults.
SimConfig default_sim_config();

/// Starts from default_sim_config() and overrides the keys present.
/// Unknown keys and ill-typed values raise InvalidInput.
SimConfig sim_config_from_json(const nlohmann::json& doc);
nlohmann::json sim_config_to_json(const SimConfig& config);
SimConfig load_sim_config(const std::filesystem::path& path);

}  // namespace spectrack::sim
