#pragma once

// Desk-scale versions of the three evaluation protocols: spectral
// separability (rq1), single-step detection (rq2) and detection after an
// extra benign fine-tune (rq3).

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "spectrack/detector.hpp"
#include "spectrack/io.hpp"
#include "spectrack/sim/config.hpp"
#include "spectrack/sim/task.hpp"
#include "spectrack/sim/tiny_model.hpp"
#include "spectrack/tracking.hpp"

namespace spectrack::sim {

/// ModelProvider over TinyModel.
class SimProvider {
 public:
  using Model = TinyModel;

  SimProvider(ModelShape shape, TrainConfig train, TrainConfig finetune)
      : shape_(std::move(shape)), train_(train), finetune_(finetune) {}

  Model init(std::uint64_t seed) const { return TinyModel::initialize(shape_, seed); }
  Model train(const Model& model, const Dataset& data, std::uint64_t seed) const {
    return sgd_train(model, data, train_, seed);
  }
  Model finetune(const Model& model, const Dataset& data, std::uint64_t seed) const {
    return finetune_tiny(model, data, finetune_, seed);
  }
  ActivationDump dump(const Model& model, const Dataset& data, std::string_view layer) const {
    return dump_tiny(model, data, layer);
  }

  const ModelShape& shape() const noexcept { return shape_; }

 private:
  ModelShape shape_;
  TrainConfig train_;
  TrainConfig finetune_;
};

static_assert(ModelProvider<SimProvider>);

/// Everything shared by the clean and poisoned updates of one seed.
struct ExperimentSetup {
  std::uint64_t seed = 0;
  SyntheticTask task;
  TinyModel reference;  // M0, trained on the full clean training set
  std::string layer;
  Csdd csdd;
};

/// Receives named dumps (CSDD pairs, reference, updates) for persistence.
using DumpSink = std::function<void(const std::string& name, const ActivationDump& dump)>;

ExperimentSetup prepare_experiment(const SimConfig& config, std::uint64_t seed, const DumpSink& sink = {});

struct UpdateResult {
  std::string model_id;
  std::string attack;  // empty for clean updates
  GroundTruth truth = GroundTruth::Clean;
  DetectionVerdict verdict;
  double clean_accuracy = 0.0;
  /// Trigger success on the clean test set; only meaningful for poisoned updates.
  double attack_success = 0.0;
};

struct AttackSummary {
  std::string attack;
  double mean_clean_accuracy = 0.0;
  double mean_attack_success = 0.0;
};

struct DetectionRun {
  std::vector<io::ConfusionRow> rows;
  std::vector<UpdateResult> updates;
  std::vector<AttackSummary> attacks;
  double reference_accuracy = 0.0;
  double clean_update_accuracy = 0.0;
};

struct SeparabilityRun {
  std::vector<io::AucRow> rows;
};

SeparabilityRun run_rq1(const SimConfig& config);
DetectionRun run_rq2(const SimConfig& config, const DumpSink& sink = {});
DetectionRun run_rq3(const SimConfig& config, const DumpSink& sink = {});

/// Metadata recorded alongside every report.
nlohmann::json report_meta(const SimConfig& config, int rq);

}  // namespace spectrack::sim
