#pragma once

// Small fully connected ReLU classifier with plain mini-batch SGD. Stands in
// for a real network in the desk-scale experiments.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spectrack/dataset.hpp"
#include "spectrack/spectra.hpp"

namespace spectrack::sim {

struct ModelShape {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden{32, 32};
  std::uint32_t num_classes = 4;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
};

class TinyModel {
 public:
  /// He-uniform weights, zero biases.
  static TinyModel initialize(const ModelShape& shape, std::uint64_t seed);

  const ModelShape& shape() const noexcept { return shape_; }
  std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  /// "hidden<k>" for k = 1..hidden.size(); the default probe is the last one.
  std::string probe_layer() const;

  /// Pre-activations of the named hidden layer, one row per sample.
  Eigen::MatrixXd preactivations(const SampleMatrix& inputs, std::string_view layer) const;
  Eigen::MatrixXd logits(const SampleMatrix& inputs) const;
  /// Argmax of the logits; ties go to the lowest class index.
  std::vector<int> predict(const SampleMatrix& inputs) const;
  double accuracy(const Dataset& data) const;

  friend bool operator==(const TinyModel& a, const TinyModel& b);

 private:
  ModelShape shape_;
  std::vector<DenseLayer> layers_;
  std::uint64_t rng_seed_ = 0;
};

/// Mean softmax cross-entropy over the batch. When `grads` is non-null it is
/// resized to match the model and filled with d(loss)/d(parameter).
double loss_and_gradients(const TinyModel& model, const SampleMatrix& inputs, std::span<const int> labels,
                          std::vector<DenseLayer>* grads);

/// Continues SGD from the given weights; the input model is not modified.
/// Throws TrainingDiverged if the loss becomes non-finite.
TinyModel sgd_train(const TinyModel& model, const Dataset& data, const TrainConfig& config, std::uint64_t seed);

TinyModel train_tiny(const ModelShape& shape, const TrainConfig& config, const Dataset& data, std::uint64_t seed);
TinyModel finetune_tiny(const TinyModel& model, const Dataset& data, const TrainConfig& config, std::uint64_t seed);

ActivationDump dump_tiny(const TinyModel& model, const Dataset& data, std::string_view layer);

}  // namespace spectrack::sim
