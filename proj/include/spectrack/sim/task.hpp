#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "spectrack/dataset.hpp"

namespace spectrack::sim {

/// Gaussian class clusters: class c is mean_c + noise * N(0, I), with the
/// means drawn as random directions of length `separation`.
struct TaskConfig {
  std::uint32_t num_classes = 4;
  std::size_t input_dim = 32;
  double separation = 5.0;
  double noise = 1.0;
  std::size_t train_size = 2000;
  std::size_t test_size = 400;
  std::size_t pool_size = 6000;
};

struct SyntheticTask {
  TaskConfig config;
  Eigen::MatrixXd class_means;  // C x input_dim
  Dataset train;                // D0
  Dataset test;                 // D0_test
  Dataset pool;                 // source of update data
};

/// Deterministic in (config, seed); every split is label-balanced within one sample.
SyntheticTask generate_task(const TaskConfig& config, std::uint64_t seed);

/// `size` samples drawn from `pool` without replacement.
Dataset sample_subset(const Dataset& pool, std::size_t size, std::uint64_t seed);

}  // namespace spectrack::sim
