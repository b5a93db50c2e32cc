#include "spectrack/sim/task.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "spectrack/error.hpp"

namespace spectrack::sim {

namespace {

Dataset draw(const Eigen::MatrixXd& means, double noise, std::size_t count, std::mt19937_64& rng) {
  const auto classes = static_cast<std::size_t>(means.rows());
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(count), means.cols());
  d.labels = std::move(labels);
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < means.cols(); ++j) {
      d.inputs(row, j) = means(d.labels[i], j) + noise * gauss(rng);
    }
  }
  return d;
}

}  // namespace

SyntheticTask generate_task(const TaskConfig& config, std::uint64_t seed) {
  if (config.num_classes < 2) fail(ErrorKind::InvalidInput, "task needs at least 2 classes");
  if (config.input_dim == 0) fail(ErrorKind::InvalidInput, "input dimension must be positive");
  if (config.train_size < 2 * config.num_classes || config.test_size < config.num_classes || config.pool_size == 0) {
    fail(ErrorKind::InvalidInput, "dataset sizes too small for the number of classes");
  }
  if (!(config.separation > 0.0) || !(config.noise >= 0.0)) {
    fail(ErrorKind::InvalidInput, "separation must be positive and noise non-negative");
  }

  SyntheticTask task;
  task.config = config;
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  task.class_means.resize(config.num_classes, static_cast<Eigen::Index>(config.input_dim));
  for (Eigen::Index c = 0; c < task.class_means.rows(); ++c) {
    for (Eigen::Index j = 0; j < task.class_means.cols(); ++j) task.class_means(c, j) = gauss(rng);
    task.class_means.row(c) *= config.separation / task.class_means.row(c).norm();
  }

  std::mt19937_64 train_rng(derive_seed(seed, 1));
  std::mt19937_64 test_rng(derive_seed(seed, 2));
  std::mt19937_64 pool_rng(derive_seed(seed, 3));
  task.train = draw(task.class_means, config.noise, config.train_size, train_rng);
  task.test = draw(task.class_means, config.noise, config.test_size, test_rng);
  task.pool = draw(task.class_means, config.noise, config.pool_size, pool_rng);
  return task;
}

Dataset sample_subset(const Dataset& pool, std::size_t size, std::uint64_t seed) {
  if (size == 0 || size > pool.size()) fail(ErrorKind::InvalidInput, "subset size must be in [1, pool size]");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(size);
  return pool.subset(order);
}

}  // namespace spectrack::sim
