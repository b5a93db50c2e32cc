#include "spectrack/sim/tiny_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spectrack/error.hpp"

namespace spectrack::sim {

namespace {

using Eigen::MatrixXd;

// Forward pass keeping every pre-activation (z) and activation (a).
struct Trace {
  std::vector<MatrixXd> pre;
  std::vector<MatrixXd> act;  // act[0] is the input
};

Trace forward(const TinyModel& model, const SampleMatrix& inputs) {
  Trace t;
  t.act.emplace_back(inputs);
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    MatrixXd z = t.act.back() * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    t.pre.push_back(z);
    if (l + 1 < layers.size()) t.act.push_back(z.cwiseMax(0.0));
  }
  return t;
}

std::size_t parse_hidden_layer(std::string_view layer, std::size_t hidden_count) {
  constexpr std::string_view prefix = "hidden";
  if (layer.substr(0, prefix.size()) == prefix && layer.size() > prefix.size()) {
    std::size_t k = 0;
    for (char ch : layer.substr(prefix.size())) {
      if (ch < '0' || ch > '9') { k = 0; break; }
      k = k * 10 + static_cast<std::size_t>(ch - '0');
    }
    if (k >= 1 && k <= hidden_count) return k - 1;
  }
  fail(ErrorKind::InvalidInput, "unknown layer '" + std::string(layer) + "'");
}

}  // namespace

TinyModel TinyModel::initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.input_dim == 0 || shape.num_classes < 2 || shape.hidden.empty()) {
    fail(ErrorKind::InvalidInput, "model needs a positive input width, a hidden layer and at least 2 classes");
  }
  TinyModel m;
  m.shape_ = shape;
  m.rng_seed_ = seed;
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> widths{shape.input_dim};
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(shape.num_classes);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l + 1] == 0) fail(ErrorKind::InvalidInput, "layer widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(widths[l + 1]), static_cast<Eigen::Index>(widths[l]));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(layer.weight.rows());
    m.layers_.push_back(std::move(layer));
  }
  return m;
}

std::string TinyModel::probe_layer() const { return "hidden" + std::to_string(shape_.hidden.size()); }

Eigen::MatrixXd TinyModel::preactivations(const SampleMatrix& inputs, std::string_view layer) const {
  const std::size_t index = parse_hidden_layer(layer, shape_.hidden.size());
  return forward(*this, inputs).pre[index];
}

Eigen::MatrixXd TinyModel::logits(const SampleMatrix& inputs) const { return forward(*this, inputs).pre.back(); }

std::vector<int> TinyModel::predict(const SampleMatrix& inputs) const {
  const MatrixXd out = logits(inputs);
  std::vector<int> labels(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < out.cols(); ++c) {
      if (out(r, c) > out(r, best)) best = c;
    }
    labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return labels;
}

double TinyModel::accuracy(const Dataset& data) const {
  if (data.empty()) fail(ErrorKind::InvalidInput, "accuracy on an empty dataset");
  const auto predicted = predict(data.inputs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

bool operator==(const TinyModel& a, const TinyModel& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

double loss_and_gradients(const TinyModel& model, const SampleMatrix& inputs, std::span<const int> labels,
                          std::vector<DenseLayer>* grads) {
  const auto batch = inputs.rows();
  if (batch == 0 || static_cast<std::size_t>(batch) != labels.size()) {
    fail(ErrorKind::InvalidInput, "batch inputs and labels disagree in size");
  }
  const auto classes = static_cast<int>(model.shape().num_classes);
  for (int y : labels) {
    if (y < 0 || y >= classes) fail(ErrorKind::InvalidInput, "label out of range");
  }

  const Trace t = forward(model, inputs);
  const MatrixXd& logits = t.pre.back();

  // Softmax with the row max subtracted.
  MatrixXd prob = logits.colwise() - logits.rowwise().maxCoeff();
  prob = prob.array().exp();
  const Eigen::VectorXd norm = prob.rowwise().sum();
  double loss = 0.0;
  for (Eigen::Index r = 0; r < batch; ++r) {
    prob.row(r) /= norm(r);
    loss -= std::log(prob(r, labels[static_cast<std::size_t>(r)]));
  }
  loss /= static_cast<double>(batch);
  if (grads == nullptr) return loss;

  const auto& layers = model.layers();
  grads->resize(layers.size());
  // d(loss)/d(logits) = (softmax - onehot) / batch
  MatrixXd delta = prob;
  for (Eigen::Index r = 0; r < batch; ++r) delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  delta /= static_cast<double>(batch);

  for (std::size_t l = layers.size(); l-- > 0;) {
    (*grads)[l].weight = delta.transpose() * t.act[l];
    (*grads)[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    MatrixXd upstream = delta * layers[l].weight;
    // ReLU derivative taken as 0 at exactly 0.
    delta = upstream.cwiseProduct((t.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

TinyModel sgd_train(const TinyModel& model, const Dataset& data, const TrainConfig& config, std::uint64_t seed) {
  if (data.empty()) fail(ErrorKind::InvalidInput, "training on an empty dataset");
  if (data.input_dim() != model.shape().input_dim) fail(ErrorKind::InvalidInput, "dataset width does not match model");
  if (config.batch_size == 0) fail(ErrorKind::InvalidInput, "batch size must be positive");

  TinyModel out = model;
  if (config.epochs == 0 || config.learning_rate == 0.0) return out;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<DenseLayer> grads;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const Dataset batch = data.subset(std::span(order).subspan(start, end - start));
      const double loss = loss_and_gradients(out, batch.inputs, batch.labels, &grads);
      if (!std::isfinite(loss)) {
        fail(ErrorKind::TrainingDiverged, "loss became non-finite in epoch " + std::to_string(epoch));
      }
      auto& layers = out.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight -= config.learning_rate * grads[l].weight;
        layers[l].bias -= config.learning_rate * grads[l].bias;
      }
    }
  }
  return out;
}

TinyModel train_tiny(const ModelShape& shape, const TrainConfig& config, const Dataset& data, std::uint64_t seed) {
  return sgd_train(TinyModel::initialize(shape, derive_seed(seed, 0)), data, config, derive_seed(seed, 1));
}

TinyModel finetune_tiny(const TinyModel& model, const Dataset& data, const TrainConfig& config, std::uint64_t seed) {
  return sgd_train(model, data, config, seed);
}

ActivationDump dump_tiny(const TinyModel& model, const Dataset& data, std::string_view layer) {
  if (data.empty()) fail(ErrorKind::InvalidInput, "cannot dump an empty dataset");
  const Eigen::MatrixXd z = model.preactivations(data.inputs, layer);
  const auto predicted = model.predict(data.inputs);
  ActivationDump dump(std::string(layer), model.shape().num_classes, static_cast<std::size_t>(z.cols()));
  dump.reserve(data.size());
  std::vector<double> row(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) row[static_cast<std::size_t>(c)] = z(r, c);
    dump.add_record(static_cast<std::uint32_t>(predicted[static_cast<std::size_t>(r)]), row);
  }
  return dump;
}

}  // namespace spectrack::sim
