/*
 *  Copyright 2026 The toxnet authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include "toxnet/network.hpp"

#include <algorithm>
#include <cmath>

#include "toxnet/evaluation.hpp"

namespace toxnet::net {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_dims(const Network& net) {
  if (net.layer_dims.size() < 2) throw Error("network: need at least input and output layers");
  if (net.weights.size() != net.layer_dims.size() - 1 || net.biases.size() != net.weights.size()) {
    throw Error("network: layer count mismatch");
  }
}

}  // namespace

Network Network::restrict_outputs(const std::vector<int>& tasks) const {
  Network out;
  out.layer_dims = layer_dims;
  out.layer_dims.back() = static_cast<int>(tasks.size());
  out.weights = weights;
  out.biases = biases;
  const auto& w_full = weights.back();
  const auto& b_full = biases.back();
  Eigen::MatrixXd w(tasks.size(), w_full.cols());
  Eigen::VectorXd b(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (tasks[k] < 0 || tasks[k] >= w_full.rows()) throw Error("restrict_outputs: task out of range");
    w.row(static_cast<Eigen::Index>(k)) = w_full.row(tasks[k]);
    b(static_cast<Eigen::Index>(k)) = b_full(tasks[k]);
  }
  out.weights.back() = std::move(w);
  out.biases.back() = std::move(b);
  return out;
}

Network init_network(const std::vector<int>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw Error("init_network: empty layer spec");
  for (int d : layer_dims) {
    if (d <= 0) throw Error("init_network: non-positive layer size");
  }
  Network net;
  net.layer_dims = layer_dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = rng.uniform(-bound, bound);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

std::vector<Eigen::MatrixXd> draw_dropout_masks(const Network& net, Eigen::Index batch_rows,
                                                const DropoutSpec& spec, Rng& rng) {
  std::vector<Eigen::MatrixXd> masks;
  masks.reserve(static_cast<std::size_t>(net.hidden_layers()) + 1);
  auto draw = [&](Eigen::Index cols, double keep) {
    Eigen::MatrixXd m(batch_rows, cols);
    const double scale = 1.0 / keep;
    for (Eigen::Index i = 0; i < batch_rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        m(i, j) = rng.uniform() < keep ? scale : 0.0;
      }
    }
    return m;
  };
  masks.push_back(draw(net.input_dim(), spec.input_keep));
  for (int l = 0; l < net.hidden_layers(); ++l) {
    masks.push_back(draw(net.layer_dims[l + 1], spec.hidden_keep));
  }
  return masks;
}

ForwardPass forward_pass(const Network& net, const Eigen::MatrixXd& batch,
                         const std::vector<Eigen::MatrixXd>* masks) {
  check_dims(net);
  if (batch.cols() != net.input_dim()) {
    throw Error("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                std::to_string(net.input_dim()));
  }
  if (masks && static_cast<int>(masks->size()) != net.hidden_layers() + 1) {
    throw Error("forward: dropout mask count mismatch");
  }

  ForwardPass pass;
  pass.input = masks ? (batch.array() * (*masks)[0].array()).matrix() : batch;
  const Eigen::MatrixXd* current = &pass.input;
  const int n_layers = static_cast<int>(net.weights.size());
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z =
        (*current * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    if (l + 1 < n_layers) {
      Eigen::MatrixXd a = z.array().max(0.0).matrix();  // ReLU
      if (masks) a = (a.array() * (*masks)[l + 1].array()).matrix();
      pass.pre.push_back(std::move(z));
      pass.act.push_back(std::move(a));
      current = &pass.act.back();
    } else {
      pass.outputs = z.unaryExpr([](double v) { return sigmoid(v); });
      pass.pre.push_back(std::move(z));
    }
  }
  if (masks) pass.masks = *masks;
  return pass;
}

Eigen::MatrixXd forward_inference(const Network& net, const Eigen::MatrixXd& batch) {
  return forward_pass(net, batch, nullptr).outputs;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> batch_labels(const data::LabelMatrix& labels,
                                                         std::span<const std::size_t> rows) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index t_count = static_cast<Eigen::Index>(labels.tasks());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, t_count);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n, t_count);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const auto v = labels.at(rows[static_cast<std::size_t>(k)], static_cast<std::size_t>(t));
      if (v != data::kMissingLabel) {
        y(k, t) = v;
        mask(k, t) = 1.0;
      }
    }
  }
  return {std::move(y), std::move(mask)};
}

LossResult masked_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& y,
                       const Eigen::MatrixXd& mask) {
  if (outputs.rows() != y.rows() || outputs.cols() != y.cols() || y.rows() != mask.rows() ||
      y.cols() != mask.cols()) {
    throw Error("masked_loss: shape mismatch");
  }
  LossResult result;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    for (Eigen::Index t = 0; t < outputs.cols(); ++t) {
      if (mask(i, t) == 0.0) continue;
      const double p = std::clamp(outputs(i, t), kProbClamp, 1.0 - kProbClamp);
      sum -= y(i, t) == 1.0 ? std::log(p) : std::log(1.0 - p);
      ++result.labeled;
    }
  }
  result.value = result.labeled > 0 ? sum / static_cast<double>(result.labeled) : 0.0;
  return result;
}

Gradients backward(const Network& net, const ForwardPass& pass, const Eigen::MatrixXd& y,
                   const Eigen::MatrixXd& mask) {
  check_dims(net);
  const int n_layers = static_cast<int>(net.weights.size());
  if (pass.outputs.rows() != y.rows() || pass.outputs.cols() != y.cols() ||
      pass.outputs.cols() != net.output_dim() ||
      static_cast<int>(pass.pre.size()) != n_layers) {
    throw Error("backward: stale or mismatched activations");
  }

  // Rows without a single label contribute exactly zero. Dropping them up
  // front keeps the remaining summation order independent of such padding,
  // so gradients are bit-identical with or without all-masked rows.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    if (mask.row(i).sum() > 0.0) active.push_back(i);
  }
  if (static_cast<Eigen::Index>(active.size()) != mask.rows()) {
    ForwardPass compact;
    compact.input = pass.input(active, Eigen::all);
    for (const auto& m : pass.pre) compact.pre.push_back(m(active, Eigen::all));
    for (const auto& m : pass.act) compact.act.push_back(m(active, Eigen::all));
    for (const auto& m : pass.masks) compact.masks.push_back(m(active, Eigen::all));
    compact.outputs = pass.outputs(active, Eigen::all);
    return backward(net, compact, y(active, Eigen::all), mask(active, Eigen::all));
  }

  const double labeled = mask.sum();
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);

  // output delta with the mask multiplied in; missing entries vanish here
  Eigen::MatrixXd delta = (pass.outputs - y).cwiseProduct(mask);
  if (labeled > 0) delta /= labeled;

  for (int l = n_layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below = l == 0 ? pass.input : pass.act[l - 1];
    grads.weights[l] = delta.transpose() * below;
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd upstream = delta * net.weights[l];
      if (!pass.masks.empty()) upstream = upstream.cwiseProduct(pass.masks[l]);
      // ReLU gate from the stored pre-activations; derivative at 0 is 0
      delta = upstream.cwiseProduct(
          (pass.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

void sgd_step(Network& net, const Gradients& grads, double learning_rate, double l2) {
  check_dims(net);
  if (grads.weights.size() != net.weights.size()) throw Error("sgd_step: gradient shape mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() ||
        grads.weights[l].cols() != net.weights[l].cols()) {
      throw Error("sgd_step: gradient shape mismatch");
    }
    net.weights[l] -= learning_rate * (grads.weights[l] + l2 * net.weights[l]);
    net.biases[l] -= learning_rate * grads.biases[l];
  }
}

TrainResult train(const data::SparseFeatureMatrix& features,
                  const data::NormalizationScheme* normalization,
                  const data::LabelMatrix& labels, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const NetSpec& spec,
                  const TrainConfig& config, const Network* initial) {
  if (train_rows.empty()) throw Error("train: empty training set");
  if (features.rows() != labels.rows()) throw Error("train: feature/label row mismatch");
  if (config.batch_size <= 0) throw Error("train: batch_size must be positive");

  std::vector<int> dims;
  dims.push_back(static_cast<int>(features.cols()));
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(static_cast<int>(labels.tasks()));

  Network net = initial ? *initial : init_network(dims, derive_seed(config.seed, 0x696e6974));
  if (net.layer_dims != dims) throw Error("train: initial network shape mismatch");

  Rng loop_rng(derive_seed(config.seed, 0x6c6f6f70));

  TrainResult result;
  result.network = net;
  std::optional<double> best_metric;

  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  std::vector<std::size_t> batch_rows;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    loop_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t labeled_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch_rows.assign(order.begin() + start, order.begin() + stop);
      Eigen::MatrixXd batch = features.dense_batch(batch_rows);
      if (normalization) data::apply_normalizer(batch, *normalization);
      auto [y, mask] = batch_labels(labels, batch_rows);

      std::vector<Eigen::MatrixXd> masks;
      if (config.dropout) {
        masks = draw_dropout_masks(net, batch.rows(), *config.dropout, loop_rng);
      }
      const ForwardPass pass = forward_pass(net, batch, config.dropout ? &masks : nullptr);
      const LossResult loss = masked_loss(pass.outputs, y, mask);
      loss_sum += loss.value * static_cast<double>(loss.labeled);
      labeled_sum += loss.labeled;
      const Gradients grads = backward(net, pass, y, mask);
      sgd_step(net, grads, config.learning_rate, config.l2);
    }

    EpochRecord record;
    record.train_loss = labeled_sum > 0 ? loss_sum / static_cast<double>(labeled_sum) : 0.0;
    if (!val_rows.empty()) {
      const Eigen::MatrixXd preds = predict(net, features, normalization, val_rows);
      record.val_metric = eval::mean_task_auc(preds, labels, val_rows);
    }
    result.history.epochs.push_back(record);
    result.history.stopped_epoch = epoch;

    if (record.val_metric) {
      if (!best_metric || *record.val_metric > *best_metric) {
        best_metric = record.val_metric;
        result.history.best_epoch = epoch;
        result.network = net;
      }
      if (epoch - result.history.best_epoch >= config.patience) break;
    } else {
      // no usable validation signal: keep the latest parameters
      result.history.best_epoch = epoch;
      result.network = net;
    }
  }
  return result;
}

Eigen::MatrixXd predict(const Network& net, const data::SparseFeatureMatrix& features,
                        const data::NormalizationScheme* normalization,
                        std::span<const std::size_t> rows) {
  constexpr std::size_t kChunk = 512;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(net.output_dim()));
  std::vector<std::size_t> chunk;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const std::size_t stop = std::min(rows.size(), start + kChunk);
    chunk.assign(rows.begin() + start, rows.begin() + stop);
    Eigen::MatrixXd batch = features.dense_batch(chunk);
    if (normalization) data::apply_normalizer(batch, *normalization);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(stop - start)) =
        forward_inference(net, batch);
  }
  return out;
}

}  // namespace toxnet::net
