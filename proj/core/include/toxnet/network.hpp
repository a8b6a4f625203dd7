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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/rng.hpp"

namespace toxnet::net {

// Multi-task feedforward classifier: ReLU hidden layers, one sigmoid output
// unit per task. Missing labels are handled by masking: they contribute
// exactly zero to the loss and to every gradient.
//
// The loss over a batch is the masked cross-entropy
//
//   -(1/N) sum_i sum_t m(i,t) [ y(i,t) log p(i,t) + (1-y(i,t)) log(1-p(i,t)) ]
//
// where N is the number of labeled (i,t) entries in the batch, and the
// output-layer delta is m(i,t) (p(i,t) - y(i,t)) / N. Probabilities are
// clamped to [1e-7, 1-1e-7] before the log as a numerical guard only.
struct Network {
  std::vector<int> layer_dims;  // [d, h_1, ..., h_L, T]
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: layer_dims[l+1] x layer_dims[l]
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int hidden_layers() const { return static_cast<int>(layer_dims.size()) - 2; }

  /// Same hidden stack, output layer restricted to the given task rows.
  Network restrict_outputs(const std::vector<int>& tasks) const;
};

/// Uniform init in +/- sqrt(6 / (fan_in + fan_out)), biases zero; the draw
/// order (layer by layer, row-major within a matrix) is pinned by the seed.
Network init_network(const std::vector<int>& layer_dims, std::uint64_t seed);

struct DropoutSpec {
  double input_keep = 0.8;
  double hidden_keep = 0.5;
};

struct TrainConfig {
  double learning_rate = 0.05;
  double l2 = 0.0;
  std::optional<DropoutSpec> dropout;
  int batch_size = 512;
  int max_epochs = 200;
  int patience = 10;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
};

/// Everything backward() needs from the forward pass. `masks` holds the
/// inverted-dropout masks actually applied (values 0 or 1/keep); masks[0]
/// acts on the input, masks[l] on hidden layer l's activation.
struct ForwardPass {
  Eigen::MatrixXd input;  // post input-dropout
  std::vector<Eigen::MatrixXd> pre;   // pre-activations, hidden layers then output
  std::vector<Eigen::MatrixXd> act;   // hidden activations post-dropout
  Eigen::MatrixXd outputs;            // n x T sigmoid probabilities
  std::vector<Eigen::MatrixXd> masks;  // empty when dropout is off
};

/// Dropout masks for one batch, already scaled by 1/keep.
std::vector<Eigen::MatrixXd> draw_dropout_masks(const Network& net, Eigen::Index batch_rows,
                                                const DropoutSpec& spec, Rng& rng);

/// Training-mode pass. Pass nullptr for masks to run without dropout;
/// inference never applies dropout (inverted scaling makes the two agree in
/// expectation, and exactly when dropout is off).
ForwardPass forward_pass(const Network& net, const Eigen::MatrixXd& batch,
                         const std::vector<Eigen::MatrixXd>* masks);

Eigen::MatrixXd forward_inference(const Network& net, const Eigen::MatrixXd& batch);

/// (y, mask) pair for the given label rows; y is 0 where the mask is 0.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> batch_labels(const data::LabelMatrix& labels,
                                                         std::span<const std::size_t> rows);

struct LossResult {
  double value = 0.0;
  std::size_t labeled = 0;  // 0 means every entry was masked; value is 0 then
};

LossResult masked_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& y,
                       const Eigen::MatrixXd& mask);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

Gradients backward(const Network& net, const ForwardPass& pass, const Eigen::MatrixXd& y,
                   const Eigen::MatrixXd& mask);

/// w <- w - lr (grad + l2 w); biases are exempt from the decay term.
void sgd_step(Network& net, const Gradients& grads, double learning_rate, double l2);

struct EpochRecord {
  double train_loss = 0.0;
  std::optional<double> val_metric;  // mean AUC over tasks with both classes
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;     // 1-based; 0 when no epoch ran
  int stopped_epoch = 0;  // last epoch executed
};

struct TrainResult {
  Network network;  // snapshot at best_epoch (final epoch if no metric)
  TrainHistory history;
};

struct NetSpec {
  std::vector<int> hidden;  // e.g. {1024, 1024} for two layers
};

// Mini-batch SGD with per-epoch seeded shuffling, sparse-to-dense batch
// conversion, optional normalization of each densified batch, and early
// stopping on the validation metric. The last short batch of an epoch is
// used. `initial` overrides the seed-derived initialization when given.
TrainResult train(const data::SparseFeatureMatrix& features,
                  const data::NormalizationScheme* normalization,
                  const data::LabelMatrix& labels, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const NetSpec& spec,
                  const TrainConfig& config, const Network* initial = nullptr);

/// Inference over the selected rows (densified in chunks).
Eigen::MatrixXd predict(const Network& net, const data::SparseFeatureMatrix& features,
                        const data::NormalizationScheme* normalization,
                        std::span<const std::size_t> rows);

}  // namespace toxnet::net
