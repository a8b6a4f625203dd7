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
#include <span>
#include <string>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/fingerprint.hpp"
#include "toxnet/network.hpp"

namespace toxnet::interpret {

inline constexpr double kDefaultPresenceThreshold = 0.9;

/// Inference-mode activations of hidden layer `layer` (1-based) for the
/// given rows: an n x h_layer matrix.
Eigen::MatrixXd hidden_activations(const net::Network& network,
                                   const data::SparseFeatureMatrix& features,
                                   const data::NormalizationScheme* normalization,
                                   std::span<const std::size_t> rows, int layer);

/// presence(i, j) = 1 iff tanimoto(fingerprint_i, pattern_j) >= threshold.
Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> pattern_presence(
    const std::vector<fp::SparseCountVector>& fingerprints, const fp::ReferenceSet& refs,
    double threshold);

struct UnitCorrelation {
  int layer = 0;
  int unit = 0;
  std::string pattern_id;
  std::size_t pattern_size = 0;  // support cardinality of the pattern fingerprint
  double correlation = 0.0;      // point-biserial (Pearson vs. binary presence)
  double p_raw = 1.0;            // two-sided t-test on the correlation
  double p_adjusted = 1.0;       // Benjamini-Hochberg across all pairs
  std::vector<std::string> top_compounds;  // ids of the 3 highest activations
};

// Point-biserial correlation of every (hidden unit, pattern) pair. Units
// with zero activation variance and patterns present in none or all
// compounds are skipped. Results are ranked by descending |correlation|,
// ties by (unit, pattern index). Each retained pair carries its top-3
// activating compound ids.
std::vector<UnitCorrelation> correlate_units(
    const Eigen::MatrixXd& activations,
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& presence,
    const fp::ReferenceSet& refs, std::span<const std::string> compound_ids, int layer,
    double bh_alpha = 0.05);

struct LayerTrendRow {
  int layer = 0;
  std::size_t pairs_used = 0;
  double mean_pattern_size = 0.0;  // |correlation|-weighted mean support size
};

/// Mean matched-pattern size among the top-q pairs of each layer; needs
/// at least two layers to be meaningful.
std::vector<LayerTrendRow> layer_trend(
    const std::vector<std::vector<UnitCorrelation>>& per_layer, std::size_t top_q);

}  // namespace toxnet::interpret
