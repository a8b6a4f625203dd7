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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/folds.hpp"
#include "toxnet/network.hpp"

namespace toxnet::hyper {

// Feature-family subsets are encoded as bitmasks:
//   bit 0 = molecular descriptors, bit 1 = reference similarities,
//   bit 2 = ECFP fingerprints.
inline constexpr std::uint8_t kFamilyDescriptors = 1;
inline constexpr std::uint8_t kFamilyRefSim = 2;
inline constexpr std::uint8_t kFamilyEcfp = 4;

std::string family_label(std::uint8_t families);
std::uint8_t parse_family_label(const std::string& label);

/// One grid point.
struct HyperConfig {
  data::NormKind normalization = data::NormKind::Tanh;
  std::uint8_t families = kFamilyEcfp;
  int sparseness_threshold = 5;
  int hidden_units = 1024;
  int layers = 1;
  double learning_rate = 0.01;
  bool dropout = false;
  double l2 = 0.0;
};

/// Candidate values per field. Enumeration is lexicographic in the field
/// order below, with the last field varying fastest; feature families are
/// enumerated over the listed subsets (all 7 nonempty ones in the full
/// space, in ascending bitmask order).
struct SearchSpace {
  std::vector<data::NormKind> normalization;
  std::vector<std::uint8_t> families;
  std::vector<int> sparseness_threshold;
  std::vector<int> hidden_units;
  std::vector<int> layers;
  std::vector<double> learning_rate;
  std::vector<bool> dropout;
  std::vector<double> l2;

  std::size_t cardinality() const;

  /// The published full grid (18,144 configurations).
  static SearchSpace full();

  /// Same structure shrunk to desk scale: hidden units {32, 64}.
  static SearchSpace desk_scale();
};

std::vector<HyperConfig> enumerate_grid(const SearchSpace& space);

/// Key-value search-space file; missing keys fall back to the full grid.
SearchSpace parse_search_space(std::istream& in);
SearchSpace load_search_space(const std::string& path);

/// m distinct config indices (ascending) drawn by seed, for sampled search.
std::vector<std::size_t> sample_config_indices(std::size_t total, std::size_t m,
                                               std::uint64_t seed);

struct TrainLimits {
  int batch_size = 512;
  int max_epochs = 200;
  int patience = 10;
};

struct ConfigEvaluation {
  std::size_t config_index = 0;
  HyperConfig config;
  /// [fold][task]; nullopt when the fold had a single-class task or failed.
  std::vector<std::vector<std::optional<double>>> fold_task_auc;
  std::vector<std::string> fold_errors;  // empty string = fold trained fine
};

// Clustered-CV evaluation of one configuration: per fold, the sparsity
// filter, imputation medians and normalization statistics are fitted on the
// training rows only, one multi-task net is trained, and the held-out fold
// is scored per task. Training failures are recorded per fold, not fatal.
ConfigEvaluation evaluate_config(const HyperConfig& config, std::size_t config_index,
                                 const data::Dataset& dataset,
                                 const folds::FoldAssignment& folds, const TrainLimits& limits,
                                 std::uint64_t seed);

struct TaskSelection {
  std::optional<std::size_t> config_index;  // nullopt: no defined score anywhere
  double mean_auc = 0.0;
};

struct SearchResult {
  std::vector<TaskSelection> per_task;
  std::vector<ConfigEvaluation> evaluations;  // ascending config_index
};

/// Per task, the configuration maximizing the mean over defined fold AUCs;
/// exact ties go to the earlier enumeration index, independent of the order
/// in which evaluations arrive.
SearchResult select_per_task(std::vector<ConfigEvaluation> evaluations, std::size_t n_tasks);

/// Full or sampled grid search; configs evaluated concurrently, result
/// independent of scheduling.
SearchResult run_search(const data::Dataset& dataset, const folds::FoldAssignment& folds,
                        const SearchSpace& space, const TrainLimits& limits, std::uint64_t seed,
                        int threads, std::optional<std::size_t> sample = std::nullopt);

}  // namespace toxnet::hyper
