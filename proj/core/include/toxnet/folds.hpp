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

#include <optional>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/fingerprint.hpp"

namespace toxnet::folds {

inline constexpr double kDefaultClusterThreshold = 0.7;
inline constexpr int kDefaultFoldCount = 5;
inline constexpr int kDefaultMinTasks = 8;

/// Cross-validation assignment. Compounds without a fold index are
/// training-only: they join the training side of every fold.
struct FoldAssignment {
  int k = 0;
  std::vector<std::optional<int>> eval_fold;  // per compound
  std::vector<int> cluster_id;                // per compound

  std::vector<std::size_t> train_rows(int fold) const;
  std::vector<std::size_t> eval_rows(int fold) const;
};

// Single-linkage components of the similarity graph with an edge wherever
// binary Tanimoto >= threshold. Cluster ids are 0-based and ordered by the
// smallest member index. Pairwise similarities may be computed in parallel;
// the result is identical to sequential evaluation.
std::vector<int> cluster_compounds(const std::vector<fp::SparseCountVector>& fingerprints,
                                   double threshold, int threads = 1);

// Greedy balanced assignment of whole clusters to folds. Compounds labeled
// on at least min_tasks tasks are eval-eligible; clusters (restricted to
// eligible members) are sorted by descending eligible size, ties by cluster
// id, and each goes to the currently smallest fold (ties to the lowest fold
// index). Ineligible compounds never receive an eval fold.
FoldAssignment make_folds(const std::vector<int>& cluster_ids, const data::LabelMatrix& labels,
                          int k, int min_tasks);

}  // namespace toxnet::folds
