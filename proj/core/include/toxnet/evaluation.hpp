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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/folds.hpp"
#include "toxnet/network.hpp"

namespace toxnet::eval {

// Rank-based AUC with midrank tie handling:
//   AUC = (R_pos - n_pos (n_pos + 1) / 2) / (n_pos n_neg)
// where R_pos is the sum of midranks of the positives. Equivalent to the
// fraction of (positive, negative) pairs ranked correctly, ties counting
// one half. Throws SingleClassError when either class is absent.
double auc(std::span<const double> scores, std::span<const std::int8_t> labels);

/// nullopt instead of throwing on a single-class input.
std::optional<double> try_auc(std::span<const double> scores,
                              std::span<const std::int8_t> labels);

/// Mean AUC over tasks with both classes present among `rows`; nullopt when
/// no task qualifies. Used as the early-stopping metric.
std::optional<double> mean_task_auc(const Eigen::MatrixXd& scores,
                                    const data::LabelMatrix& labels,
                                    std::span<const std::size_t> rows);

// Two-sided Mann-Whitney U test. Exact p-value by full enumeration of all
// C(n_a + n_b, n_a) group labelings when n_a + n_b <= 12 (ties handled
// through midranks); otherwise the normal approximation with tie and
// continuity corrections.
double mann_whitney_two_sided(std::span<const double> sample_a,
                              std::span<const double> sample_b);

inline constexpr std::size_t kExactMannWhitneyLimit = 12;

struct TaskScore {
  std::string task;
  std::optional<double> auc;  // nullopt when a class is missing
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Per-task AUC of score column t against label column t over `rows`.
std::vector<TaskScore> score_tasks(const Eigen::MatrixXd& scores,
                                   const data::LabelMatrix& labels,
                                   std::span<const std::size_t> rows);

struct ComparisonRow {
  std::string task;
  std::vector<double> st_aucs;  // one per restart; empty when undefined
  std::vector<double> mt_aucs;
  std::optional<double> st_mean;
  std::optional<double> mt_mean;
  std::optional<double> p_value;
  bool significant = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  int restarts = 0;
};

struct CompareSpec {
  net::NetSpec st_arch;
  net::NetSpec mt_arch;
  net::TrainConfig config;           // seed acts as the base seed
  data::PreprocessSpec preprocess;   // fitted per fold on training rows
  int restarts = 5;
  std::vector<std::size_t> tasks;    // empty = all tasks
  int threads = 1;
  double alpha = 0.05;
};

// Single-task vs multi-task comparison. Per restart, one model per fold is
// trained (MT on all tasks; ST per task on that task's labels alone, with
// restart-indexed seeds) and out-of-fold predictions are pooled into one AUC
// per task. The two restart samples are compared with the two-sided
// Mann-Whitney test; tasks with an undefined AUC in any restart are excluded
// from significance testing.
ComparisonReport compare_st_mt(const data::Dataset& dataset,
                               const folds::FoldAssignment& fold_assignment,
                               const CompareSpec& spec);

struct DatasetStats {
  std::vector<std::size_t> labels_per_compound;  // histogram bins 0..T
  Eigen::MatrixXd abs_correlation;               // T x T; NaN where undefined
};

/// Label-count histogram and pairwise absolute Pearson correlation of label
/// columns over compounds where both labels are present. Pairs with fewer
/// than two common compounds or zero variance are NaN.
DatasetStats dataset_stats(const data::LabelMatrix& labels);

}  // namespace toxnet::eval
