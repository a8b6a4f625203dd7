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

#include <string>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/evaluation.hpp"
#include "toxnet/folds.hpp"
#include "toxnet/hypersearch.hpp"
#include "toxnet/interpret.hpp"
#include "toxnet/network.hpp"

namespace toxnet::io {

/// Shortest round-tripping decimal form; used for all text artifacts so
/// repeated runs are byte-identical.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// compound files

struct RawCompound {
  std::string id;
  std::string smiles;
  std::vector<std::int8_t> labels;
  std::size_t line_no = 0;
};

struct CompoundFile {
  std::vector<std::string> task_names;
  std::vector<RawCompound> compounds;
};

enum class CompoundFormat {
  Tsv,       // id<TAB>smiles<TAB>l_1...l_T with a header naming the tasks
  Tox21Csv,  // comma-separated public layout: smiles + id column + task columns
};

CompoundFile read_compound_file(const std::string& path, CompoundFormat format);

/// Parses every SMILES; parse failures cite the offending line number.
std::vector<data::CompoundRecord> parse_compounds(const CompoundFile& file);

/// Optional external descriptor table: compound_id<TAB>v_1...<TAB>v_D with a
/// header naming the descriptors; empty cells are missing. Rows are matched
/// to `ids` by compound id (every id must appear exactly once).
data::ExternalDescriptors read_descriptor_file(const std::string& path,
                                               const std::vector<std::string>& ids);

// ---------------------------------------------------------------------------
// binary feature matrix + text catalog

void write_matrix(const std::string& path, const data::SparseFeatureMatrix& matrix);
data::SparseFeatureMatrix read_matrix(const std::string& path,
                                      std::vector<data::ColumnInfo> catalog);

void write_catalog(const std::string& path, const std::vector<data::ColumnInfo>& catalog);
std::vector<data::ColumnInfo> read_catalog(const std::string& path);

// ---------------------------------------------------------------------------
// folds

void write_folds(const std::string& path, const folds::FoldAssignment& assignment,
                 const std::vector<std::string>& compound_ids);
folds::FoldAssignment read_folds(const std::string& path,
                                 const std::vector<std::string>& compound_ids);

// ---------------------------------------------------------------------------
// model bundle

/// Feature pipeline state frozen at training time, so that prediction
/// rebuilds exactly the columns the network was trained on.
struct FeaturePipeline {
  bool use_ecfp = true;
  bool use_reference_similarity = true;
  bool use_descriptors = true;
  int ecfp_radius = fp::kEcfp4Radius;
  std::vector<std::uint64_t> ecfp_ids;  // kept ecfp feature ids, ascending
  std::vector<std::pair<std::string, std::uint64_t>> reference_sets;  // name, size
  std::uint64_t descriptor_count = 0;
  std::vector<double> descriptor_medians;  // per descriptor column
  data::NormalizationScheme scheme;        // over the pipeline's output columns

  std::size_t width() const {
    return ecfp_ids.size() + reference_pattern_count() + descriptor_count;
  }
  std::size_t reference_pattern_count() const;
};

struct ModelBundle {
  net::Network network;
  std::vector<std::string> task_names;
  FeaturePipeline pipeline;
};

/// Pipeline from an assembled matrix and the preprocessing fitted on it.
FeaturePipeline make_pipeline(const data::SparseFeatureMatrix& assembled,
                              const data::FittedPreprocess& fitted,
                              const data::FeatureConfig& config,
                              const std::vector<fp::ReferenceSet>& reference_sets);

/// Featurization through a frozen pipeline (prediction path). Reference sets
/// must match the pipeline's recorded names and sizes.
data::SparseFeatureMatrix featurize_with_pipeline(
    const std::vector<data::CompoundRecord>& records,
    const std::vector<fp::ReferenceSet>& reference_sets, const FeaturePipeline& pipeline,
    const data::ExternalDescriptors* external = nullptr);

void write_model(const std::string& path, const ModelBundle& model);
ModelBundle read_model(const std::string& path);

// ---------------------------------------------------------------------------
// predictions and reports

void write_predictions(const std::string& path, const std::vector<std::string>& compound_ids,
                       const std::vector<std::string>& task_names,
                       const Eigen::MatrixXd& probabilities);

struct Predictions {
  std::vector<std::string> compound_ids;
  std::vector<std::string> task_names;
  Eigen::MatrixXd probabilities;
};

Predictions read_predictions(const std::string& path);

void write_task_scores(const std::string& path, const std::vector<eval::TaskScore>& scores);
void write_comparison(const std::string& path, const eval::ComparisonReport& report);
void write_dataset_stats(const std::string& path, const eval::DatasetStats& stats,
                         const std::vector<std::string>& task_names);
void write_search_table(const std::string& path,
                        const std::vector<hyper::ConfigEvaluation>& evaluations,
                        const std::vector<std::string>& task_names);
void write_best_configs(const std::string& path, const hyper::SearchResult& result,
                        const std::vector<std::string>& task_names);
void write_unit_correlations(const std::string& path,
                             const std::vector<interpret::UnitCorrelation>& correlations);
void write_layer_trend(const std::string& path,
                       const std::vector<interpret::LayerTrendRow>& rows);

}  // namespace toxnet::io
