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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxnet/fingerprint.hpp"
#include "toxnet/smiles.hpp"

namespace toxnet::data {

using DenseMatrix = Eigen::MatrixXd;

inline constexpr std::int8_t kMissingLabel = -1;

/// Per-compound per-task labels over {active=1, inactive=0, missing}.
/// The mask m(i,t) is simply present(i,t).
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t n_rows, std::vector<std::string> task_names);

  std::size_t rows() const { return n_rows_; }
  std::size_t tasks() const { return task_names_.size(); }
  const std::vector<std::string>& task_names() const { return task_names_; }

  std::int8_t at(std::size_t i, std::size_t t) const { return values_[i * tasks() + t]; }
  void set(std::size_t i, std::size_t t, std::int8_t v) { values_[i * tasks() + t] = v; }
  bool present(std::size_t i, std::size_t t) const { return at(i, t) != kMissingLabel; }

  /// Number of present labels in row i.
  std::size_t labeled_count(std::size_t i) const;

  /// Single-task view: a T=1 matrix holding only column t.
  LabelMatrix task_column(std::size_t t) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::string> task_names_;
  std::vector<std::int8_t> values_;
};

enum class FeatureSource : std::uint8_t {
  Ecfp = 0,
  ReferenceSimilarity = 1,
  Descriptor = 2,
};

const char* to_string(FeatureSource source);

struct ColumnInfo {
  FeatureSource source;
  std::uint64_t feature_id;  // ecfp hash id, or ordinal within its block
  std::string label;         // human-readable catalog entry
};

// Compressed-sparse-row feature matrix. Fingerprint and similarity cells are
// stored only when nonzero; descriptor cells are stored for every row
// (including zeros, and NaN for missing values) so that column medians are
// well defined.
class SparseFeatureMatrix {
 public:
  SparseFeatureMatrix() = default;
  SparseFeatureMatrix(std::size_t n_cols, std::vector<ColumnInfo> catalog);

  /// Appends a row; entries must be sorted by strictly ascending column.
  void add_row(const std::vector<std::pair<std::uint32_t, float>>& entries);

  std::size_t rows() const { return offsets_.size() - 1; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nonzeros() const { return cols_idx_.size(); }
  const std::vector<ColumnInfo>& catalog() const { return catalog_; }

  std::span<const std::uint32_t> row_columns(std::size_t i) const;
  std::span<const float> row_values(std::size_t i) const;

  /// Dense |indices| x cols block in the requested row order.
  DenseMatrix dense_batch(std::span<const std::size_t> indices) const;
  DenseMatrix dense_all() const;

  /// Number of rows (within `rows`) holding a stored nonzero per column.
  std::vector<std::size_t> column_nonzero_counts(std::span<const std::size_t> rows) const;

  /// New matrix restricted to the given source-column indices (ascending).
  SparseFeatureMatrix select_columns(const std::vector<std::uint32_t>& keep) const;

  // Raw CSR access for serialization.
  const std::vector<std::uint64_t>& raw_offsets() const { return offsets_; }
  const std::vector<std::uint32_t>& raw_columns() const { return cols_idx_; }
  const std::vector<float>& raw_values() const { return vals_; }
  void adopt(std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> cols,
             std::vector<float> vals);

  /// In-place value transform over stored cells of matching source columns.
  void transform_values(const std::function<float(float, FeatureSource)>& fn);

 private:
  std::size_t n_cols_ = 0;
  std::vector<ColumnInfo> catalog_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<std::uint32_t> cols_idx_;
  std::vector<float> vals_;
};

/// Parsed compound ready for featurization.
struct CompoundRecord {
  std::string id;
  smiles::MolecularGraph graph;
  std::vector<std::int8_t> labels;  // length T, kMissingLabel for gaps
};

struct Dataset {
  SparseFeatureMatrix features;
  LabelMatrix labels;
  std::vector<std::string> compound_ids;
};

/// Which feature families to assemble; block order is fixed:
/// ecfp, reference-similarity, descriptor.
struct FeatureConfig {
  bool use_ecfp = true;
  bool use_reference_similarity = true;
  bool use_descriptors = true;
  int ecfp_radius = fp::kEcfp4Radius;
  /// When set, drops ecfp columns present in fewer training compounds.
  std::optional<int> sparseness_threshold;
};

/// Extra real-valued descriptor columns supplied from a file; NaN marks a
/// missing cell. Appended after the built-in graph descriptors.
struct ExternalDescriptors {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;  // one per compound, length names.size()
};

Dataset assemble(const std::vector<CompoundRecord>& records,
                 const std::vector<std::string>& task_names,
                 const std::vector<fp::ReferenceSet>& reference_sets,
                 const FeatureConfig& config,
                 const ExternalDescriptors* external = nullptr);

/// Built-in graph-derived descriptors (atom/bond/ring counts, per-element
/// counts, mean degree, aromatic fraction, molecular-weight proxy).
std::vector<double> graph_descriptors(const smiles::MolecularGraph& graph);
const std::vector<std::string>& graph_descriptor_names();

using FingerprintFn = std::function<fp::SparseCountVector(const smiles::MolecularGraph&)>;

struct MergeReport {
  std::size_t rows_before = 0;
  std::size_t rows_after = 0;
  std::size_t contradictions = 0;  // (group, task) pairs with conflicting labels
  std::vector<std::pair<std::string, std::size_t>> merged_groups;  // representative id, size
};

// Groups records whose largest connected component has an identical
// fingerprint. Per task: all present labels agree -> that label; any
// disagreement -> missing. The first record of a group supplies id and graph.
std::pair<std::vector<CompoundRecord>, MergeReport> merge_duplicates(
    const std::vector<CompoundRecord>& records, const FingerprintFn& fingerprint);

enum class NormKind : std::uint8_t {
  StandardDeviation = 0,
  Tanh = 1,
  Sqrt = 2,
};

const char* to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& name);

/// Column scaling fitted on training rows. mean/stddev are populated for
/// StandardDeviation only; stddev is clamped below at 1e-8.
struct NormalizationScheme {
  NormKind kind = NormKind::Tanh;
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline constexpr double kStddevClamp = 1e-8;

/// Fits over the given rows, implicit zeros included; NaN cells are skipped.
NormalizationScheme fit_normalizer(const SparseFeatureMatrix& matrix, NormKind kind,
                                   std::span<const std::size_t> rows);

/// Elementwise application to a dense block whose columns match the scheme.
void apply_normalizer(DenseMatrix& block, const NormalizationScheme& scheme);

// Sparse application. tanh and sqrt map stored values (zeros stay implicit);
// standard-deviation materializes every cell, which is only sensible at
// small scale; the training path instead normalizes densified batches.
SparseFeatureMatrix apply_normalizer(const SparseFeatureMatrix& matrix,
                                     const NormalizationScheme& scheme);

/// Medians of non-NaN values per descriptor column over the given rows;
/// all-missing columns get 0. Non-descriptor columns hold NaN placeholders.
std::vector<double> fit_descriptor_medians(const SparseFeatureMatrix& matrix,
                                           std::span<const std::size_t> rows);

/// Replaces NaN descriptor cells with the fitted medians.
SparseFeatureMatrix apply_imputation(const SparseFeatureMatrix& matrix,
                                     const std::vector<double>& medians);

/// fit + apply over all rows.
SparseFeatureMatrix median_impute(const SparseFeatureMatrix& matrix);

/// Per-fold preprocessing: family selection, sparsity filter, imputation
/// medians and normalization statistics, all fitted on training rows only.
struct PreprocessSpec {
  bool use_ecfp = true;
  bool use_reference_similarity = true;
  bool use_descriptors = true;
  std::optional<int> sparseness_threshold;
  NormKind normalization = NormKind::Tanh;
};

struct FittedPreprocess {
  std::vector<std::uint32_t> kept_columns;  // into the source matrix
  std::vector<double> medians;              // per source column (NaN if unused)
  NormalizationScheme scheme;               // over kept columns, post-imputation
};

FittedPreprocess fit_preprocess(const SparseFeatureMatrix& matrix,
                                std::span<const std::size_t> train_rows,
                                const PreprocessSpec& spec);

/// Column selection + imputation for all rows; normalization is applied
/// lazily on densified batches via the fitted scheme.
SparseFeatureMatrix apply_preprocess(const SparseFeatureMatrix& matrix,
                                     const FittedPreprocess& fitted);

}  // namespace toxnet::data
