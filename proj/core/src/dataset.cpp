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

#include "toxnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace toxnet::data {

LabelMatrix::LabelMatrix(std::size_t n_rows, std::vector<std::string> task_names)
    : n_rows_(n_rows),
      task_names_(std::move(task_names)),
      values_(n_rows * task_names_.size(), kMissingLabel) {}

std::size_t LabelMatrix::labeled_count(std::size_t i) const {
  std::size_t count = 0;
  for (std::size_t t = 0; t < tasks(); ++t) {
    if (present(i, t)) ++count;
  }
  return count;
}

LabelMatrix LabelMatrix::task_column(std::size_t t) const {
  LabelMatrix out(n_rows_, {task_names_.at(t)});
  for (std::size_t i = 0; i < n_rows_; ++i) out.set(i, 0, at(i, t));
  return out;
}

const char* to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::Ecfp: return "ecfp";
    case FeatureSource::ReferenceSimilarity: return "refsim";
    case FeatureSource::Descriptor: return "descriptor";
  }
  return "unknown";
}

SparseFeatureMatrix::SparseFeatureMatrix(std::size_t n_cols, std::vector<ColumnInfo> catalog)
    : n_cols_(n_cols), catalog_(std::move(catalog)) {
  if (catalog_.size() != n_cols_) throw Error("SparseFeatureMatrix: catalog size mismatch");
}

void SparseFeatureMatrix::add_row(const std::vector<std::pair<std::uint32_t, float>>& entries) {
  std::uint32_t last = 0;
  bool first = true;
  for (const auto& [col, val] : entries) {
    if (col >= n_cols_) throw Error("SparseFeatureMatrix: column out of range");
    if (!first && col <= last) throw Error("SparseFeatureMatrix: columns not ascending");
    last = col;
    first = false;
    cols_idx_.push_back(col);
    vals_.push_back(val);
  }
  offsets_.push_back(cols_idx_.size());
}

std::span<const std::uint32_t> SparseFeatureMatrix::row_columns(std::size_t i) const {
  return {cols_idx_.data() + offsets_[i], cols_idx_.data() + offsets_[i + 1]};
}

std::span<const float> SparseFeatureMatrix::row_values(std::size_t i) const {
  return {vals_.data() + offsets_[i], vals_.data() + offsets_[i + 1]};
}

DenseMatrix SparseFeatureMatrix::dense_batch(std::span<const std::size_t> indices) const {
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(indices.size()),
                                      static_cast<Eigen::Index>(n_cols_));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= rows()) throw Error("dense_batch: row index out of bounds");
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cols[e])) = vals[e];
    }
  }
  return out;
}

DenseMatrix SparseFeatureMatrix::dense_all() const {
  std::vector<std::size_t> all(rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return dense_batch(all);
}

std::vector<std::size_t> SparseFeatureMatrix::column_nonzero_counts(
    std::span<const std::size_t> rows_subset) const {
  std::vector<std::size_t> counts(n_cols_, 0);
  for (std::size_t i : rows_subset) {
    if (i >= rows()) throw Error("column_nonzero_counts: row index out of bounds");
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      if (vals[e] != 0.0f && !std::isnan(vals[e])) ++counts[cols[e]];
    }
  }
  return counts;
}

SparseFeatureMatrix SparseFeatureMatrix::select_columns(
    const std::vector<std::uint32_t>& keep) const {
  std::vector<std::int64_t> remap(n_cols_, -1);
  std::vector<ColumnInfo> catalog;
  catalog.reserve(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::uint32_t col = keep[k];
    if (col >= n_cols_) throw Error("select_columns: column out of range");
    if (k > 0 && keep[k - 1] >= col) throw Error("select_columns: columns not ascending");
    remap[col] = static_cast<std::int64_t>(k);
    catalog.push_back(catalog_[col]);
  }
  SparseFeatureMatrix out(keep.size(), std::move(catalog));
  std::vector<std::pair<std::uint32_t, float>> row;
  for (std::size_t i = 0; i < rows(); ++i) {
    row.clear();
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      if (remap[cols[e]] >= 0) {
        row.emplace_back(static_cast<std::uint32_t>(remap[cols[e]]), vals[e]);
      }
    }
    out.add_row(row);
  }
  return out;
}

void SparseFeatureMatrix::adopt(std::vector<std::uint64_t> offsets,
                                std::vector<std::uint32_t> cols, std::vector<float> vals) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != cols.size() ||
      cols.size() != vals.size()) {
    throw Error("SparseFeatureMatrix: inconsistent CSR arrays");
  }
  offsets_ = std::move(offsets);
  cols_idx_ = std::move(cols);
  vals_ = std::move(vals);
}

void SparseFeatureMatrix::transform_values(
    const std::function<float(float, FeatureSource)>& fn) {
  for (std::size_t e = 0; e < vals_.size(); ++e) {
    vals_[e] = fn(vals_[e], catalog_[cols_idx_[e]].source);
  }
}

const std::vector<std::string>& graph_descriptor_names() {
  static const std::vector<std::string> names = {
      "atom_count",    "bond_count",  "ring_count", "mean_degree",
      "aromatic_frac", "mol_weight",  "count_B",    "count_C",
      "count_N",       "count_O",     "count_P",    "count_S",
      "count_F",       "count_Cl",    "count_Br",   "count_I",
      "count_other",
  };
  return names;
}

std::vector<double> graph_descriptors(const smiles::MolecularGraph& graph) {
  const double n_atoms = static_cast<double>(graph.atoms.size());
  const double n_bonds = static_cast<double>(graph.bonds.size());
  const double n_components = static_cast<double>(smiles::atom_components(graph).size());

  static const std::vector<std::string> tracked = {"B", "C",  "N",  "O", "P",
                                                   "S", "F", "Cl", "Br", "I"};
  std::vector<double> element_counts(tracked.size() + 1, 0.0);
  double weight = 0.0;
  double degree_sum = 0.0;
  double aromatic = 0.0;
  for (const auto& atom : graph.atoms) {
    degree_sum += atom.degree;
    if (atom.aromatic) aromatic += 1.0;
    const auto info = smiles::element_info(atom.element);
    weight += (info ? info->atomic_mass : 0.0) + 1.008 * atom.total_h();
    auto it = std::find(tracked.begin(), tracked.end(), atom.element);
    if (it != tracked.end()) {
      element_counts[static_cast<std::size_t>(it - tracked.begin())] += 1.0;
    } else {
      element_counts.back() += 1.0;
    }
  }

  std::vector<double> out;
  out.reserve(graph_descriptor_names().size());
  out.push_back(n_atoms);
  out.push_back(n_bonds);
  out.push_back(n_bonds - n_atoms + n_components);  // cyclomatic ring count
  out.push_back(n_atoms > 0 ? degree_sum / n_atoms : 0.0);
  out.push_back(n_atoms > 0 ? aromatic / n_atoms : 0.0);
  out.push_back(weight);
  out.insert(out.end(), element_counts.begin(), element_counts.end());
  return out;
}

Dataset assemble(const std::vector<CompoundRecord>& records,
                 const std::vector<std::string>& task_names,
                 const std::vector<fp::ReferenceSet>& reference_sets,
                 const FeatureConfig& config, const ExternalDescriptors* external) {
  if (!config.use_ecfp && !config.use_reference_similarity && !config.use_descriptors) {
    throw Error("assemble: no feature family enabled");
  }
  const std::size_t n = records.size();
  const std::size_t n_tasks = task_names.size();
  for (const auto& record : records) {
    if (record.labels.size() != n_tasks) {
      throw Error("assemble: label row width mismatch for compound '" + record.id + "'");
    }
  }
  if (external && external->rows.size() != n) {
    throw Error("assemble: external descriptor row count mismatch");
  }

  const bool need_fp = config.use_ecfp || config.use_reference_similarity;
  std::vector<fp::SparseCountVector> fps;
  if (need_fp) {
    fps.reserve(n);
    for (const auto& record : records) fps.push_back(fp::ecfp(record.graph, config.ecfp_radius));
  }

  // ecfp block: union of ids, optionally sparsity-filtered
  std::vector<std::uint64_t> ecfp_ids;
  if (config.use_ecfp) {
    std::map<std::uint64_t, std::size_t> compound_counts;
    for (const auto& v : fps) {
      for (const auto& [id, count] : v.entries()) ++compound_counts[id];
    }
    if (config.sparseness_threshold) {
      std::vector<std::size_t> counts;
      counts.reserve(compound_counts.size());
      for (const auto& [id, c] : compound_counts) counts.push_back(c);
      const auto keep = fp::sparsity_filter(counts, *config.sparseness_threshold);
      std::size_t j = 0;
      for (const auto& [id, c] : compound_counts) {
        if (keep[j++]) ecfp_ids.push_back(id);
      }
    } else {
      for (const auto& [id, c] : compound_counts) ecfp_ids.push_back(id);
    }
  }

  std::vector<ColumnInfo> catalog;
  for (std::uint64_t id : ecfp_ids) {
    catalog.push_back({FeatureSource::Ecfp, id, "ecfp:" + std::to_string(id)});
  }
  if (config.use_reference_similarity) {
    std::uint64_t ordinal = 0;
    for (const auto& set : reference_sets) {
      for (const auto& [pattern_id, pattern] : set.patterns) {
        catalog.push_back({FeatureSource::ReferenceSimilarity, ordinal++,
                           "refsim:" + set.name + ":" + pattern_id});
      }
    }
    if (ordinal == 0) throw Error("assemble: reference-similarity family enabled with no patterns");
  }
  std::size_t descriptor_count = 0;
  if (config.use_descriptors) {
    for (const auto& name : graph_descriptor_names()) {
      catalog.push_back({FeatureSource::Descriptor, descriptor_count++, "descriptor:" + name});
    }
    if (external) {
      for (const auto& name : external->names) {
        catalog.push_back({FeatureSource::Descriptor, descriptor_count++, "descriptor:" + name});
      }
    }
  }

  const std::size_t width = catalog.size();
  SparseFeatureMatrix matrix(width, std::move(catalog));

  std::unordered_map<std::uint64_t, std::uint32_t> ecfp_col;
  for (std::size_t j = 0; j < ecfp_ids.size(); ++j) {
    ecfp_col.emplace(ecfp_ids[j], static_cast<std::uint32_t>(j));
  }
  const std::uint32_t refsim_base = static_cast<std::uint32_t>(ecfp_ids.size());

  std::vector<std::pair<std::uint32_t, float>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    std::uint32_t col = 0;
    if (config.use_ecfp) {
      for (const auto& [id, count] : fps[i].entries()) {
        auto it = ecfp_col.find(id);
        if (it != ecfp_col.end()) row.emplace_back(it->second, static_cast<float>(count));
      }
    }
    col = refsim_base;
    if (config.use_reference_similarity) {
      for (const auto& set : reference_sets) {
        for (const auto& [pattern_id, pattern] : set.patterns) {
          const double sim = fp::tanimoto(fps[i], pattern);
          if (sim != 0.0) row.emplace_back(col, static_cast<float>(sim));
          ++col;
        }
      }
    }
    if (config.use_descriptors) {
      // descriptor cells are always materialized, zeros and NaN included
      for (double v : graph_descriptors(records[i].graph)) {
        row.emplace_back(col++, static_cast<float>(v));
      }
      if (external) {
        for (double v : external->rows[i]) row.emplace_back(col++, static_cast<float>(v));
      }
    }
    matrix.add_row(row);
  }

  Dataset out;
  out.features = std::move(matrix);
  out.labels = LabelMatrix(n, task_names);
  out.compound_ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.compound_ids.push_back(records[i].id);
    for (std::size_t t = 0; t < n_tasks; ++t) out.labels.set(i, t, records[i].labels[t]);
  }
  return out;
}

std::pair<std::vector<CompoundRecord>, MergeReport> merge_duplicates(
    const std::vector<CompoundRecord>& records, const FingerprintFn& fingerprint) {
  MergeReport report;
  report.rows_before = records.size();

  // group key: fingerprint entries of the largest connected component
  std::map<std::vector<fp::SparseCountVector::Entry>, std::vector<std::size_t>> groups;
  std::vector<const std::vector<std::size_t>*> ordered;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto components = smiles::atom_components(records[i].graph);
    const auto largest = smiles::induced_subgraph(records[i].graph, components.front());
    auto key = fingerprint(largest).entries();
    auto [it, inserted] = groups.emplace(std::move(key), std::vector<std::size_t>{});
    it->second.push_back(i);
    if (inserted) ordered.push_back(&it->second);
  }

  // output order follows the first occurrence of each group
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->front() < b->front(); });

  std::vector<CompoundRecord> merged;
  merged.reserve(ordered.size());
  for (const auto* group : ordered) {
    const CompoundRecord& first = records[group->front()];
    CompoundRecord out;
    out.id = first.id;
    out.graph = first.graph;
    out.labels.assign(first.labels.size(), kMissingLabel);
    for (std::size_t t = 0; t < out.labels.size(); ++t) {
      std::int8_t value = kMissingLabel;
      bool conflict = false;
      for (std::size_t i : *group) {
        const std::int8_t v = records[i].labels[t];
        if (v == kMissingLabel) continue;
        if (value == kMissingLabel) {
          value = v;
        } else if (value != v) {
          conflict = true;
        }
      }
      if (conflict) {
        out.labels[t] = kMissingLabel;
        ++report.contradictions;
      } else {
        out.labels[t] = value;
      }
    }
    if (group->size() > 1) report.merged_groups.emplace_back(first.id, group->size());
    merged.push_back(std::move(out));
  }
  report.rows_after = merged.size();
  return {std::move(merged), report};
}

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::StandardDeviation: return "standard-deviation";
    case NormKind::Tanh: return "tanh";
    case NormKind::Sqrt: return "sqrt";
  }
  return "unknown";
}

NormKind norm_kind_from_string(const std::string& name) {
  if (name == "standard-deviation" || name == "sd") return NormKind::StandardDeviation;
  if (name == "tanh") return NormKind::Tanh;
  if (name == "sqrt") return NormKind::Sqrt;
  throw Error("unknown normalization kind: " + name);
}

NormalizationScheme fit_normalizer(const SparseFeatureMatrix& matrix, NormKind kind,
                                   std::span<const std::size_t> rows) {
  NormalizationScheme scheme;
  scheme.kind = kind;
  if (kind != NormKind::StandardDeviation) return scheme;

  const std::size_t d = matrix.cols();
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  std::vector<std::size_t> nan_count(d, 0);
  for (std::size_t i : rows) {
    const auto cols = matrix.row_columns(i);
    const auto vals = matrix.row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      if (std::isnan(vals[e])) {
        ++nan_count[cols[e]];
        continue;
      }
      sum[cols[e]] += vals[e];
      sum_sq[cols[e]] += static_cast<double>(vals[e]) * vals[e];
    }
  }
  scheme.mean.resize(d);
  scheme.stddev.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double count = static_cast<double>(rows.size() - nan_count[j]);
    if (count <= 0) {
      scheme.mean[j] = 0.0;
      scheme.stddev[j] = kStddevClamp;
      continue;
    }
    const double mean = sum[j] / count;
    const double var = std::max(0.0, sum_sq[j] / count - mean * mean);
    scheme.mean[j] = mean;
    scheme.stddev[j] = std::max(std::sqrt(var), kStddevClamp);
  }
  return scheme;
}

namespace {

float scale_value(float v, NormKind kind) {
  switch (kind) {
    case NormKind::Tanh: return std::tanh(v);
    case NormKind::Sqrt:
      if (v < 0.0f) throw Error("apply_normalizer: negative input to sqrt scaling");
      return std::sqrt(v);
    case NormKind::StandardDeviation: break;
  }
  return v;
}

}  // namespace

void apply_normalizer(DenseMatrix& block, const NormalizationScheme& scheme) {
  if (scheme.kind == NormKind::StandardDeviation) {
    if (static_cast<std::size_t>(block.cols()) != scheme.mean.size()) {
      throw Error("apply_normalizer: scheme width mismatch");
    }
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      block.col(j) = (block.col(j).array() - scheme.mean[j]) / scheme.stddev[j];
    }
    return;
  }
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      block(i, j) = scale_value(static_cast<float>(block(i, j)), scheme.kind);
    }
  }
}

SparseFeatureMatrix apply_normalizer(const SparseFeatureMatrix& matrix,
                                     const NormalizationScheme& scheme) {
  if (scheme.kind != NormKind::StandardDeviation) {
    SparseFeatureMatrix out = matrix;
    out.transform_values([&scheme](float v, FeatureSource) {
      return std::isnan(v) ? v : scale_value(v, scheme.kind);
    });
    return out;
  }
  if (scheme.mean.size() != matrix.cols()) throw Error("apply_normalizer: scheme width mismatch");
  SparseFeatureMatrix out(matrix.cols(), matrix.catalog());
  std::vector<std::pair<std::uint32_t, float>> row(matrix.cols());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      row[j] = {static_cast<std::uint32_t>(j), static_cast<float>((0.0 - scheme.mean[j]) / scheme.stddev[j])};
    }
    const auto cols = matrix.row_columns(i);
    const auto vals = matrix.row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const float v = vals[e];
      row[cols[e]].second = std::isnan(v)
                                ? v
                                : static_cast<float>((v - scheme.mean[cols[e]]) / scheme.stddev[cols[e]]);
    }
    out.add_row(row);
  }
  return out;
}

std::vector<double> fit_descriptor_medians(const SparseFeatureMatrix& matrix,
                                           std::span<const std::size_t> rows) {
  const std::size_t d = matrix.cols();
  std::vector<std::vector<float>> values(d);
  for (std::size_t i : rows) {
    const auto cols = matrix.row_columns(i);
    const auto vals = matrix.row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      if (matrix.catalog()[cols[e]].source != FeatureSource::Descriptor) continue;
      if (!std::isnan(vals[e])) values[cols[e]].push_back(vals[e]);
    }
  }
  std::vector<double> medians(d, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < d; ++j) {
    if (matrix.catalog()[j].source != FeatureSource::Descriptor) continue;
    auto& v = values[j];
    if (v.empty()) {
      medians[j] = 0.0;  // all-missing column
      continue;
    }
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double median = v[mid];
    if (v.size() % 2 == 0) {
      const auto lower = std::max_element(v.begin(), v.begin() + mid);
      median = (median + *lower) / 2.0;
    }
    medians[j] = median;
  }
  return medians;
}

SparseFeatureMatrix apply_imputation(const SparseFeatureMatrix& matrix,
                                     const std::vector<double>& medians) {
  if (medians.size() != matrix.cols()) throw Error("apply_imputation: medians width mismatch");
  SparseFeatureMatrix rebuilt(matrix.cols(), matrix.catalog());
  std::vector<std::pair<std::uint32_t, float>> row;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    row.clear();
    const auto cols = matrix.row_columns(i);
    const auto vals = matrix.row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      float v = vals[e];
      if (std::isnan(v) && matrix.catalog()[cols[e]].source == FeatureSource::Descriptor) {
        v = static_cast<float>(medians[cols[e]]);
      }
      row.emplace_back(cols[e], v);
    }
    rebuilt.add_row(row);
  }
  return rebuilt;
}

SparseFeatureMatrix median_impute(const SparseFeatureMatrix& matrix) {
  std::vector<std::size_t> all(matrix.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return apply_imputation(matrix, fit_descriptor_medians(matrix, all));
}

FittedPreprocess fit_preprocess(const SparseFeatureMatrix& matrix,
                                std::span<const std::size_t> train_rows,
                                const PreprocessSpec& spec) {
  if (!spec.use_ecfp && !spec.use_reference_similarity && !spec.use_descriptors) {
    throw Error("fit_preprocess: no feature family enabled");
  }
  FittedPreprocess fitted;
  fitted.medians = fit_descriptor_medians(matrix, train_rows);

  std::vector<std::size_t> nonzero;
  if (spec.sparseness_threshold) nonzero = matrix.column_nonzero_counts(train_rows);

  for (std::uint32_t j = 0; j < matrix.cols(); ++j) {
    const FeatureSource source = matrix.catalog()[j].source;
    bool keep = false;
    switch (source) {
      case FeatureSource::Ecfp:
        keep = spec.use_ecfp &&
               (!spec.sparseness_threshold ||
                nonzero[j] >= static_cast<std::size_t>(*spec.sparseness_threshold));
        break;
      case FeatureSource::ReferenceSimilarity:
        keep = spec.use_reference_similarity;
        break;
      case FeatureSource::Descriptor:
        keep = spec.use_descriptors;
        break;
    }
    if (keep) fitted.kept_columns.push_back(j);
  }
  if (fitted.kept_columns.empty()) {
    throw Error("fit_preprocess: no columns survive family selection and sparsity filter");
  }

  SparseFeatureMatrix selected = matrix.select_columns(fitted.kept_columns);
  std::vector<double> selected_medians(fitted.kept_columns.size());
  for (std::size_t k = 0; k < fitted.kept_columns.size(); ++k) {
    selected_medians[k] = fitted.medians[fitted.kept_columns[k]];
  }
  selected = apply_imputation(selected, selected_medians);
  fitted.scheme = fit_normalizer(selected, spec.normalization, train_rows);
  return fitted;
}

SparseFeatureMatrix apply_preprocess(const SparseFeatureMatrix& matrix,
                                     const FittedPreprocess& fitted) {
  SparseFeatureMatrix selected = matrix.select_columns(fitted.kept_columns);
  std::vector<double> selected_medians(fitted.kept_columns.size());
  for (std::size_t k = 0; k < fitted.kept_columns.size(); ++k) {
    selected_medians[k] = fitted.medians[fitted.kept_columns[k]];
  }
  return apply_imputation(selected, selected_medians);
}

}  // namespace toxnet::data
