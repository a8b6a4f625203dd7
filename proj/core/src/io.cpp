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

#include "toxnet/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace toxnet::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// little-endian binary primitives

void put_bytes(std::ostream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  put_bytes(out, b, 8);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

void get_bytes(std::istream& in, void* data, std::size_t size, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (in.gcount() != static_cast<std::streamsize>(size)) {
    throw Error(std::string("truncated file while reading ") + what);
  }
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  get_bytes(in, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  get_bytes(in, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

float get_f32(std::istream& in, const char* what) {
  return std::bit_cast<float>(get_u32(in, what));
}
double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_u64(in, what));
}

std::string get_str(std::istream& in, const char* what) {
  const std::uint32_t len = get_u32(in, what);
  std::string s(len, '\0');
  if (len > 0) get_bytes(in, s.data(), len, what);
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::int8_t parse_label(const std::string& token, const std::string& path, std::size_t line_no) {
  if (token.empty() || token == "NA" || token == "na" || token == "x") return data::kMissingLabel;
  if (token == "0" || token == "0.0") return 0;
  if (token == "1" || token == "1.0") return 1;
  throw Error(path + ":" + std::to_string(line_no) + ": label must be 0, 1 or empty, got '" +
              token + "'");
}

}  // namespace

CompoundFile read_compound_file(const std::string& path, CompoundFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open compound file: " + path);
  CompoundFile file;
  std::string line;
  std::size_t line_no = 0;

  const char sep = format == CompoundFormat::Tsv ? '\t' : ',';
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  ++line_no;
  const auto header = split(strip_cr(line), sep);

  std::size_t id_col = 0, smiles_col = 1;
  std::vector<std::size_t> task_cols;
  if (format == CompoundFormat::Tsv) {
    if (header.size() < 3) {
      throw Error(path + ": header needs id, smiles and at least one task column");
    }
    for (std::size_t c = 2; c < header.size(); ++c) {
      file.task_names.push_back(header[c]);
      task_cols.push_back(c);
    }
  } else {
    // public layout: a smiles column, an id column, task columns elsewhere
    auto lower = [](std::string s) {
      std::transform(s.begin(), s.end(), s.begin(), ::tolower);
      return s;
    };
    std::size_t found_smiles = header.size(), found_id = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string name = lower(header[c]);
      if (name == "smiles") found_smiles = c;
      if (name == "mol_id" || name == "id" || name == "compound_id" || name == "sample_id") {
        found_id = c;
      }
    }
    if (found_smiles == header.size()) throw Error(path + ": no 'smiles' column in header");
    smiles_col = found_smiles;
    id_col = found_id;  // may be header.size(): ids synthesized below
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != found_smiles && c != found_id) {
        file.task_names.push_back(header[c]);
        task_cols.push_back(c);
      }
    }
    if (task_cols.empty()) throw Error(path + ": no task columns");
  }

  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, sep);
    if (fields.size() != header.size()) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields, got " +
                  std::to_string(fields.size()));
    }
    RawCompound compound;
    compound.line_no = line_no;
    compound.id = id_col < fields.size() ? fields[id_col] : "row" + std::to_string(line_no - 1);
    compound.smiles = fields[smiles_col];
    for (std::size_t c : task_cols) {
      compound.labels.push_back(parse_label(fields[c], path, line_no));
    }
    file.compounds.push_back(std::move(compound));
  }
  return file;
}

std::vector<data::CompoundRecord> parse_compounds(const CompoundFile& file) {
  std::vector<data::CompoundRecord> records;
  records.reserve(file.compounds.size());
  for (const auto& compound : file.compounds) {
    data::CompoundRecord record;
    record.id = compound.id;
    record.labels = compound.labels;
    try {
      record.graph = smiles::parse_smiles(compound.smiles);
    } catch (const SmilesParseError& e) {
      throw Error("line " + std::to_string(compound.line_no) + " (compound '" + compound.id +
                  "'): " + e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

data::ExternalDescriptors read_descriptor_file(const std::string& path,
                                               const std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open descriptor file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  const auto header = split(strip_cr(line), '\t');
  if (header.size() < 2) throw Error(path + ": header needs id plus descriptor columns");

  data::ExternalDescriptors out;
  out.names.assign(header.begin() + 1, header.end());

  std::unordered_map<std::string, std::vector<double>> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != header.size()) {
      throw Error(path + ":" + std::to_string(line_no) + ": field count mismatch");
    }
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        try {
          row.push_back(std::stod(fields[c]));
        } catch (const std::exception&) {
          throw Error(path + ":" + std::to_string(line_no) + ": bad numeric value '" +
                      fields[c] + "'");
        }
      }
    }
    if (!by_id.emplace(fields[0], std::move(row)).second) {
      throw Error(path + ":" + std::to_string(line_no) + ": duplicate id '" + fields[0] + "'");
    }
  }
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(path + ": no descriptor row for compound '" + id + "'");
    out.rows.push_back(it->second);
  }
  return out;
}

// --------------------------------------------------------------------------

namespace {
constexpr char kMatrixMagic[4] = {'T', 'N', 'F', 'M'};
constexpr char kModelMagic[4] = {'T', 'N', 'M', 'D'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void write_matrix(const std::string& path, const data::SparseFeatureMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  put_bytes(out, kMatrixMagic, 4);
  put_u32(out, kFormatVersion);
  put_u64(out, matrix.rows());
  put_u64(out, matrix.cols());
  put_u64(out, matrix.nonzeros());
  for (std::uint64_t v : matrix.raw_offsets()) put_u64(out, v);
  for (std::uint32_t v : matrix.raw_columns()) put_u32(out, v);
  for (float v : matrix.raw_values()) put_f32(out, v);
  if (!out) throw Error("write failed: " + path);
}

data::SparseFeatureMatrix read_matrix(const std::string& path,
                                      std::vector<data::ColumnInfo> catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open matrix file: " + path);
  char magic[4];
  get_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kMatrixMagic, 4) != 0) throw Error(path + ": not a feature matrix file");
  const std::uint32_t version = get_u32(in, "version");
  if (version != kFormatVersion) throw Error(path + ": unsupported version");
  const std::uint64_t rows = get_u64(in, "rows");
  const std::uint64_t cols = get_u64(in, "cols");
  const std::uint64_t nnz = get_u64(in, "nnz");
  if (catalog.size() != cols) throw Error(path + ": catalog width mismatch");

  std::vector<std::uint64_t> offsets(rows + 1);
  for (auto& v : offsets) v = get_u64(in, "row offsets");
  std::vector<std::uint32_t> columns(nnz);
  for (auto& v : columns) v = get_u32(in, "column indices");
  std::vector<float> values(nnz);
  for (auto& v : values) v = get_f32(in, "values");

  data::SparseFeatureMatrix matrix(cols, std::move(catalog));
  matrix.adopt(std::move(offsets), std::move(columns), std::move(values));
  return matrix;
}

void write_catalog(const std::string& path, const std::vector<data::ColumnInfo>& catalog) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "column\tsource\tfeature_id\tlabel\n";
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    out << j << '\t' << data::to_string(catalog[j].source) << '\t' << catalog[j].feature_id
        << '\t' << catalog[j].label << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

std::vector<data::ColumnInfo> read_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog file: " + path);
  std::vector<data::ColumnInfo> catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() || line_no == 1) continue;  // header
    const auto fields = split(line, '\t');
    if (fields.size() != 4) throw Error(path + ":" + std::to_string(line_no) + ": bad catalog row");
    data::ColumnInfo info;
    if (fields[1] == "ecfp") {
      info.source = data::FeatureSource::Ecfp;
    } else if (fields[1] == "refsim") {
      info.source = data::FeatureSource::ReferenceSimilarity;
    } else if (fields[1] == "descriptor") {
      info.source = data::FeatureSource::Descriptor;
    } else {
      throw Error(path + ":" + std::to_string(line_no) + ": unknown source '" + fields[1] + "'");
    }
    info.feature_id = std::stoull(fields[2]);
    info.label = fields[3];
    catalog.push_back(std::move(info));
  }
  return catalog;
}

// --------------------------------------------------------------------------

void write_folds(const std::string& path, const folds::FoldAssignment& assignment,
                 const std::vector<std::string>& compound_ids) {
  if (assignment.eval_fold.size() != compound_ids.size()) {
    throw Error("write_folds: id count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < compound_ids.size(); ++i) {
    out << compound_ids[i] << '\t' << assignment.cluster_id[i] << '\t';
    if (assignment.eval_fold[i]) {
      out << *assignment.eval_fold[i];
    } else {
      out << '-';
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

folds::FoldAssignment read_folds(const std::string& path,
                                 const std::vector<std::string>& compound_ids) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open folds file: " + path);
  folds::FoldAssignment assignment;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_map<std::string, std::pair<int, std::optional<int>>> by_id;
  int max_fold = -1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected id<TAB>cluster<TAB>fold");
    }
    std::optional<int> fold;
    if (fields[2] != "-") {
      fold = std::stoi(fields[2]);
      max_fold = std::max(max_fold, *fold);
    }
    if (!by_id.emplace(fields[0], std::make_pair(std::stoi(fields[1]), fold)).second) {
      throw Error(path + ":" + std::to_string(line_no) + ": duplicate id '" + fields[0] + "'");
    }
  }
  for (const auto& id : compound_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(path + ": no fold entry for compound '" + id + "'");
    assignment.cluster_id.push_back(it->second.first);
    assignment.eval_fold.push_back(it->second.second);
  }
  assignment.k = max_fold + 1;
  if (assignment.k < 2) throw Error(path + ": fewer than two folds");
  return assignment;
}

// --------------------------------------------------------------------------

std::size_t FeaturePipeline::reference_pattern_count() const {
  std::size_t count = 0;
  for (const auto& [name, size] : reference_sets) count += size;
  return count;
}

FeaturePipeline make_pipeline(const data::SparseFeatureMatrix& assembled,
                              const data::FittedPreprocess& fitted,
                              const data::FeatureConfig& config,
                              const std::vector<fp::ReferenceSet>& reference_sets) {
  FeaturePipeline pipeline;
  pipeline.ecfp_radius = config.ecfp_radius;
  pipeline.use_ecfp = false;
  pipeline.use_reference_similarity = false;
  pipeline.use_descriptors = false;
  for (std::uint32_t col : fitted.kept_columns) {
    const auto& info = assembled.catalog().at(col);
    switch (info.source) {
      case data::FeatureSource::Ecfp:
        pipeline.use_ecfp = true;
        pipeline.ecfp_ids.push_back(info.feature_id);
        break;
      case data::FeatureSource::ReferenceSimilarity:
        pipeline.use_reference_similarity = true;
        break;
      case data::FeatureSource::Descriptor:
        pipeline.use_descriptors = true;
        ++pipeline.descriptor_count;
        pipeline.descriptor_medians.push_back(fitted.medians[col]);
        break;
    }
  }
  if (pipeline.use_reference_similarity) {
    for (const auto& set : reference_sets) {
      pipeline.reference_sets.emplace_back(set.name, set.patterns.size());
    }
  }
  pipeline.scheme = fitted.scheme;
  if (pipeline.width() != fitted.kept_columns.size()) {
    throw Error("make_pipeline: width bookkeeping mismatch");
  }
  return pipeline;
}

data::SparseFeatureMatrix featurize_with_pipeline(
    const std::vector<data::CompoundRecord>& records,
    const std::vector<fp::ReferenceSet>& reference_sets, const FeaturePipeline& pipeline,
    const data::ExternalDescriptors* external) {
  if (pipeline.use_reference_similarity) {
    if (reference_sets.size() != pipeline.reference_sets.size()) {
      throw Error("featurize_with_pipeline: expected " +
                  std::to_string(pipeline.reference_sets.size()) + " reference sets, got " +
                  std::to_string(reference_sets.size()));
    }
    for (std::size_t s = 0; s < reference_sets.size(); ++s) {
      if (reference_sets[s].name != pipeline.reference_sets[s].first ||
          reference_sets[s].patterns.size() != pipeline.reference_sets[s].second) {
        throw Error("featurize_with_pipeline: reference set '" + reference_sets[s].name +
                    "' does not match the model's recorded sets");
      }
    }
  }
  const std::size_t builtin = data::graph_descriptor_names().size();
  const std::size_t external_count = external ? external->names.size() : 0;
  if (pipeline.use_descriptors && pipeline.descriptor_count != builtin + external_count) {
    throw Error("featurize_with_pipeline: model expects " +
                std::to_string(pipeline.descriptor_count) + " descriptor columns, inputs give " +
                std::to_string(builtin + external_count));
  }

  std::vector<data::ColumnInfo> catalog;
  for (std::uint64_t id : pipeline.ecfp_ids) {
    catalog.push_back({data::FeatureSource::Ecfp, id, "ecfp:" + std::to_string(id)});
  }
  if (pipeline.use_reference_similarity) {
    std::uint64_t ordinal = 0;
    for (const auto& set : reference_sets) {
      for (const auto& [pattern_id, pattern] : set.patterns) {
        catalog.push_back({data::FeatureSource::ReferenceSimilarity, ordinal++,
                           "refsim:" + set.name + ":" + pattern_id});
      }
    }
  }
  if (pipeline.use_descriptors) {
    std::uint64_t ordinal = 0;
    for (const auto& name : data::graph_descriptor_names()) {
      catalog.push_back({data::FeatureSource::Descriptor, ordinal++, "descriptor:" + name});
    }
    if (external) {
      for (const auto& name : external->names) {
        catalog.push_back({data::FeatureSource::Descriptor, ordinal++, "descriptor:" + name});
      }
    }
  }

  data::SparseFeatureMatrix matrix(catalog.size(), catalog);
  std::vector<std::pair<std::uint32_t, float>> row;
  for (std::size_t i = 0; i < records.size(); ++i) {
    row.clear();
    fp::SparseCountVector fingerprint;
    if (pipeline.use_ecfp || pipeline.use_reference_similarity) {
      fingerprint = fp::ecfp(records[i].graph, pipeline.ecfp_radius);
    }
    if (pipeline.use_ecfp) {
      // intersect the compound's ids with the pipeline's kept ids
      std::size_t k = 0;
      for (const auto& [id, count] : fingerprint.entries()) {
        while (k < pipeline.ecfp_ids.size() && pipeline.ecfp_ids[k] < id) ++k;
        if (k == pipeline.ecfp_ids.size()) break;
        if (pipeline.ecfp_ids[k] == id) {
          row.emplace_back(static_cast<std::uint32_t>(k), static_cast<float>(count));
        }
      }
    }
    std::uint32_t col = static_cast<std::uint32_t>(pipeline.ecfp_ids.size());
    if (pipeline.use_reference_similarity) {
      for (const auto& set : reference_sets) {
        for (const auto& [pattern_id, pattern] : set.patterns) {
          const double sim = fp::tanimoto(fingerprint, pattern);
          if (sim != 0.0) row.emplace_back(col, static_cast<float>(sim));
          ++col;
        }
      }
    }
    if (pipeline.use_descriptors) {
      std::size_t d = 0;
      for (double v : data::graph_descriptors(records[i].graph)) {
        const double value = std::isnan(v) ? pipeline.descriptor_medians[d] : v;
        row.emplace_back(col++, static_cast<float>(value));
        ++d;
      }
      if (external) {
        for (double v : external->rows[i]) {
          const double value = std::isnan(v) ? pipeline.descriptor_medians[d] : v;
          row.emplace_back(col++, static_cast<float>(value));
          ++d;
        }
      }
    }
    matrix.add_row(row);
  }
  return matrix;
}

void write_model(const std::string& path, const ModelBundle& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  put_bytes(out, kModelMagic, 4);
  put_u32(out, kFormatVersion);

  put_u32(out, static_cast<std::uint32_t>(model.task_names.size()));
  for (const auto& name : model.task_names) put_str(out, name);

  const auto& net = model.network;
  put_u32(out, static_cast<std::uint32_t>(net.layer_dims.size()));
  for (int d : net.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) put_f64(out, net.biases[l](r));
  }

  const auto& pipe = model.pipeline;
  put_u32(out, (pipe.use_ecfp ? 1u : 0u) | (pipe.use_reference_similarity ? 2u : 0u) |
                   (pipe.use_descriptors ? 4u : 0u));
  put_u32(out, static_cast<std::uint32_t>(pipe.ecfp_radius));
  put_u64(out, pipe.ecfp_ids.size());
  for (std::uint64_t id : pipe.ecfp_ids) put_u64(out, id);
  put_u32(out, static_cast<std::uint32_t>(pipe.reference_sets.size()));
  for (const auto& [name, size] : pipe.reference_sets) {
    put_str(out, name);
    put_u64(out, size);
  }
  put_u64(out, pipe.descriptor_count);
  for (double v : pipe.descriptor_medians) put_f64(out, v);
  put_u32(out, static_cast<std::uint32_t>(pipe.scheme.kind));
  put_u64(out, pipe.scheme.mean.size());
  for (double v : pipe.scheme.mean) put_f64(out, v);
  for (double v : pipe.scheme.stddev) put_f64(out, v);
  if (!out) throw Error("write failed: " + path);
}

ModelBundle read_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file: " + path);
  char magic[4];
  get_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) throw Error(path + ": not a model file");
  if (get_u32(in, "version") != kFormatVersion) throw Error(path + ": unsupported version");

  ModelBundle model;
  const std::uint32_t n_tasks = get_u32(in, "task count");
  for (std::uint32_t t = 0; t < n_tasks; ++t) model.task_names.push_back(get_str(in, "task name"));

  const std::uint32_t n_dims = get_u32(in, "layer count");
  for (std::uint32_t l = 0; l < n_dims; ++l) {
    model.network.layer_dims.push_back(static_cast<int>(get_u32(in, "layer dim")));
  }
  for (std::size_t l = 0; l + 1 < model.network.layer_dims.size(); ++l) {
    Eigen::MatrixXd w(model.network.layer_dims[l + 1], model.network.layer_dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_f64(in, "weights");
    }
    Eigen::VectorXd b(model.network.layer_dims[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = get_f64(in, "biases");
    model.network.weights.push_back(std::move(w));
    model.network.biases.push_back(std::move(b));
  }

  auto& pipe = model.pipeline;
  const std::uint32_t families = get_u32(in, "families");
  pipe.use_ecfp = families & 1;
  pipe.use_reference_similarity = families & 2;
  pipe.use_descriptors = families & 4;
  pipe.ecfp_radius = static_cast<int>(get_u32(in, "radius"));
  const std::uint64_t n_ids = get_u64(in, "ecfp id count");
  for (std::uint64_t i = 0; i < n_ids; ++i) pipe.ecfp_ids.push_back(get_u64(in, "ecfp id"));
  const std::uint32_t n_sets = get_u32(in, "reference set count");
  for (std::uint32_t s = 0; s < n_sets; ++s) {
    std::string name = get_str(in, "reference set name");
    const std::uint64_t size = get_u64(in, "reference set size");
    pipe.reference_sets.emplace_back(std::move(name), size);
  }
  pipe.descriptor_count = get_u64(in, "descriptor count");
  for (std::uint64_t i = 0; i < pipe.descriptor_count; ++i) {
    pipe.descriptor_medians.push_back(get_f64(in, "descriptor median"));
  }
  pipe.scheme.kind = static_cast<data::NormKind>(get_u32(in, "normalization kind"));
  const std::uint64_t stats = get_u64(in, "normalization width");
  for (std::uint64_t i = 0; i < stats; ++i) pipe.scheme.mean.push_back(get_f64(in, "mean"));
  for (std::uint64_t i = 0; i < stats; ++i) pipe.scheme.stddev.push_back(get_f64(in, "stddev"));

  if (model.network.layer_dims.empty() ||
      model.network.layer_dims.back() != static_cast<int>(n_tasks) ||
      static_cast<std::size_t>(model.network.layer_dims.front()) != pipe.width()) {
    throw Error(path + ": inconsistent model dimensions");
  }
  return model;
}

// --------------------------------------------------------------------------

void write_predictions(const std::string& path, const std::vector<std::string>& compound_ids,
                       const std::vector<std::string>& task_names,
                       const Eigen::MatrixXd& probabilities) {
  if (static_cast<std::size_t>(probabilities.rows()) != compound_ids.size() ||
      static_cast<std::size_t>(probabilities.cols()) != task_names.size()) {
    throw Error("write_predictions: shape mismatch");
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < compound_ids.size(); ++i) {
    for (std::size_t t = 0; t < task_names.size(); ++t) {
      out << compound_ids[i] << '\t' << task_names[t] << '\t'
          << format_double(probabilities(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(t)))
          << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path);
}

Predictions read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions file: " + path);
  Predictions preds;
  std::unordered_map<std::string, std::size_t> id_index, task_index;
  std::vector<std::tuple<std::size_t, std::size_t, double>> cells;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected id<TAB>task<TAB>probability");
    }
    auto [id_it, id_new] = id_index.emplace(fields[0], preds.compound_ids.size());
    if (id_new) preds.compound_ids.push_back(fields[0]);
    auto [task_it, task_new] = task_index.emplace(fields[1], preds.task_names.size());
    if (task_new) preds.task_names.push_back(fields[1]);
    cells.emplace_back(id_it->second, task_it->second, std::stod(fields[2]));
  }
  preds.probabilities = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(preds.compound_ids.size()),
      static_cast<Eigen::Index>(preds.task_names.size()),
      std::numeric_limits<double>::quiet_NaN());
  for (const auto& [i, t, p] : cells) {
    preds.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = p;
  }
  return preds;
}

void write_task_scores(const std::string& path, const std::vector<eval::TaskScore>& scores) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "task\tauc\tn_pos\tn_neg\n";
  for (const auto& score : scores) {
    out << score.task << '\t' << (score.auc ? format_double(*score.auc) : "NA") << '\t'
        << score.n_pos << '\t' << score.n_neg << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

void write_comparison(const std::string& path, const eval::ComparisonReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "task\tauc_st\tauc_mt\tp_value\tsignificant\n";
  for (const auto& row : report.rows) {
    out << row.task << '\t' << (row.st_mean ? format_double(*row.st_mean) : "NA") << '\t'
        << (row.mt_mean ? format_double(*row.mt_mean) : "NA") << '\t'
        << (row.p_value ? format_double(*row.p_value) : "NA") << '\t'
        << (row.significant ? "yes" : "no") << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

void write_dataset_stats(const std::string& path, const eval::DatasetStats& stats,
                         const std::vector<std::string>& task_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "# labels-per-compound histogram\n";
  out << "labels\tcompounds\n";
  for (std::size_t bin = 0; bin < stats.labels_per_compound.size(); ++bin) {
    out << bin << '\t' << stats.labels_per_compound[bin] << '\n';
  }
  out << "# absolute inter-task correlation\n";
  out << "task";
  for (const auto& name : task_names) out << '\t' << name;
  out << '\n';
  for (std::size_t s = 0; s < task_names.size(); ++s) {
    out << task_names[s];
    for (std::size_t t = 0; t < task_names.size(); ++t) {
      out << '\t'
          << format_double(stats.abs_correlation(static_cast<Eigen::Index>(s),
                                                 static_cast<Eigen::Index>(t)));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

namespace {

void write_config_fields(std::ostream& out, const hyper::HyperConfig& config) {
  out << data::to_string(config.normalization) << '\t' << hyper::family_label(config.families)
      << '\t' << config.sparseness_threshold << '\t' << config.hidden_units << '\t'
      << config.layers << '\t' << format_double(config.learning_rate) << '\t'
      << (config.dropout ? "on" : "off") << '\t' << format_double(config.l2);
}

}  // namespace

void write_search_table(const std::string& path,
                        const std::vector<hyper::ConfigEvaluation>& evaluations,
                        const std::vector<std::string>& task_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "config\tnormalization\tfamilies\tsparseness\thidden\tlayers\tlr\tdropout\tl2\tfold\t"
         "task\tauc\n";
  for (const auto& eval : evaluations) {
    for (std::size_t f = 0; f < eval.fold_task_auc.size(); ++f) {
      for (std::size_t t = 0; t < task_names.size(); ++t) {
        out << eval.config_index << '\t';
        write_config_fields(out, eval.config);
        const auto& cell = eval.fold_task_auc[f][t];
        out << '\t' << f << '\t' << task_names[t] << '\t' << (cell ? format_double(*cell) : "NA")
            << '\n';
      }
    }
  }
  if (!out) throw Error("write failed: " + path);
}

void write_best_configs(const std::string& path, const hyper::SearchResult& result,
                        const std::vector<std::string>& task_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "task\tconfig\tmean_auc\tnormalization\tfamilies\tsparseness\thidden\tlayers\tlr\t"
         "dropout\tl2\n";
  for (std::size_t t = 0; t < task_names.size(); ++t) {
    const auto& selection = result.per_task[t];
    out << task_names[t] << '\t';
    if (!selection.config_index) {
      out << "NA\tNA\t-\t-\t-\t-\t-\t-\t-\t-\n";
      continue;
    }
    const auto it = std::find_if(result.evaluations.begin(), result.evaluations.end(),
                                 [&](const hyper::ConfigEvaluation& e) {
                                   return e.config_index == *selection.config_index;
                                 });
    out << *selection.config_index << '\t' << format_double(selection.mean_auc) << '\t';
    write_config_fields(out, it->config);
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

void write_unit_correlations(const std::string& path,
                             const std::vector<interpret::UnitCorrelation>& correlations) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "layer\tunit\tpattern_id\tcorrelation\tp_raw\tp_adjusted\ttop_compounds\n";
  for (const auto& uc : correlations) {
    out << uc.layer << '\t' << uc.unit << '\t' << uc.pattern_id << '\t'
        << format_double(uc.correlation) << '\t' << format_double(uc.p_raw) << '\t'
        << format_double(uc.p_adjusted) << '\t';
    for (std::size_t i = 0; i < uc.top_compounds.size(); ++i) {
      if (i > 0) out << ',';
      out << uc.top_compounds[i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

void write_layer_trend(const std::string& path,
                       const std::vector<interpret::LayerTrendRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "layer\tpairs\tmean_pattern_size\n";
  for (const auto& row : rows) {
    out << row.layer << '\t' << row.pairs_used << '\t' << format_double(row.mean_pattern_size)
        << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace toxnet::io
