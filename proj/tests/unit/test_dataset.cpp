#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "toxnet/dataset.hpp"

using namespace toxnet;
using data::CompoundRecord;
using data::FeatureConfig;
using data::FeatureSource;
using data::kMissingLabel;
using smiles::parse_smiles;

namespace {

CompoundRecord record(const std::string& id, const std::string& smiles_text,
                      std::vector<std::int8_t> labels) {
  return {id, parse_smiles(smiles_text), std::move(labels)};
}

fp::SparseCountVector fp2(const smiles::MolecularGraph& g) { return fp::ecfp(g, 2); }

std::vector<std::size_t> all_rows(const data::SparseFeatureMatrix& m) {
  std::vector<std::size_t> rows(m.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

TEST_CASE("assemble: ecfp-only catalog, block order, label handling") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1, kMissingLabel}),
      record("b", "CCN", {kMissingLabel, kMissingLabel}),
  };
  fp::ReferenceSet refs;
  refs.name = "tox";
  refs.patterns.push_back({"p1", fp2(parse_smiles("CC"))});

  FeatureConfig ecfp_only;
  ecfp_only.use_reference_similarity = false;
  ecfp_only.use_descriptors = false;
  const auto ds = data::assemble(records, {"T1", "T2"}, {refs}, ecfp_only);
  CHECK(ds.features.rows() == 2);
  for (const auto& info : ds.features.catalog()) CHECK(info.source == FeatureSource::Ecfp);

  // all-missing label rows are retained with an all-zero mask
  CHECK(ds.labels.labeled_count(1) == 0);
  CHECK(ds.labels.present(0, 0));
  CHECK_FALSE(ds.labels.present(0, 1));

  FeatureConfig both = ecfp_only;
  both.use_descriptors = true;
  const auto ds2 = data::assemble(records, {"T1", "T2"}, {refs}, both);
  bool seen_descriptor = false;
  for (const auto& info : ds2.features.catalog()) {
    if (info.source == FeatureSource::Descriptor) seen_descriptor = true;
    // fixed block order: no ecfp column after the first descriptor column
    if (seen_descriptor) CHECK(info.source == FeatureSource::Descriptor);
  }
  CHECK(seen_descriptor);

  FeatureConfig none;
  none.use_ecfp = none.use_reference_similarity = none.use_descriptors = false;
  CHECK_THROWS_AS(data::assemble(records, {"T1", "T2"}, {}, none), Error);

  const std::vector<CompoundRecord> bad_width = {record("a", "C", {1})};
  CHECK_THROWS_AS(data::assemble(bad_width, {"T1", "T2"}, {}, both), Error);
}

TEST_CASE("assemble: sparsity threshold drops rare ecfp columns") {
  std::vector<CompoundRecord> records;
  for (int i = 0; i < 5; ++i) records.push_back(record("c" + std::to_string(i), "CCO", {1}));
  records.push_back(record("odd", "CCS", {0}));

  FeatureConfig config;
  config.use_reference_similarity = false;
  config.use_descriptors = false;
  config.sparseness_threshold = 5;
  const auto ds = data::assemble(records, {"T"}, {}, config);
  // only features shared by the five ethanol copies survive
  const auto shared = fp2(parse_smiles("CCO"));
  for (const auto& info : ds.features.catalog()) {
    CHECK(shared.count_of(info.feature_id) > 0);
  }
  CHECK(ds.features.cols() == shared.size());
}

TEST_CASE("merge_duplicates groups by largest fragment and reconciles labels") {
  // same structure spelled differently, one carrying a solvent fragment
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1, kMissingLabel}),
      record("b", "OCC.[NH4+]", {1, 0}),
      record("c", "CCN", {0, 0}),
  };
  const auto [merged, report] = data::merge_duplicates(records, fp2);
  REQUIRE(merged.size() == 2);
  CHECK(report.rows_before == 3);
  CHECK(report.rows_after == 2);
  CHECK(report.contradictions == 0);
  REQUIRE(report.merged_groups.size() == 1);
  CHECK(report.merged_groups[0] == std::pair<std::string, std::size_t>{"a", 2});
  // agreeing labels union: (1, missing) + (1, 0) -> (1, 0)
  CHECK(merged[0].labels == std::vector<std::int8_t>{1, 0});
  CHECK(merged[0].id == "a");
}

TEST_CASE("merge_duplicates: disagreement becomes missing and is counted") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1}),
      record("b", "CCO", {0}),
  };
  const auto [merged, report] = data::merge_duplicates(records, fp2);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].labels[0] == kMissingLabel);
  CHECK(report.contradictions == 1);
}

TEST_CASE("merge_duplicates: no duplicates is the identity, and idempotent") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1}),
      record("b", "CCN", {0}),
  };
  const auto [merged, report] = data::merge_duplicates(records, fp2);
  REQUIRE(merged.size() == 2);
  CHECK(report.merged_groups.empty());
  CHECK(report.contradictions == 0);
  CHECK(merged[0].id == "a");
  CHECK(merged[1].id == "b");

  const auto [again, report2] = data::merge_duplicates(merged, fp2);
  CHECK(again.size() == merged.size());
  CHECK(report2.merged_groups.empty());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CHECK(again[i].id == merged[i].id);
    CHECK(again[i].labels == merged[i].labels);
  }
}

TEST_CASE("normalizers: tanh, sqrt and clamped standard deviation") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1}),
      record("b", "CCN", {0}),
      record("c", "CCC", {1}),
  };
  FeatureConfig config;
  config.use_reference_similarity = false;
  const auto ds = data::assemble(records, {"T"}, {}, config);
  const auto rows = all_rows(ds.features);

  const auto tanh_scheme = data::fit_normalizer(ds.features, data::NormKind::Tanh, rows);
  data::DenseMatrix block(1, ds.features.cols());
  block.setZero();
  data::apply_normalizer(block, tanh_scheme);
  CHECK(block(0, 0) == 0.0);  // tanh(0) = 0

  data::DenseMatrix sq(1, ds.features.cols());
  sq.setZero();
  sq(0, 0) = 4.0;
  const auto sqrt_scheme = data::fit_normalizer(ds.features, data::NormKind::Sqrt, rows);
  data::apply_normalizer(sq, sqrt_scheme);
  CHECK(sq(0, 0) == 2.0);

  data::DenseMatrix neg(1, ds.features.cols());
  neg.setZero();
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(data::apply_normalizer(neg, sqrt_scheme), Error);

  // atom_count is constant (3) across this corpus: clamped divisor gives 0
  const auto sd_scheme =
      data::fit_normalizer(ds.features, data::NormKind::StandardDeviation, rows);
  auto dense = ds.features.dense_batch(rows);
  data::apply_normalizer(dense, sd_scheme);
  std::size_t atom_count_col = 0;
  for (std::size_t j = 0; j < ds.features.catalog().size(); ++j) {
    if (ds.features.catalog()[j].label == "descriptor:atom_count") atom_count_col = j;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(atom_count_col)) == 0.0);
  }
}

TEST_CASE("sparse tanh application preserves the sparsity pattern") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1}),
      record("b", "c1ccccc1", {0}),
  };
  FeatureConfig config;
  config.use_reference_similarity = false;
  config.use_descriptors = false;
  const auto ds = data::assemble(records, {"T"}, {}, config);

  data::NormalizationScheme tanh_scheme;
  tanh_scheme.kind = data::NormKind::Tanh;
  const auto mapped = data::apply_normalizer(ds.features, tanh_scheme);
  CHECK(mapped.nonzeros() == ds.features.nonzeros());
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    const auto before = ds.features.row_columns(i);
    const auto after = mapped.row_columns(i);
    REQUIRE(before.size() == after.size());
    for (std::size_t e = 0; e < before.size(); ++e) {
      CHECK(before[e] == after[e]);
      CHECK(mapped.row_values(i)[e] ==
            doctest::Approx(std::tanh(ds.features.row_values(i)[e])));
    }
  }
}

TEST_CASE("median imputation over descriptor columns") {
  // hand-built matrix: one descriptor column with values [1, NaN, 3]
  std::vector<data::ColumnInfo> catalog = {
      {FeatureSource::Descriptor, 0, "descriptor:x"},
  };
  data::SparseFeatureMatrix m(1, catalog);
  m.add_row({{0, 1.0f}});
  m.add_row({{0, std::numeric_limits<float>::quiet_NaN()}});
  m.add_row({{0, 3.0f}});

  const auto imputed = data::median_impute(m);
  CHECK(imputed.row_values(0)[0] == 1.0f);
  CHECK(imputed.row_values(1)[0] == 2.0f);  // median of {1, 3}
  CHECK(imputed.row_values(2)[0] == 3.0f);

  // no missing values: identity
  const auto again = data::median_impute(imputed);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.row_values(i)[0] == imputed.row_values(i)[0]);

  // all-missing column falls back to zero
  data::SparseFeatureMatrix all_nan(1, catalog);
  for (int i = 0; i < 2; ++i) {
    all_nan.add_row({{0, std::numeric_limits<float>::quiet_NaN()}});
  }
  const auto zeroed = data::median_impute(all_nan);
  CHECK(zeroed.row_values(0)[0] == 0.0f);
  CHECK(zeroed.row_values(1)[0] == 0.0f);
}

TEST_CASE("dense_batch: ordering, bounds, emptiness, round trip") {
  std::vector<data::ColumnInfo> catalog = {
      {FeatureSource::Ecfp, 10, "ecfp:10"},
      {FeatureSource::Ecfp, 20, "ecfp:20"},
      {FeatureSource::Ecfp, 30, "ecfp:30"},
  };
  data::SparseFeatureMatrix m(3, catalog);
  m.add_row({{0, 1.0f}, {2, 2.0f}});
  m.add_row({});
  m.add_row({{1, 5.0f}});

  const std::vector<std::size_t> empty;
  CHECK(m.dense_batch(empty).rows() == 0);
  CHECK(m.dense_batch(empty).cols() == 3);

  const std::vector<std::size_t> swapped = {2, 0};
  const auto block = m.dense_batch(swapped);
  CHECK(block(0, 1) == 5.0);
  CHECK(block(1, 0) == 1.0);
  CHECK(block(1, 2) == 2.0);
  CHECK(block(0, 0) == 0.0);

  const std::vector<std::size_t> oob = {7};
  CHECK_THROWS_AS(m.dense_batch(oob), Error);

  // densify then re-sparsify reproduces the stored row exactly
  const std::vector<std::size_t> one = {0};
  const auto dense = m.dense_batch(one);
  std::vector<std::pair<std::uint32_t, float>> resparse;
  for (Eigen::Index j = 0; j < dense.cols(); ++j) {
    if (dense(0, j) != 0.0) {
      resparse.push_back({static_cast<std::uint32_t>(j), static_cast<float>(dense(0, j))});
    }
  }
  REQUIRE(resparse.size() == m.row_columns(0).size());
  for (std::size_t e = 0; e < resparse.size(); ++e) {
    CHECK(resparse[e].first == m.row_columns(0)[e]);
    CHECK(resparse[e].second == m.row_values(0)[e]);
  }
}

TEST_CASE("fit_preprocess fits on training rows only (no leakage)") {
  std::vector<CompoundRecord> records;
  const char* molecules[] = {"CCO", "CCN", "CCC", "CCS", "c1ccccc1", "CC(C)C"};
  for (int i = 0; i < 6; ++i) {
    records.push_back(record("c" + std::to_string(i), molecules[i], {1}));
  }
  FeatureConfig config;
  config.use_reference_similarity = false;
  auto ds = data::assemble(records, {"T"}, {}, config);

  data::PreprocessSpec spec;
  spec.use_reference_similarity = false;
  spec.sparseness_threshold = 2;
  spec.normalization = data::NormKind::StandardDeviation;

  const std::vector<std::size_t> train = {0, 1, 2, 3};
  const auto fitted = data::fit_preprocess(ds.features, train, spec);

  // perturb a held-out row: fitted statistics must not change
  auto perturbed_records = records;
  perturbed_records[4] = record("c4", "CI", {1});
  const auto ds2 = data::assemble(perturbed_records, {"T"}, {}, config);
  const auto fitted2 = data::fit_preprocess(ds2.features, train, spec);

  // column spaces differ between assemblies; compare by catalog label
  auto kept_keys = [](const data::SparseFeatureMatrix& m, const data::FittedPreprocess& f) {
    std::vector<std::string> keys;
    for (auto col : f.kept_columns) keys.push_back(m.catalog()[col].label);
    return keys;
  };
  CHECK(kept_keys(ds.features, fitted) == kept_keys(ds2.features, fitted2));
  CHECK(fitted.scheme.mean == fitted2.scheme.mean);
  CHECK(fitted.scheme.stddev == fitted2.scheme.stddev);
}

TEST_CASE("apply_preprocess selects families and keeps row count") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1}),
      record("b", "CCN", {0}),
  };
  fp::ReferenceSet refs;
  refs.name = "tox";
  refs.patterns.push_back({"p1", fp2(parse_smiles("CC"))});
  const auto ds = data::assemble(records, {"T"}, {refs}, FeatureConfig{});

  data::PreprocessSpec spec;
  spec.use_ecfp = false;
  spec.use_reference_similarity = true;
  spec.use_descriptors = false;
  const std::vector<std::size_t> train = {0, 1};
  const auto fitted = data::fit_preprocess(ds.features, train, spec);
  const auto out = data::apply_preprocess(ds.features, fitted);
  CHECK(out.rows() == 2);
  CHECK(out.cols() == 1);
  CHECK(out.catalog()[0].source == FeatureSource::ReferenceSimilarity);
}

TEST_CASE("external descriptors join the descriptor block with NaN markers") {
  const std::vector<CompoundRecord> records = {
      record("a", "CCO", {1}),
      record("b", "CCN", {0}),
  };
  data::ExternalDescriptors external;
  external.names = {"logp"};
  external.rows = {{1.5}, {std::numeric_limits<double>::quiet_NaN()}};

  FeatureConfig config;
  config.use_ecfp = false;
  config.use_reference_similarity = false;
  const auto ds = data::assemble(records, {"T"}, {}, config, &external);
  CHECK(ds.features.cols() == data::graph_descriptor_names().size() + 1);
  const auto last = static_cast<std::uint32_t>(ds.features.cols() - 1);
  CHECK(ds.features.catalog()[last].label == "descriptor:logp");
  CHECK(ds.features.row_values(0).back() == 1.5f);
  CHECK(std::isnan(ds.features.row_values(1).back()));

  const auto imputed = data::median_impute(ds.features);
  CHECK(imputed.row_values(1).back() == 1.5f);  // single-value median
}
