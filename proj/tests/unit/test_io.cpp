#include <cmath>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "toxnet/io.hpp"

using namespace toxnet;

TEST_CASE("format_double is stable and round-trips") {
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(std::nan("")) == "NA");
  const double v = 0.12345678901234567;
  CHECK(std::stod(io::format_double(v)) == v);
}

TEST_CASE("compound tsv: header tasks, missing labels, line-numbered errors") {
  tt::TempDir dir;
  {
    std::ofstream out(dir.file("c.tsv"));
    out << "id\tsmiles\tNR.One\tSR.Two\n";
    out << "c1\tCCO\t1\t\n";
    out << "c2\tc1ccccc1\t0\t1\n";
  }
  const auto file = io::read_compound_file(dir.file("c.tsv"), io::CompoundFormat::Tsv);
  CHECK(file.task_names == std::vector<std::string>{"NR.One", "SR.Two"});
  REQUIRE(file.compounds.size() == 2);
  CHECK(file.compounds[0].labels ==
        std::vector<std::int8_t>{1, data::kMissingLabel});
  const auto records = io::parse_compounds(file);
  CHECK(records[1].graph.atoms.size() == 6);

  {
    std::ofstream out(dir.file("bad_label.tsv"));
    out << "id\tsmiles\tT\n";
    out << "c1\tCCO\t2\n";
  }
  CHECK_THROWS_WITH_AS(io::read_compound_file(dir.file("bad_label.tsv"), io::CompoundFormat::Tsv),
                       doctest::Contains(":2:"), Error);

  {
    std::ofstream out(dir.file("bad_smiles.tsv"));
    out << "id\tsmiles\tT\n";
    out << "c1\tCCO\t1\n";
    out << "c2\tC(\t0\n";
  }
  const auto bad = io::read_compound_file(dir.file("bad_smiles.tsv"), io::CompoundFormat::Tsv);
  CHECK_THROWS_WITH_AS(io::parse_compounds(bad), doctest::Contains("line 3"), Error);
}

TEST_CASE("tox21 csv adapter finds smiles and id columns") {
  tt::TempDir dir;
  {
    std::ofstream out(dir.file("t.csv"));
    out << "NR.AhR,SR.MMP,mol_id,smiles\n";
    out << "1,,TOX100,CCO\n";
    out << "x,0,TOX101,CCN\n";
  }
  const auto file = io::read_compound_file(dir.file("t.csv"), io::CompoundFormat::Tox21Csv);
  CHECK(file.task_names == std::vector<std::string>{"NR.AhR", "SR.MMP"});
  REQUIRE(file.compounds.size() == 2);
  CHECK(file.compounds[0].id == "TOX100");
  CHECK(file.compounds[0].smiles == "CCO");
  CHECK(file.compounds[0].labels == std::vector<std::int8_t>{1, data::kMissingLabel});
  CHECK(file.compounds[1].labels == std::vector<std::int8_t>{data::kMissingLabel, 0});
}

TEST_CASE("matrix serialization round-trips bit-exactly, NaN included") {
  std::vector<data::ColumnInfo> catalog = {
      {data::FeatureSource::Ecfp, 42, "ecfp:42"},
      {data::FeatureSource::Descriptor, 0, "descriptor:x"},
  };
  data::SparseFeatureMatrix m(2, catalog);
  m.add_row({{0, 3.0f}, {1, -0.25f}});
  m.add_row({{1, std::numeric_limits<float>::quiet_NaN()}});

  tt::TempDir dir;
  io::write_matrix(dir.file("m.bin"), m);
  io::write_catalog(dir.file("m.catalog.tsv"), m.catalog());
  const auto catalog2 = io::read_catalog(dir.file("m.catalog.tsv"));
  REQUIRE(catalog2.size() == 2);
  CHECK(catalog2[0].source == data::FeatureSource::Ecfp);
  CHECK(catalog2[0].feature_id == 42);
  CHECK(catalog2[1].label == "descriptor:x");

  const auto m2 = io::read_matrix(dir.file("m.bin"), catalog2);
  CHECK(m2.rows() == 2);
  CHECK(m2.cols() == 2);
  CHECK(m2.raw_offsets() == m.raw_offsets());
  CHECK(m2.raw_columns() == m.raw_columns());
  REQUIRE(m2.raw_values().size() == 3);
  CHECK(m2.raw_values()[0] == 3.0f);
  CHECK(m2.raw_values()[1] == -0.25f);
  CHECK(std::isnan(m2.raw_values()[2]));

  CHECK_THROWS_AS(io::read_matrix(dir.file("m.bin"), {}), Error);
}

TEST_CASE("fold files round-trip including training-only dashes") {
  folds::FoldAssignment assignment;
  assignment.k = 2;
  assignment.cluster_id = {0, 0, 1, 2};
  assignment.eval_fold = {0, 0, 1, std::nullopt};
  const std::vector<std::string> ids = {"a", "b", "c", "d"};

  tt::TempDir dir;
  io::write_folds(dir.file("folds.tsv"), assignment, ids);
  const auto back = io::read_folds(dir.file("folds.tsv"), ids);
  CHECK(back.k == 2);
  CHECK(back.cluster_id == assignment.cluster_id);
  CHECK(back.eval_fold == assignment.eval_fold);

  const std::vector<std::string> missing = {"a", "zz"};
  CHECK_THROWS_AS(io::read_folds(dir.file("folds.tsv"), missing), Error);
}

TEST_CASE("model bundles round-trip the network and pipeline") {
  io::ModelBundle model;
  model.network = net::init_network({3, 4, 2}, 17);
  model.task_names = {"A", "B"};
  model.pipeline.use_ecfp = true;
  model.pipeline.use_reference_similarity = false;
  model.pipeline.use_descriptors = false;
  model.pipeline.ecfp_radius = 2;
  model.pipeline.ecfp_ids = {11, 22, 33};
  model.pipeline.descriptor_count = 0;
  model.pipeline.scheme.kind = data::NormKind::Tanh;

  tt::TempDir dir;
  io::write_model(dir.file("m.bin"), model);
  const auto back = io::read_model(dir.file("m.bin"));
  CHECK(back.task_names == model.task_names);
  CHECK(back.network.layer_dims == model.network.layer_dims);
  CHECK(tt::same(back.network.weights[0], model.network.weights[0]));
  CHECK(tt::same(back.network.weights[1], model.network.weights[1]));
  CHECK(back.pipeline.ecfp_ids == model.pipeline.ecfp_ids);
  CHECK(back.pipeline.scheme.kind == data::NormKind::Tanh);

  // corrupted magic is rejected
  {
    std::ofstream out(dir.file("junk.bin"), std::ios::binary);
    out << "not a model";
  }
  CHECK_THROWS_AS(io::read_model(dir.file("junk.bin")), Error);
}

TEST_CASE("predictions round-trip") {
  Eigen::MatrixXd probs(2, 2);
  probs << 0.25, 0.75, 0.5, 0.125;
  tt::TempDir dir;
  io::write_predictions(dir.file("p.tsv"), {"c1", "c2"}, {"A", "B"}, probs);
  const auto back = io::read_predictions(dir.file("p.tsv"));
  CHECK(back.compound_ids == std::vector<std::string>{"c1", "c2"});
  CHECK(back.task_names == std::vector<std::string>{"A", "B"});
  CHECK(tt::same(back.probabilities, probs));
}

TEST_CASE("train-time preprocessing and the frozen pipeline agree feature-for-feature") {
  using data::CompoundRecord;
  std::vector<CompoundRecord> records;
  const char* molecules[] = {"CCO", "CCN", "CCC", "c1ccccc1", "CC(C)O", "CCS", "CCCl", "CCCC"};
  for (int i = 0; i < 8; ++i) {
    records.push_back({"c" + std::to_string(i), smiles::parse_smiles(molecules[i]),
                       {static_cast<std::int8_t>(i % 2)}});
  }
  fp::ReferenceSet refs;
  refs.name = "probe";
  refs.patterns.push_back({"p0", fp::ecfp(smiles::parse_smiles("CC"), 2)});
  refs.patterns.push_back({"p1", fp::ecfp(smiles::parse_smiles("c1ccccc1"), 2)});

  data::FeatureConfig config;
  const auto ds = data::assemble(records, {"T"}, {refs}, config);

  data::PreprocessSpec spec;
  spec.sparseness_threshold = 2;
  spec.normalization = data::NormKind::StandardDeviation;
  std::vector<std::size_t> train_rows = {0, 1, 2, 3, 4, 5};
  const auto fitted = data::fit_preprocess(ds.features, train_rows, spec);
  const auto transformed = data::apply_preprocess(ds.features, fitted);

  const auto pipeline = io::make_pipeline(ds.features, fitted, config, {refs});
  CHECK(pipeline.width() == transformed.cols());
  const auto refeaturized = io::featurize_with_pipeline(records, {refs}, pipeline);

  REQUIRE(refeaturized.rows() == transformed.rows());
  REQUIRE(refeaturized.cols() == transformed.cols());
  std::vector<std::size_t> rows(records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  CHECK(tt::same(refeaturized.dense_batch(rows), transformed.dense_batch(rows)));
}
