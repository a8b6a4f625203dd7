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

// toxnet command line: featurize, split, train, predict, eval, search,
// compare, interpret. Every subcommand honors --seed and --threads and the
// whole pipeline is reproducible: identical inputs and seeds give
// byte-identical artifacts.

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toxnet/evaluation.hpp"
#include "toxnet/hypersearch.hpp"
#include "toxnet/interpret.hpp"
#include "toxnet/io.hpp"
#include "toxnet/parallel.hpp"

namespace {

using namespace toxnet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("TOXNET_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return default_thread_count();
}

struct CompoundArgs {
  std::string path;
  std::string format = "tsv";
  bool merge_duplicates = false;
  int radius = fp::kEcfp4Radius;
};

void add_compound_args(CLI::App* cmd, CompoundArgs& args) {
  cmd->add_option("--compounds", args.path, "compound file (id, SMILES, task labels)")
      ->required();
  cmd->add_option("--format", args.format, "compound file format: tsv | tox21-csv")
      ->check(CLI::IsMember({"tsv", "tox21-csv"}));
  cmd->add_flag("--merge-duplicates", args.merge_duplicates,
                "merge rows whose largest fragment has the same fingerprint");
  cmd->add_option("--radius", args.radius, "fingerprint radius (ECFP4 = 2)")
      ->check(CLI::Range(0, fp::kMaxEcfpRadius));
}

struct LoadedCompounds {
  std::vector<std::string> task_names;
  std::vector<data::CompoundRecord> records;
};

LoadedCompounds load_compounds(const CompoundArgs& args) {
  const auto format =
      args.format == "tsv" ? io::CompoundFormat::Tsv : io::CompoundFormat::Tox21Csv;
  const auto file = io::read_compound_file(args.path, format);
  LoadedCompounds loaded;
  loaded.task_names = file.task_names;
  loaded.records = io::parse_compounds(file);
  if (args.merge_duplicates) {
    auto [merged, report] =
        data::merge_duplicates(loaded.records, [&args](const smiles::MolecularGraph& g) {
          return fp::ecfp(g, args.radius);
        });
    std::cout << "merged " << report.rows_before << " rows into " << report.rows_after << " ("
              << report.merged_groups.size() << " duplicate groups, " << report.contradictions
              << " label contradictions)\n";
    loaded.records = std::move(merged);
  }
  return loaded;
}

struct RefArgs {
  std::string tox_path;
  std::string scaffold_path;
};

void add_ref_args(CLI::App* cmd, RefArgs& args) {
  cmd->add_option("--tox-refs", args.tox_path, "toxicophore reference file (id<TAB>SMILES)");
  cmd->add_option("--scaffold-refs", args.scaffold_path,
                  "scaffold reference file (id<TAB>SMILES)");
}

std::vector<fp::ReferenceSet> load_refs(const RefArgs& args, int radius) {
  std::vector<fp::ReferenceSet> refs;
  if (!args.tox_path.empty()) {
    refs.push_back(fp::load_reference_set(args.tox_path, "tox", radius));
  }
  if (!args.scaffold_path.empty()) {
    refs.push_back(fp::load_reference_set(args.scaffold_path, "scaffold", radius));
  }
  return refs;
}

std::uint8_t resolve_families(const std::string& families_flag, bool have_refs) {
  if (families_flag == "auto") {
    return hyper::kFamilyEcfp | hyper::kFamilyDescriptors |
           (have_refs ? hyper::kFamilyRefSim : 0);
  }
  const std::uint8_t mask = hyper::parse_family_label(families_flag);
  if ((mask & hyper::kFamilyRefSim) && !have_refs) {
    throw Error("feature families include similarities but no reference file was given");
  }
  return mask;
}

data::FeatureConfig feature_config(std::uint8_t families, int radius,
                                   std::optional<int> sparseness = std::nullopt) {
  data::FeatureConfig config;
  config.use_ecfp = families & hyper::kFamilyEcfp;
  config.use_reference_similarity = families & hyper::kFamilyRefSim;
  config.use_descriptors = families & hyper::kFamilyDescriptors;
  config.ecfp_radius = radius;
  config.sparseness_threshold = sparseness;
  return config;
}

std::vector<std::size_t> every_row(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

std::vector<fp::SparseCountVector> compound_fingerprints(
    const std::vector<data::CompoundRecord>& records, int radius, int threads) {
  std::vector<fp::SparseCountVector> fps(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    fps[i] = fp::ecfp(records[i].graph, radius);
  });
  return fps;
}

// ---------------------------------------------------------------------------

struct FeaturizeOptions {
  CompoundArgs compounds;
  RefArgs refs;
  std::string families = "auto";
  std::string descriptors_path;
  std::optional<int> sparseness;
  std::string out;
  std::string catalog_out;
  int threads = 0;
};

int cmd_featurize(const FeaturizeOptions& opt) {
  const auto loaded = load_compounds(opt.compounds);
  const auto refs = load_refs(opt.refs, opt.compounds.radius);
  const auto families = resolve_families(opt.families, !refs.empty());
  const auto config = feature_config(families, opt.compounds.radius, opt.sparseness);

  std::optional<data::ExternalDescriptors> external;
  if (!opt.descriptors_path.empty()) {
    std::vector<std::string> ids;
    for (const auto& record : loaded.records) ids.push_back(record.id);
    external = io::read_descriptor_file(opt.descriptors_path, ids);
  }
  const auto dataset = data::assemble(loaded.records, loaded.task_names, refs, config,
                                      external ? &*external : nullptr);

  io::write_matrix(opt.out, dataset.features);
  const std::string catalog_path =
      opt.catalog_out.empty() ? opt.out + ".catalog.tsv" : opt.catalog_out;
  io::write_catalog(catalog_path, dataset.features.catalog());

  std::size_t n_ecfp = 0, n_refsim = 0, n_desc = 0;
  for (const auto& info : dataset.features.catalog()) {
    switch (info.source) {
      case data::FeatureSource::Ecfp: ++n_ecfp; break;
      case data::FeatureSource::ReferenceSimilarity: ++n_refsim; break;
      case data::FeatureSource::Descriptor: ++n_desc; break;
    }
  }
  std::cout << "rows\t" << dataset.features.rows() << "\n"
            << "ecfp\t" << n_ecfp << "\n"
            << "refsim\t" << n_refsim << "\n"
            << "descriptor\t" << n_desc << "\n"
            << "nonzeros\t" << dataset.features.nonzeros() << "\n";
  return kExitOk;
}

struct SplitOptions {
  CompoundArgs compounds;
  double threshold = folds::kDefaultClusterThreshold;
  int k = folds::kDefaultFoldCount;
  int min_tasks = folds::kDefaultMinTasks;
  std::string out;
  int threads = 0;
};

int cmd_split(const SplitOptions& opt) {
  const auto loaded = load_compounds(opt.compounds);
  const auto fps =
      compound_fingerprints(loaded.records, opt.compounds.radius, resolve_threads(opt.threads));
  const auto clusters =
      folds::cluster_compounds(fps, opt.threshold, resolve_threads(opt.threads));

  data::LabelMatrix labels(loaded.records.size(), loaded.task_names);
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    for (std::size_t t = 0; t < loaded.task_names.size(); ++t) {
      labels.set(i, t, loaded.records[i].labels[t]);
    }
  }
  const auto assignment = folds::make_folds(clusters, labels, opt.k, opt.min_tasks);

  std::vector<std::string> ids;
  for (const auto& record : loaded.records) ids.push_back(record.id);
  io::write_folds(opt.out, assignment, ids);

  std::vector<std::size_t> fold_sizes(opt.k, 0);
  std::size_t training_only = 0;
  for (const auto& fold : assignment.eval_fold) {
    if (fold) {
      ++fold_sizes[*fold];
    } else {
      ++training_only;
    }
  }
  const int n_clusters =
      *std::max_element(assignment.cluster_id.begin(), assignment.cluster_id.end()) + 1;
  std::cout << "clusters\t" << n_clusters << "\n";
  for (int f = 0; f < opt.k; ++f) std::cout << "fold_" << f << "\t" << fold_sizes[f] << "\n";
  std::cout << "training_only\t" << training_only << "\n";
  return kExitOk;
}

struct TrainOptions {
  CompoundArgs compounds;
  RefArgs refs;
  std::string families = "auto";
  std::string descriptors_path;
  std::string folds_path;
  int val_fold = 0;
  std::string normalization = "tanh";
  int sparseness = 5;
  int hidden_units = 1024;
  int layers = 1;
  double learning_rate = 0.01;
  bool dropout = false;
  double l2 = 0.0;
  int batch_size = 512;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string history_out;
};

int cmd_train(const TrainOptions& opt) {
  const auto loaded = load_compounds(opt.compounds);
  const auto refs = load_refs(opt.refs, opt.compounds.radius);
  const auto families = resolve_families(opt.families, !refs.empty());
  const auto config = feature_config(families, opt.compounds.radius);

  std::optional<data::ExternalDescriptors> external;
  if (!opt.descriptors_path.empty()) {
    std::vector<std::string> ids;
    for (const auto& record : loaded.records) ids.push_back(record.id);
    external = io::read_descriptor_file(opt.descriptors_path, ids);
  }
  const auto dataset = data::assemble(loaded.records, loaded.task_names, refs, config,
                                      external ? &*external : nullptr);

  std::vector<std::size_t> train_rows, val_rows;
  if (!opt.folds_path.empty()) {
    const auto assignment = io::read_folds(opt.folds_path, dataset.compound_ids);
    if (opt.val_fold < 0 || opt.val_fold >= assignment.k) {
      throw Error("--val-fold out of range for the folds file");
    }
    train_rows = assignment.train_rows(opt.val_fold);
    val_rows = assignment.eval_rows(opt.val_fold);
  } else {
    train_rows = every_row(dataset.features.rows());
  }

  data::PreprocessSpec pspec;
  pspec.use_ecfp = config.use_ecfp;
  pspec.use_reference_similarity = config.use_reference_similarity;
  pspec.use_descriptors = config.use_descriptors;
  pspec.sparseness_threshold =
      config.use_ecfp ? std::optional<int>(opt.sparseness) : std::nullopt;
  pspec.normalization = data::norm_kind_from_string(opt.normalization);
  const auto fitted = data::fit_preprocess(dataset.features, train_rows, pspec);
  const auto matrix = data::apply_preprocess(dataset.features, fitted);

  net::NetSpec arch;
  arch.hidden.assign(opt.layers, opt.hidden_units);
  net::TrainConfig tc;
  tc.learning_rate = opt.learning_rate;
  tc.l2 = opt.l2;
  if (opt.dropout) tc.dropout = net::DropoutSpec{};
  tc.batch_size = opt.batch_size;
  tc.max_epochs = opt.max_epochs;
  tc.patience = opt.patience;
  tc.seed = opt.seed;

  const auto result =
      net::train(matrix, &fitted.scheme, dataset.labels, train_rows, val_rows, arch, tc);

  io::ModelBundle model;
  model.network = result.network;
  model.task_names = loaded.task_names;
  model.pipeline = io::make_pipeline(dataset.features, fitted, config, refs);
  io::write_model(opt.out, model);

  if (!opt.history_out.empty()) {
    std::ofstream out(opt.history_out);
    if (!out) throw Error("cannot open for writing: " + opt.history_out);
    out << "epoch\ttrain_loss\tval_metric\n";
    for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
      const auto& record = result.history.epochs[e];
      out << (e + 1) << '\t' << io::format_double(record.train_loss) << '\t'
          << (record.val_metric ? io::format_double(*record.val_metric) : "NA") << '\n';
    }
  }

  std::cout << "input_dim\t" << model.pipeline.width() << "\n"
            << "epochs\t" << result.history.stopped_epoch << "\n"
            << "best_epoch\t" << result.history.best_epoch << "\n";
  if (!result.history.epochs.empty() && result.history.best_epoch > 0) {
    const auto& best = result.history.epochs[result.history.best_epoch - 1];
    if (best.val_metric) std::cout << "best_val_auc\t" << io::format_double(*best.val_metric) << "\n";
  }
  return kExitOk;
}

struct PredictOptions {
  std::string model_path;
  CompoundArgs compounds;
  RefArgs refs;
  std::string descriptors_path;
  std::string out;
};

int cmd_predict(const PredictOptions& opt) {
  const auto model = io::read_model(opt.model_path);
  const auto loaded = load_compounds(opt.compounds);
  const auto refs = load_refs(opt.refs, model.pipeline.ecfp_radius);

  std::optional<data::ExternalDescriptors> external;
  if (!opt.descriptors_path.empty()) {
    std::vector<std::string> ids;
    for (const auto& record : loaded.records) ids.push_back(record.id);
    external = io::read_descriptor_file(opt.descriptors_path, ids);
  }
  const auto matrix = io::featurize_with_pipeline(loaded.records, refs, model.pipeline,
                                                  external ? &*external : nullptr);
  const auto rows = every_row(matrix.rows());
  const auto probs = net::predict(model.network, matrix, &model.pipeline.scheme, rows);

  std::vector<std::string> ids;
  for (const auto& record : loaded.records) ids.push_back(record.id);
  io::write_predictions(opt.out, ids, model.task_names, probs);
  std::cout << "predictions\t" << ids.size() * model.task_names.size() << "\n";
  return kExitOk;
}

struct EvalOptions {
  std::string predictions_path;
  CompoundArgs compounds;
  std::string out;
  std::string stats_out;
};

int cmd_eval(const EvalOptions& opt) {
  if (opt.predictions_path.empty() && opt.stats_out.empty()) {
    throw CLI::ValidationError("eval", "need --predictions and/or --stats-out");
  }
  const auto loaded = load_compounds(opt.compounds);
  data::LabelMatrix labels(loaded.records.size(), loaded.task_names);
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    for (std::size_t t = 0; t < loaded.task_names.size(); ++t) {
      labels.set(i, t, loaded.records[i].labels[t]);
    }
  }

  if (!opt.stats_out.empty()) {
    io::write_dataset_stats(opt.stats_out, eval::dataset_stats(labels), loaded.task_names);
  }

  if (!opt.predictions_path.empty()) {
    if (opt.out.empty()) throw CLI::ValidationError("eval", "--predictions needs --out");
    const auto preds = io::read_predictions(opt.predictions_path);

    // align prediction rows/columns with the compound file by id and name
    std::unordered_map<std::string, std::size_t> pred_row, pred_col;
    for (std::size_t i = 0; i < preds.compound_ids.size(); ++i) {
      pred_row[preds.compound_ids[i]] = i;
    }
    for (std::size_t t = 0; t < preds.task_names.size(); ++t) pred_col[preds.task_names[t]] = t;

    Eigen::MatrixXd scores(loaded.records.size(), loaded.task_names.size());
    scores.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
      const auto row = pred_row.find(loaded.records[i].id);
      if (row == pred_row.end()) {
        throw Error("no prediction for compound '" + loaded.records[i].id + "'");
      }
      for (std::size_t t = 0; t < loaded.task_names.size(); ++t) {
        const auto col = pred_col.find(loaded.task_names[t]);
        if (col == pred_col.end()) {
          throw Error("no predictions for task '" + loaded.task_names[t] + "'");
        }
        scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
            preds.probabilities(static_cast<Eigen::Index>(row->second),
                                static_cast<Eigen::Index>(col->second));
      }
    }
    const auto task_scores = eval::score_tasks(scores, labels, every_row(labels.rows()));
    io::write_task_scores(opt.out, task_scores);
    for (const auto& score : task_scores) {
      std::cout << score.task << '\t'
                << (score.auc ? io::format_double(*score.auc) : "NA") << "\n";
    }
  }
  return kExitOk;
}

struct SearchOptions {
  CompoundArgs compounds;
  RefArgs refs;
  std::string folds_path;
  std::string space_path;
  std::string preset = "desk";
  std::optional<std::size_t> sample;
  int batch_size = 512;
  int max_epochs = 0;  // 0: preset default
  int patience = 10;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string best_out;
};

int cmd_search(const SearchOptions& opt) {
  const auto loaded = load_compounds(opt.compounds);
  const auto refs = load_refs(opt.refs, opt.compounds.radius);
  // assemble every family; per-config selection happens fold by fold
  auto families = hyper::kFamilyEcfp | hyper::kFamilyDescriptors;
  if (!refs.empty()) families |= hyper::kFamilyRefSim;
  const auto dataset = data::assemble(loaded.records, loaded.task_names, refs,
                                      feature_config(families, opt.compounds.radius));
  const auto assignment = io::read_folds(opt.folds_path, dataset.compound_ids);

  hyper::SearchSpace space;
  if (!opt.space_path.empty()) {
    space = hyper::load_search_space(opt.space_path);
  } else if (opt.preset == "desk") {
    space = hyper::SearchSpace::desk_scale();
  } else {
    space = hyper::SearchSpace::full();
  }
  if (refs.empty()) {
    // similarity families are not available without reference files
    std::vector<std::uint8_t> kept;
    for (auto mask : space.families) {
      if (!(mask & hyper::kFamilyRefSim)) kept.push_back(mask);
    }
    if (kept.empty()) throw Error("search space needs similarity features but no --tox-refs given");
    space.families = kept;
  }

  hyper::TrainLimits limits;
  limits.batch_size = opt.batch_size;
  limits.max_epochs = opt.max_epochs > 0 ? opt.max_epochs : (opt.preset == "desk" ? 30 : 200);
  limits.patience = opt.patience;

  const auto result = hyper::run_search(dataset, assignment, space, limits, opt.seed,
                                        resolve_threads(opt.threads), opt.sample);
  io::write_search_table(opt.out, result.evaluations, loaded.task_names);
  if (!opt.best_out.empty()) {
    io::write_best_configs(opt.best_out, result, loaded.task_names);
  }
  for (std::size_t t = 0; t < loaded.task_names.size(); ++t) {
    std::cout << loaded.task_names[t] << '\t';
    if (result.per_task[t].config_index) {
      std::cout << *result.per_task[t].config_index << '\t'
                << io::format_double(result.per_task[t].mean_auc) << "\n";
    } else {
      std::cout << "NA\tNA\n";
    }
  }
  return kExitOk;
}

struct CompareOptions {
  CompoundArgs compounds;
  RefArgs refs;
  std::string folds_path;
  std::string families = "auto";
  std::string normalization = "tanh";
  int sparseness = 5;
  int hidden_units = 32;
  int layers = 1;
  double learning_rate = 0.1;
  bool dropout = false;
  double l2 = 0.0;
  int batch_size = 512;
  int max_epochs = 30;
  int patience = 10;
  int restarts = 5;
  std::vector<std::string> tasks;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string json_out;
};

int cmd_compare(const CompareOptions& opt) {
  const auto loaded = load_compounds(opt.compounds);
  const auto refs = load_refs(opt.refs, opt.compounds.radius);
  const auto families = resolve_families(opt.families, !refs.empty());
  const auto dataset = data::assemble(loaded.records, loaded.task_names, refs,
                                      feature_config(families, opt.compounds.radius));
  const auto assignment = io::read_folds(opt.folds_path, dataset.compound_ids);

  eval::CompareSpec spec;
  spec.st_arch.hidden.assign(opt.layers, opt.hidden_units);
  spec.mt_arch = spec.st_arch;
  spec.config.learning_rate = opt.learning_rate;
  spec.config.l2 = opt.l2;
  if (opt.dropout) spec.config.dropout = net::DropoutSpec{};
  spec.config.batch_size = opt.batch_size;
  spec.config.max_epochs = opt.max_epochs;
  spec.config.patience = opt.patience;
  spec.config.seed = opt.seed;
  spec.preprocess.use_ecfp = families & hyper::kFamilyEcfp;
  spec.preprocess.use_reference_similarity = families & hyper::kFamilyRefSim;
  spec.preprocess.use_descriptors = families & hyper::kFamilyDescriptors;
  spec.preprocess.sparseness_threshold =
      spec.preprocess.use_ecfp ? std::optional<int>(opt.sparseness) : std::nullopt;
  spec.preprocess.normalization = data::norm_kind_from_string(opt.normalization);
  spec.restarts = opt.restarts;
  spec.alpha = opt.alpha;
  spec.threads = resolve_threads(opt.threads);
  for (const auto& name : opt.tasks) {
    const auto it =
        std::find(loaded.task_names.begin(), loaded.task_names.end(), name);
    if (it == loaded.task_names.end()) throw Error("unknown task '" + name + "'");
    spec.tasks.push_back(static_cast<std::size_t>(it - loaded.task_names.begin()));
  }

  const auto report = eval::compare_st_mt(dataset, assignment, spec);
  io::write_comparison(opt.out, report);

  if (!opt.json_out.empty()) {
    nlohmann::json doc;
    doc["restarts"] = report.restarts;
    doc["alpha"] = opt.alpha;
    doc["tasks"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
      nlohmann::json entry;
      entry["task"] = row.task;
      entry["st_aucs"] = row.st_aucs;
      entry["mt_aucs"] = row.mt_aucs;
      if (row.st_mean) entry["st_mean"] = *row.st_mean;
      if (row.mt_mean) entry["mt_mean"] = *row.mt_mean;
      if (row.p_value) entry["p_value"] = *row.p_value;
      entry["significant"] = row.significant;
      doc["tasks"].push_back(entry);
    }
    std::ofstream out(opt.json_out);
    if (!out) throw Error("cannot open for writing: " + opt.json_out);
    out << doc.dump(2) << "\n";
  }

  for (const auto& row : report.rows) {
    std::cout << row.task << '\t' << (row.st_mean ? io::format_double(*row.st_mean) : "NA")
              << '\t' << (row.mt_mean ? io::format_double(*row.mt_mean) : "NA") << '\t'
              << (row.p_value ? io::format_double(*row.p_value) : "NA")
              << (row.significant ? "\t*" : "") << "\n";
  }
  return kExitOk;
}

struct InterpretOptions {
  std::string model_path;
  CompoundArgs compounds;
  RefArgs refs;
  std::string patterns_path;
  int layer = 1;
  double presence_threshold = interpret::kDefaultPresenceThreshold;
  std::size_t top_q = 20;
  std::string out;
  std::string trend_out;
  int threads = 0;
};

int cmd_interpret(const InterpretOptions& opt) {
  const auto model = io::read_model(opt.model_path);
  const auto loaded = load_compounds(opt.compounds);
  const auto refs = load_refs(opt.refs, model.pipeline.ecfp_radius);
  const auto patterns =
      fp::load_reference_set(opt.patterns_path, "patterns", model.pipeline.ecfp_radius);

  const auto matrix = io::featurize_with_pipeline(loaded.records, refs, model.pipeline);
  const auto rows = every_row(matrix.rows());
  const auto fps = compound_fingerprints(loaded.records, model.pipeline.ecfp_radius,
                                         resolve_threads(opt.threads));
  const auto presence = interpret::pattern_presence(fps, patterns, opt.presence_threshold);

  std::vector<std::string> ids;
  for (const auto& record : loaded.records) ids.push_back(record.id);

  const int n_hidden = model.network.hidden_layers();
  if (opt.layer < 1 || opt.layer > n_hidden) {
    throw Error("--layer out of range: model has " + std::to_string(n_hidden) +
                " hidden layers");
  }
  const auto activations = interpret::hidden_activations(
      model.network, matrix, &model.pipeline.scheme, rows, opt.layer);
  const auto correlations =
      interpret::correlate_units(activations, presence, patterns, ids, opt.layer);
  io::write_unit_correlations(opt.out, correlations);

  if (!opt.trend_out.empty()) {
    if (n_hidden < 2) throw Error("--trend needs a model with at least two hidden layers");
    std::vector<std::vector<interpret::UnitCorrelation>> per_layer;
    for (int layer = 1; layer <= n_hidden; ++layer) {
      const auto acts = interpret::hidden_activations(model.network, matrix,
                                                      &model.pipeline.scheme, rows, layer);
      per_layer.push_back(
          interpret::correlate_units(acts, presence, patterns, ids, layer));
    }
    io::write_layer_trend(opt.trend_out, interpret::layer_trend(per_layer, opt.top_q));
  }

  const std::size_t shown = std::min<std::size_t>(5, correlations.size());
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& uc = correlations[i];
    std::cout << "layer " << uc.layer << " unit " << uc.unit << " ~ " << uc.pattern_id << "\t"
              << io::format_double(uc.correlation) << "\tp_adj "
              << io::format_double(uc.p_adjusted) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxnet: multi-task toxicity prediction pipeline"};
  app.require_subcommand(1);

  FeaturizeOptions featurize;
  auto* cmd_f = app.add_subcommand("featurize", "compute the sparse feature matrix");
  add_compound_args(cmd_f, featurize.compounds);
  add_ref_args(cmd_f, featurize.refs);
  cmd_f->add_option("--families", featurize.families,
                    "feature families, e.g. ecfp+refsim+descriptors (default: auto)");
  cmd_f->add_option("--descriptors", featurize.descriptors_path,
                    "external descriptor table (TSV, empty cell = missing)");
  int sparseness_flag = 0;
  cmd_f->add_option("--sparseness", sparseness_flag,
                    "drop ecfp features present in fewer compounds");
  cmd_f->add_option("--out", featurize.out, "output matrix file")->required();
  cmd_f->add_option("--catalog", featurize.catalog_out, "output column catalog (TSV)");

  SplitOptions split;
  auto* cmd_s = app.add_subcommand("split", "clustered cross-validation folds");
  add_compound_args(cmd_s, split.compounds);
  cmd_s->add_option("--threshold", split.threshold, "single-linkage Tanimoto threshold");
  cmd_s->add_option("--k", split.k, "fold count");
  cmd_s->add_option("--min-tasks", split.min_tasks,
                    "labels required for eval-fold eligibility");
  cmd_s->add_option("--threads", split.threads, "worker threads (0 = all cores)");
  cmd_s->add_option("--out", split.out, "output folds file")->required();

  TrainOptions train;
  auto* cmd_t = app.add_subcommand("train", "train a multi-task network");
  add_compound_args(cmd_t, train.compounds);
  add_ref_args(cmd_t, train.refs);
  cmd_t->add_option("--families", train.families, "feature families (default: auto)");
  cmd_t->add_option("--descriptors", train.descriptors_path, "external descriptor table");
  cmd_t->add_option("--folds", train.folds_path, "folds file for validation split");
  cmd_t->add_option("--val-fold", train.val_fold, "fold held out for early stopping");
  cmd_t->add_option("--normalization", train.normalization,
                    "standard-deviation | tanh | sqrt");
  cmd_t->add_option("--sparseness", train.sparseness, "ecfp sparseness threshold");
  cmd_t->add_option("--hidden-units", train.hidden_units, "units per hidden layer");
  cmd_t->add_option("--layers", train.layers, "hidden layer count");
  cmd_t->add_option("--lr", train.learning_rate, "SGD learning rate");
  cmd_t->add_flag("--dropout", train.dropout, "50% hidden / 20% input dropout");
  cmd_t->add_option("--l2", train.l2, "L2 weight decay");
  cmd_t->add_option("--batch-size", train.batch_size, "mini-batch size");
  cmd_t->add_option("--max-epochs", train.max_epochs, "epoch cap");
  cmd_t->add_option("--patience", train.patience, "early-stopping patience");
  cmd_t->add_option("--seed", train.seed, "RNG seed");
  cmd_t->add_option("--out", train.out, "output model file")->required();
  cmd_t->add_option("--history", train.history_out, "per-epoch history (TSV)");

  PredictOptions predict;
  auto* cmd_p = app.add_subcommand("predict", "score compounds with a trained model");
  cmd_p->add_option("--model", predict.model_path, "model file")->required();
  add_compound_args(cmd_p, predict.compounds);
  add_ref_args(cmd_p, predict.refs);
  cmd_p->add_option("--descriptors", predict.descriptors_path, "external descriptor table");
  cmd_p->add_option("--out", predict.out, "output predictions (TSV)")->required();

  EvalOptions evaluate;
  auto* cmd_e = app.add_subcommand("eval", "per-task AUC report and dataset statistics");
  cmd_e->add_option("--predictions", evaluate.predictions_path, "predictions file");
  add_compound_args(cmd_e, evaluate.compounds);
  cmd_e->add_option("--out", evaluate.out, "output metric report (TSV)");
  cmd_e->add_option("--stats-out", evaluate.stats_out,
                    "label histogram + inter-task correlation report");

  SearchOptions search;
  auto* cmd_g = app.add_subcommand("search", "hyperparameter grid search");
  add_compound_args(cmd_g, search.compounds);
  add_ref_args(cmd_g, search.refs);
  cmd_g->add_option("--folds", search.folds_path, "folds file")->required();
  cmd_g->add_option("--space", search.space_path, "search space file");
  cmd_g->add_option("--preset", search.preset, "desk | full (when no --space)")
      ->check(CLI::IsMember({"desk", "full"}));
  std::size_t sample_flag = 0;
  cmd_g->add_option("--sample", sample_flag, "evaluate only m seeded-random configs");
  cmd_g->add_option("--batch-size", search.batch_size, "mini-batch size");
  cmd_g->add_option("--max-epochs", search.max_epochs, "epoch cap (0 = preset default)");
  cmd_g->add_option("--patience", search.patience, "early-stopping patience");
  cmd_g->add_option("--seed", search.seed, "RNG seed");
  cmd_g->add_option("--threads", search.threads, "worker threads (0 = all cores)");
  cmd_g->add_option("--out", search.out, "per-config per-fold per-task AUC table")->required();
  cmd_g->add_option("--best", search.best_out, "per-task best-config table");

  CompareOptions compare;
  auto* cmd_c = app.add_subcommand("compare", "single-task vs multi-task comparison");
  add_compound_args(cmd_c, compare.compounds);
  add_ref_args(cmd_c, compare.refs);
  cmd_c->add_option("--folds", compare.folds_path, "folds file")->required();
  cmd_c->add_option("--families", compare.families, "feature families (default: auto)");
  cmd_c->add_option("--normalization", compare.normalization,
                    "standard-deviation | tanh | sqrt");
  cmd_c->add_option("--sparseness", compare.sparseness, "ecfp sparseness threshold");
  cmd_c->add_option("--hidden-units", compare.hidden_units, "units per hidden layer");
  cmd_c->add_option("--layers", compare.layers, "hidden layer count");
  cmd_c->add_option("--lr", compare.learning_rate, "SGD learning rate");
  cmd_c->add_flag("--dropout", compare.dropout, "enable dropout");
  cmd_c->add_option("--l2", compare.l2, "L2 weight decay");
  cmd_c->add_option("--batch-size", compare.batch_size, "mini-batch size");
  cmd_c->add_option("--max-epochs", compare.max_epochs, "epoch cap");
  cmd_c->add_option("--patience", compare.patience, "early-stopping patience");
  cmd_c->add_option("--restarts", compare.restarts, "random restarts per arm");
  cmd_c->add_option("--tasks", compare.tasks, "restrict to these task names");
  cmd_c->add_option("--alpha", compare.alpha, "significance level");
  cmd_c->add_option("--seed", compare.seed, "base RNG seed");
  cmd_c->add_option("--threads", compare.threads, "worker threads (0 = all cores)");
  cmd_c->add_option("--out", compare.out, "comparison table (TSV)")->required();
  cmd_c->add_option("--json", compare.json_out, "machine-readable comparison report");

  InterpretOptions interp;
  auto* cmd_i = app.add_subcommand("interpret", "correlate hidden units with patterns");
  cmd_i->add_option("--model", interp.model_path, "model file")->required();
  add_compound_args(cmd_i, interp.compounds);
  add_ref_args(cmd_i, interp.refs);
  cmd_i->add_option("--patterns", interp.patterns_path,
                    "reference patterns to correlate against")->required();
  cmd_i->add_option("--layer", interp.layer, "hidden layer (1-based)");
  cmd_i->add_option("--presence-threshold", interp.presence_threshold,
                    "Tanimoto cutoff for pattern presence");
  cmd_i->add_option("--top-q", interp.top_q, "pairs per layer used in the trend table");
  cmd_i->add_option("--threads", interp.threads, "worker threads (0 = all cores)");
  cmd_i->add_option("--out", interp.out, "correlation report (TSV)")->required();
  cmd_i->add_option("--trend", interp.trend_out, "per-layer trend summary (TSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_f->parsed()) {
      if (cmd_f->count("--sparseness")) featurize.sparseness = sparseness_flag;
      return cmd_featurize(featurize);
    }
    if (cmd_s->parsed()) return cmd_split(split);
    if (cmd_t->parsed()) return cmd_train(train);
    if (cmd_p->parsed()) return cmd_predict(predict);
    if (cmd_e->parsed()) return cmd_eval(evaluate);
    if (cmd_g->parsed()) {
      if (cmd_g->count("--sample")) search.sample = sample_flag;
      return cmd_search(search);
    }
    if (cmd_c->parsed()) return cmd_compare(compare);
    if (cmd_i->parsed()) return cmd_interpret(interp);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
