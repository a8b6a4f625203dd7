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

#include "toxnet/hypersearch.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "toxnet/evaluation.hpp"
#include "toxnet/hash.hpp"
#include "toxnet/parallel.hpp"
#include "toxnet/rng.hpp"

namespace toxnet::hyper {

std::string family_label(std::uint8_t families) {
  std::string out;
  auto append = [&out](const char* name) {
    if (!out.empty()) out += '+';
    out += name;
  };
  if (families & kFamilyDescriptors) append("descriptors");
  if (families & kFamilyRefSim) append("refsim");
  if (families & kFamilyEcfp) append("ecfp");
  return out.empty() ? "none" : out;
}

std::uint8_t parse_family_label(const std::string& label) {
  std::uint8_t mask = 0;
  std::stringstream ss(label);
  std::string token;
  while (std::getline(ss, token, '+')) {
    if (token == "descriptors" || token == "molecular-descriptors" || token == "desc") {
      mask |= kFamilyDescriptors;
    } else if (token == "refsim" || token == "tox-and-scaffold-similarities" ||
               token == "similarities") {
      mask |= kFamilyRefSim;
    } else if (token == "ecfp" || token == "ECFP4" || token == "ecfp4") {
      mask |= kFamilyEcfp;
    } else {
      throw Error("unknown feature family token: '" + token + "'");
    }
  }
  if (mask == 0) throw Error("feature family set must be nonempty");
  return mask;
}

std::size_t SearchSpace::cardinality() const {
  return normalization.size() * families.size() * sparseness_threshold.size() *
         hidden_units.size() * layers.size() * learning_rate.size() * dropout.size() * l2.size();
}

SearchSpace SearchSpace::full() {
  SearchSpace s;
  s.normalization = {data::NormKind::StandardDeviation, data::NormKind::Tanh,
                     data::NormKind::Sqrt};
  s.families = {1, 2, 3, 4, 5, 6, 7};
  s.sparseness_threshold = {5, 10, 20};
  s.hidden_units = {1024, 4096, 8192, 16356};
  s.layers = {1, 2, 3};
  s.learning_rate = {0.01, 0.05, 0.1};
  s.dropout = {false, true};
  s.l2 = {0.0, 1e-6, 1e-5, 1e-4};
  return s;
}

SearchSpace SearchSpace::desk_scale() {
  SearchSpace s = full();
  s.hidden_units = {32, 64};
  return s;
}

std::vector<HyperConfig> enumerate_grid(const SearchSpace& space) {
  std::vector<HyperConfig> out;
  out.reserve(space.cardinality());
  for (auto norm : space.normalization) {
    for (auto fam : space.families) {
      for (int thr : space.sparseness_threshold) {
        for (int hidden : space.hidden_units) {
          for (int layers : space.layers) {
            for (double lr : space.learning_rate) {
              for (bool dropout : space.dropout) {
                for (double l2 : space.l2) {
                  out.push_back({norm, fam, thr, hidden, layers, lr, dropout, l2});
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto begin = token.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = token.find_last_not_of(" \t");
    out.push_back(token.substr(begin, end - begin + 1));
  }
  return out;
}

}  // namespace

SearchSpace parse_search_space(std::istream& in) {
  SearchSpace space = SearchSpace::full();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("search space line " + std::to_string(line_no) + ": expected key = values");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const auto values = split_list(line.substr(eq + 1));
    if (values.empty()) throw Error("search space line " + std::to_string(line_no) + ": no values");
    try {
      if (key == "normalization") {
        space.normalization.clear();
        for (const auto& v : values) space.normalization.push_back(data::norm_kind_from_string(v));
      } else if (key == "feature_families") {
        space.families.clear();
        for (const auto& v : values) {
          if (v == "all-nonempty") {
            for (std::uint8_t m = 1; m <= 7; ++m) space.families.push_back(m);
          } else {
            space.families.push_back(parse_family_label(v));
          }
        }
      } else if (key == "sparseness_threshold") {
        space.sparseness_threshold.clear();
        for (const auto& v : values) space.sparseness_threshold.push_back(std::stoi(v));
      } else if (key == "hidden_units") {
        space.hidden_units.clear();
        for (const auto& v : values) space.hidden_units.push_back(std::stoi(v));
      } else if (key == "layers") {
        space.layers.clear();
        for (const auto& v : values) space.layers.push_back(std::stoi(v));
      } else if (key == "learning_rate") {
        space.learning_rate.clear();
        for (const auto& v : values) space.learning_rate.push_back(std::stod(v));
      } else if (key == "dropout") {
        space.dropout.clear();
        for (const auto& v : values) {
          if (v == "on" || v == "yes" || v == "true") {
            space.dropout.push_back(true);
          } else if (v == "off" || v == "no" || v == "false") {
            space.dropout.push_back(false);
          } else {
            throw Error("dropout value must be on/off");
          }
        }
      } else if (key == "l2") {
        space.l2.clear();
        for (const auto& v : values) space.l2.push_back(std::stod(v));
      } else {
        throw Error("unknown search space key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw Error("search space line " + std::to_string(line_no) + ": bad numeric value");
    }
  }
  return space;
}

SearchSpace load_search_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open search space file: " + path);
  return parse_search_space(in);
}

std::vector<std::size_t> sample_config_indices(std::size_t total, std::size_t m,
                                               std::uint64_t seed) {
  if (m >= total) {
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(derive_seed(seed, 0x73616d70));
  // partial Fisher-Yates: fix the first m slots
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(m);
  std::sort(indices.begin(), indices.end());
  return indices;
}

ConfigEvaluation evaluate_config(const HyperConfig& config, std::size_t config_index,
                                 const data::Dataset& dataset,
                                 const folds::FoldAssignment& folds, const TrainLimits& limits,
                                 std::uint64_t seed) {
  ConfigEvaluation eval;
  eval.config_index = config_index;
  eval.config = config;
  const std::size_t n_tasks = dataset.labels.tasks();
  eval.fold_task_auc.assign(folds.k, std::vector<std::optional<double>>(n_tasks));
  eval.fold_errors.assign(folds.k, std::string());

  data::PreprocessSpec pspec;
  pspec.use_descriptors = config.families & kFamilyDescriptors;
  pspec.use_reference_similarity = config.families & kFamilyRefSim;
  pspec.use_ecfp = config.families & kFamilyEcfp;
  pspec.sparseness_threshold =
      pspec.use_ecfp ? std::optional<int>(config.sparseness_threshold) : std::nullopt;
  pspec.normalization = config.normalization;

  for (int f = 0; f < folds.k; ++f) {
    try {
      const auto train_rows = folds.train_rows(f);
      const auto eval_rows = folds.eval_rows(f);
      const auto fitted = data::fit_preprocess(dataset.features, train_rows, pspec);
      const auto matrix = data::apply_preprocess(dataset.features, fitted);

      net::NetSpec arch;
      arch.hidden.assign(config.layers, config.hidden_units);
      net::TrainConfig tc;
      tc.learning_rate = config.learning_rate;
      tc.l2 = config.l2;
      if (config.dropout) tc.dropout = net::DropoutSpec{};
      tc.batch_size = limits.batch_size;
      tc.max_epochs = limits.max_epochs;
      tc.patience = limits.patience;
      tc.seed = derive_seed(seed, 0x636667, config_index, static_cast<std::uint64_t>(f));

      const auto result = net::train(matrix, &fitted.scheme, dataset.labels, train_rows,
                                     eval_rows, arch, tc);
      const auto preds = net::predict(result.network, matrix, &fitted.scheme, eval_rows);
      const auto scores = eval::score_tasks(preds, dataset.labels, eval_rows);
      for (std::size_t t = 0; t < n_tasks; ++t) eval.fold_task_auc[f][t] = scores[t].auc;
    } catch (const Error& e) {
      eval.fold_errors[f] = e.what();
    }
  }
  return eval;
}

SearchResult select_per_task(std::vector<ConfigEvaluation> evaluations, std::size_t n_tasks) {
  std::sort(evaluations.begin(), evaluations.end(),
            [](const ConfigEvaluation& a, const ConfigEvaluation& b) {
              return a.config_index < b.config_index;
            });
  SearchResult result;
  result.per_task.assign(n_tasks, TaskSelection{});
  for (const auto& eval : evaluations) {
    for (std::size_t t = 0; t < n_tasks; ++t) {
      double sum = 0.0;
      std::size_t defined = 0;
      for (const auto& fold : eval.fold_task_auc) {
        if (fold[t]) {
          sum += *fold[t];
          ++defined;
        }
      }
      if (defined == 0) continue;
      const double mean = sum / static_cast<double>(defined);
      TaskSelection& best = result.per_task[t];
      if (!best.config_index || mean > best.mean_auc) {
        best.config_index = eval.config_index;
        best.mean_auc = mean;
      }
    }
  }
  result.evaluations = std::move(evaluations);
  return result;
}

SearchResult run_search(const data::Dataset& dataset, const folds::FoldAssignment& folds,
                        const SearchSpace& space, const TrainLimits& limits, std::uint64_t seed,
                        int threads, std::optional<std::size_t> sample) {
  const auto grid = enumerate_grid(space);
  if (grid.empty()) throw Error("run_search: empty search space");
  std::vector<std::size_t> indices;
  if (sample) {
    indices = sample_config_indices(grid.size(), *sample, seed);
  } else {
    indices.resize(grid.size());
    std::iota(indices.begin(), indices.end(), 0);
  }

  std::vector<ConfigEvaluation> evaluations(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t j) {
    evaluations[j] = evaluate_config(grid[indices[j]], indices[j], dataset, folds, limits, seed);
  });
  return select_per_task(std::move(evaluations), dataset.labels.tasks());
}

}  // namespace toxnet::hyper
