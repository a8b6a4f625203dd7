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

#include "toxnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "toxnet/hash.hpp"
#include "toxnet/parallel.hpp"

namespace toxnet::eval {

namespace {

/// Midranks (1-based, ties averaged) of the given values.
std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::int8_t> labels) {
  if (scores.size() != labels.size()) throw Error("auc: scores/labels length mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (std::int8_t label : labels) {
    if (label == 1) {
      ++n_pos;
    } else if (label == 0) {
      ++n_neg;
    } else {
      throw Error("auc: labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClassError("auc: need at least one positive and one negative");
  }
  const std::vector<double> ranks = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> try_auc(std::span<const double> scores,
                              std::span<const std::int8_t> labels) {
  try {
    return auc(scores, labels);
  } catch (const SingleClassError&) {
    return std::nullopt;
  }
}

std::optional<double> mean_task_auc(const Eigen::MatrixXd& scores,
                                    const data::LabelMatrix& labels,
                                    std::span<const std::size_t> rows) {
  if (static_cast<std::size_t>(scores.rows()) != rows.size() ||
      static_cast<std::size_t>(scores.cols()) != labels.tasks()) {
    throw Error("mean_task_auc: shape mismatch");
  }
  double sum = 0.0;
  std::size_t defined = 0;
  std::vector<double> task_scores;
  std::vector<std::int8_t> task_labels;
  for (std::size_t t = 0; t < labels.tasks(); ++t) {
    task_scores.clear();
    task_labels.clear();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (labels.present(rows[k], t)) {
        task_scores.push_back(scores(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)));
        task_labels.push_back(labels.at(rows[k], t));
      }
    }
    if (const auto value = try_auc(task_scores, task_labels)) {
      sum += *value;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return sum / static_cast<double>(defined);
}

double mann_whitney_two_sided(std::span<const double> sample_a,
                              std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty()) {
    throw Error("mann_whitney_two_sided: empty sample");
  }
  const std::size_t na = sample_a.size();
  const std::size_t nb = sample_b.size();
  const std::size_t n = na + nb;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), sample_a.begin(), sample_a.end());
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  const std::vector<double> ranks = midranks(pooled);

  // doubled ranks are integers even with ties, so deviations compare exactly
  std::vector<std::int64_t> rank2(n);
  for (std::size_t i = 0; i < n; ++i) rank2[i] = std::llround(2.0 * ranks[i]);

  std::int64_t r2_a = 0;
  for (std::size_t i = 0; i < na; ++i) r2_a += rank2[i];
  const std::int64_t u2_obs = r2_a - static_cast<std::int64_t>(na * (na + 1));
  const std::int64_t mu2 = static_cast<std::int64_t>(na) * static_cast<std::int64_t>(nb);
  const std::int64_t dev_obs = std::llabs(u2_obs - mu2);

  if (n <= kExactMannWhitneyLimit) {
    // enumerate all labelings: which positions belong to sample a
    std::vector<std::size_t> combo(na);
    std::iota(combo.begin(), combo.end(), 0);
    std::uint64_t total = 0, extreme = 0;
    for (;;) {
      std::int64_t r2 = 0;
      for (std::size_t idx : combo) r2 += rank2[idx];
      const std::int64_t u2 = r2 - static_cast<std::int64_t>(na * (na + 1));
      ++total;
      if (std::llabs(u2 - mu2) >= dev_obs) ++extreme;

      // next combination in lexicographic order
      std::size_t i = na;
      while (i > 0 && combo[i - 1] == n - na + i - 1) --i;
      if (i == 0) break;
      ++combo[i - 1];
      for (std::size_t j = i; j < na; ++j) combo[j] = combo[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
  }

  // normal approximation with tie correction and continuity correction
  double tie_term = 0.0;
  {
    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double dn = static_cast<double>(n);
  const double variance = (static_cast<double>(na) * static_cast<double>(nb) / 12.0) *
                          ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (variance <= 0.0) return 1.0;  // every observation tied
  const double z = std::max(0.0, (static_cast<double>(dev_obs) / 2.0 - 0.5)) / std::sqrt(variance);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

std::vector<TaskScore> score_tasks(const Eigen::MatrixXd& scores,
                                   const data::LabelMatrix& labels,
                                   std::span<const std::size_t> rows) {
  if (static_cast<std::size_t>(scores.rows()) != rows.size() ||
      static_cast<std::size_t>(scores.cols()) != labels.tasks()) {
    throw Error("score_tasks: shape mismatch");
  }
  std::vector<TaskScore> out;
  out.reserve(labels.tasks());
  std::vector<double> task_scores;
  std::vector<std::int8_t> task_labels;
  for (std::size_t t = 0; t < labels.tasks(); ++t) {
    task_scores.clear();
    task_labels.clear();
    TaskScore score;
    score.task = labels.task_names()[t];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (!labels.present(rows[k], t)) continue;
      task_scores.push_back(scores(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)));
      task_labels.push_back(labels.at(rows[k], t));
      if (labels.at(rows[k], t) == 1) {
        ++score.n_pos;
      } else {
        ++score.n_neg;
      }
    }
    score.auc = try_auc(task_scores, task_labels);
    out.push_back(std::move(score));
  }
  return out;
}

namespace {

/// Out-of-fold AUC per task for one restart of one arm.
struct PooledPrediction {
  std::vector<double> score;
  std::vector<std::int8_t> label;
};

}  // namespace

ComparisonReport compare_st_mt(const data::Dataset& dataset,
                               const folds::FoldAssignment& fold_assignment,
                               const CompareSpec& spec) {
  if (spec.restarts < 2) throw Error("compare_st_mt: need at least 2 restarts");
  const std::size_t n_tasks = dataset.labels.tasks();
  std::vector<std::size_t> tasks = spec.tasks;
  if (tasks.empty()) {
    tasks.resize(n_tasks);
    std::iota(tasks.begin(), tasks.end(), 0);
  }
  const int k = fold_assignment.k;

  // per-fold preprocessing, fitted on the training side only
  struct FoldData {
    data::SparseFeatureMatrix matrix;
    data::NormalizationScheme scheme;
    std::vector<std::size_t> train_rows, eval_rows;
  };
  std::vector<FoldData> fold_data(k);
  for (int f = 0; f < k; ++f) {
    fold_data[f].train_rows = fold_assignment.train_rows(f);
    fold_data[f].eval_rows = fold_assignment.eval_rows(f);
    const auto fitted =
        data::fit_preprocess(dataset.features, fold_data[f].train_rows, spec.preprocess);
    fold_data[f].matrix = data::apply_preprocess(dataset.features, fitted);
    fold_data[f].scheme = fitted.scheme;
  }

  // job grid: MT = (restart, fold); ST = (task, restart, fold)
  struct Job {
    bool multi_task;
    std::size_t task;  // unused for MT
    int restart;
    int fold;
  };
  std::vector<Job> jobs;
  for (int r = 0; r < spec.restarts; ++r) {
    for (int f = 0; f < k; ++f) jobs.push_back({true, 0, r, f});
  }
  for (std::size_t t : tasks) {
    for (int r = 0; r < spec.restarts; ++r) {
      for (int f = 0; f < k; ++f) jobs.push_back({false, t, r, f});
    }
  }

  // results[job] = predictions over that fold's eval rows
  std::vector<Eigen::MatrixXd> predictions(jobs.size());
  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const FoldData& fold = fold_data[job.fold];
    net::TrainConfig config = spec.config;
    data::LabelMatrix labels =
        job.multi_task ? dataset.labels : dataset.labels.task_column(job.task);
    config.seed = derive_seed(spec.config.seed, job.multi_task ? 0x6d74 : 0x7374 + job.task,
                              static_cast<std::uint64_t>(job.restart),
                              static_cast<std::uint64_t>(job.fold));
    // fixed epoch budget, no validation snapshot: the held-out fold is used
    // for scoring only and never influences the parameters
    const auto result = net::train(fold.matrix, &fold.scheme, labels, fold.train_rows, {},
                                   job.multi_task ? spec.mt_arch : spec.st_arch, config);
    predictions[j] = net::predict(result.network, fold.matrix, &fold.scheme, fold.eval_rows);
  });

  // pool out-of-fold predictions per (arm, task, restart) and compute AUCs
  auto pooled_auc = [&](std::size_t task, int restart, bool multi_task) -> std::optional<double> {
    PooledPrediction pool;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const Job& job = jobs[j];
      if (job.multi_task != multi_task || job.restart != restart) continue;
      if (!multi_task && job.task != task) continue;
      const auto& eval_rows = fold_data[job.fold].eval_rows;
      const Eigen::Index col = multi_task ? static_cast<Eigen::Index>(task) : 0;
      for (std::size_t e = 0; e < eval_rows.size(); ++e) {
        if (!dataset.labels.present(eval_rows[e], task)) continue;
        pool.score.push_back(predictions[j](static_cast<Eigen::Index>(e), col));
        pool.label.push_back(dataset.labels.at(eval_rows[e], task));
      }
    }
    return try_auc(pool.score, pool.label);
  };

  ComparisonReport report;
  report.restarts = spec.restarts;
  for (std::size_t t : tasks) {
    ComparisonRow row;
    row.task = dataset.labels.task_names()[t];
    bool defined = true;
    for (int r = 0; r < spec.restarts; ++r) {
      const auto st = pooled_auc(t, r, false);
      const auto mt = pooled_auc(t, r, true);
      if (!st || !mt) {
        defined = false;
        break;
      }
      row.st_aucs.push_back(*st);
      row.mt_aucs.push_back(*mt);
    }
    if (defined) {
      row.st_mean = std::accumulate(row.st_aucs.begin(), row.st_aucs.end(), 0.0) / spec.restarts;
      row.mt_mean = std::accumulate(row.mt_aucs.begin(), row.mt_aucs.end(), 0.0) / spec.restarts;
      row.p_value = mann_whitney_two_sided(row.st_aucs, row.mt_aucs);
      row.significant = *row.p_value <= spec.alpha;
    } else {
      row.st_aucs.clear();
      row.mt_aucs.clear();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

DatasetStats dataset_stats(const data::LabelMatrix& labels) {
  const std::size_t n = labels.rows();
  const std::size_t t_count = labels.tasks();
  DatasetStats stats;
  stats.labels_per_compound.assign(t_count + 1, 0);
  for (std::size_t i = 0; i < n; ++i) ++stats.labels_per_compound[labels.labeled_count(i)];

  stats.abs_correlation =
      Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(t_count),
                                static_cast<Eigen::Index>(t_count),
                                std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < t_count; ++s) {
    for (std::size_t t = s; t < t_count; ++t) {
      double sum_a = 0, sum_b = 0, sum_ab = 0, sum_a2 = 0, sum_b2 = 0;
      std::size_t common = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!labels.present(i, s) || !labels.present(i, t)) continue;
        const double a = labels.at(i, s);
        const double b = labels.at(i, t);
        sum_a += a;
        sum_b += b;
        sum_ab += a * b;
        sum_a2 += a * a;
        sum_b2 += b * b;
        ++common;
      }
      if (common < 2) continue;
      const double dc = static_cast<double>(common);
      const double cov = sum_ab / dc - (sum_a / dc) * (sum_b / dc);
      const double var_a = sum_a2 / dc - (sum_a / dc) * (sum_a / dc);
      const double var_b = sum_b2 / dc - (sum_b / dc) * (sum_b / dc);
      if (var_a <= 0.0 || var_b <= 0.0) continue;
      const double corr = std::abs(cov / std::sqrt(var_a * var_b));
      stats.abs_correlation(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = corr;
      stats.abs_correlation(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = corr;
    }
  }
  return stats;
}

}  // namespace toxnet::eval
