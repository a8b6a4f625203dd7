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

#include "toxnet/folds.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

namespace toxnet::folds {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<std::size_t> FoldAssignment::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < eval_fold.size(); ++i) {
    if (!eval_fold[i] || *eval_fold[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::eval_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < eval_fold.size(); ++i) {
    if (eval_fold[i] && *eval_fold[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<int> cluster_compounds(const std::vector<fp::SparseCountVector>& fingerprints,
                                   double threshold, int threads) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw Error("cluster_compounds: threshold must be in (0,1)");
  }
  const std::size_t n = fingerprints.size();
  if (n == 0) throw Error("cluster_compounds: empty input");

  // edges are collected per row, then united in a fixed order
  std::vector<std::vector<std::uint32_t>> edges(n);
  auto scan_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (fp::tanimoto(fingerprints[i], fingerprints[j]) >= threshold) {
          edges[i].push_back(static_cast<std::uint32_t>(j));
        }
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (n_threads <= 1) {
    scan_rows(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(scan_rows, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : edges[i]) uf.unite(i, j);
  }

  // relabel components by smallest member index
  std::vector<int> cluster(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    if (cluster[root] < 0) cluster[root] = next++;
    cluster[i] = cluster[root];
  }
  return cluster;
}

FoldAssignment make_folds(const std::vector<int>& cluster_ids, const data::LabelMatrix& labels,
                          int k, int min_tasks) {
  if (k < 2) throw Error("make_folds: k must be at least 2");
  const std::size_t n = cluster_ids.size();
  if (labels.rows() != n) throw Error("make_folds: label row count mismatch");

  FoldAssignment out;
  out.k = k;
  out.cluster_id = cluster_ids;
  out.eval_fold.assign(n, std::nullopt);

  const int n_clusters =
      cluster_ids.empty() ? 0 : *std::max_element(cluster_ids.begin(), cluster_ids.end()) + 1;
  std::vector<std::vector<std::size_t>> eligible(n_clusters);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.labeled_count(i) >= static_cast<std::size_t>(min_tasks)) {
      eligible[cluster_ids[i]].push_back(i);
    }
  }

  std::vector<int> order;
  for (int c = 0; c < n_clusters; ++c) {
    if (!eligible[c].empty()) order.push_back(c);
  }
  if (static_cast<int>(order.size()) < k) {
    throw Error("make_folds: fewer eligible clusters (" + std::to_string(order.size()) +
                ") than folds (" + std::to_string(k) + ")");
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return eligible[a].size() > eligible[b].size();
  });

  std::vector<std::size_t> fold_size(k, 0);
  for (int c : order) {
    int target = 0;
    for (int f = 1; f < k; ++f) {
      if (fold_size[f] < fold_size[target]) target = f;
    }
    fold_size[target] += eligible[c].size();
    for (std::size_t i : eligible[c]) out.eval_fold[i] = target;
  }
  return out;
}

}  // namespace toxnet::folds
