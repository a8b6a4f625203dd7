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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "toxnet/smiles.hpp"

namespace toxnet::fp {

/// Sparse feature-id -> count map, stored sorted by ascending id.
/// Counts are strictly positive; zero entries are never stored.
class SparseCountVector {
 public:
  using Entry = std::pair<std::uint64_t, std::uint32_t>;

  SparseCountVector() = default;
  explicit SparseCountVector(std::vector<Entry> sorted_entries);

  void increment(std::uint64_t id, std::uint32_t by = 1);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint32_t count_of(std::uint64_t id) const;

  bool operator==(const SparseCountVector& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
};

// Circular count fingerprint by Morgan-style iteration.
//
// Radius-0 identifier per atom: stable hash of (element, degree, total H
// count, formal charge, aromatic flag, ring flag). At each iteration the
// identifier becomes the stable hash of the previous identifier plus the
// sorted (bond-order code, neighbor previous identifier) pairs. Every
// identifier produced at every radius increments its count, except that
// environments covering the same atom set at the same radius are collapsed
// to the smallest identifier. ECFP4 corresponds to radius 2.
SparseCountVector ecfp(const smiles::MolecularGraph& graph, int radius);

inline constexpr int kEcfp4Radius = 2;
inline constexpr int kMaxEcfpRadius = 10;

/// Binary Tanimoto over the feature-id supports: |A∩B| / |A∪B|.
/// Both-empty is defined as 1.0. Counts are ignored.
double tanimoto(const SparseCountVector& a, const SparseCountVector& b);

/// Named collection of reference patterns (toxicophores, scaffolds, ...)
/// with precomputed fingerprints.
struct ReferenceSet {
  std::string name;
  std::vector<std::pair<std::string, SparseCountVector>> patterns;
};

/// Similarity of a fingerprint to every pattern, in file order.
std::vector<double> reference_features(const SparseCountVector& fingerprint,
                                       const ReferenceSet& refs);

// Parses a reference-set file: one `pattern_id<TAB>SMILES` record per line,
// lines starting with '#' ignored. Pattern ids must be unique. Fingerprints
// are computed at the given radius.
ReferenceSet load_reference_set(const std::string& path, const std::string& name,
                                int radius = kEcfp4Radius);

/// keep[j] = nonzero_compound_counts[j] >= threshold. Threshold must be
/// positive; grid search uses {5, 10, 20}.
std::vector<bool> sparsity_filter(const std::vector<std::size_t>& nonzero_compound_counts,
                                  int threshold);

}  // namespace toxnet::fp
