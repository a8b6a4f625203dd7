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

#include "toxnet/fingerprint.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "toxnet/hash.hpp"

namespace toxnet::fp {

SparseCountVector::SparseCountVector(std::vector<Entry> sorted_entries)
    : entries_(std::move(sorted_entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].second == 0) throw Error("SparseCountVector: zero count");
    if (i > 0 && entries_[i - 1].first >= entries_[i].first) {
      throw Error("SparseCountVector: ids not strictly ascending");
    }
  }
}

void SparseCountVector::increment(std::uint64_t id, std::uint32_t by) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Entry& e, std::uint64_t v) { return e.first < v; });
  if (it != entries_.end() && it->first == id) {
    it->second += by;
  } else {
    entries_.insert(it, {id, by});
  }
}

std::uint32_t SparseCountVector::count_of(std::uint64_t id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Entry& e, std::uint64_t v) { return e.first < v; });
  return (it != entries_.end() && it->first == id) ? it->second : 0;
}

namespace {

std::uint64_t initial_invariant(const smiles::Atom& atom) {
  const auto info = smiles::element_info(atom.element);
  StableHash h;
  h.byte(0x01);  // tag: radius-0 atom invariant
  h.u64(info ? static_cast<std::uint64_t>(info->atomic_number) : 0);
  h.u64(static_cast<std::uint64_t>(atom.degree));
  h.u64(static_cast<std::uint64_t>(atom.total_h()));
  h.i64(atom.formal_charge);
  h.byte(atom.aromatic ? 1 : 0);
  h.byte(atom.in_ring ? 1 : 0);
  return h.digest();
}

std::uint64_t iterate_invariant(std::uint64_t previous,
                                const std::vector<std::pair<int, std::uint64_t>>& neighbors) {
  StableHash h;
  h.byte(0x02);  // tag: iterated environment
  h.u64(previous);
  h.u64(neighbors.size());
  for (const auto& [code, id] : neighbors) {
    h.u64(static_cast<std::uint64_t>(code));
    h.u64(id);
  }
  return h.digest();
}

}  // namespace

SparseCountVector ecfp(const smiles::MolecularGraph& graph, int radius) {
  if (radius < 0 || radius > kMaxEcfpRadius) {
    throw Error("ecfp: radius out of range [0, " + std::to_string(kMaxEcfpRadius) + "]");
  }
  const int n = static_cast<int>(graph.atoms.size());
  const auto inc = graph.incidence();

  SparseCountVector result;
  std::vector<std::uint64_t> current(n), next(n);
  // covered[i] = sorted atom indices within the current radius around atom i
  std::vector<std::vector<int>> covered(n), next_covered(n);
  for (int i = 0; i < n; ++i) {
    current[i] = initial_invariant(graph.atoms[i]);
    covered[i] = {i};
    result.increment(current[i]);
  }

  std::vector<std::pair<int, std::uint64_t>> neighbors;
  for (int r = 1; r <= radius; ++r) {
    // atom-set signature -> smallest identifier at this radius
    std::map<std::vector<int>, std::uint64_t> dedup;
    for (int i = 0; i < n; ++i) {
      if (graph.atoms[i].degree == 0) {
        // isolated atoms generate no environments beyond radius 0
        next[i] = current[i];
        next_covered[i] = covered[i];
        continue;
      }
      neighbors.clear();
      std::vector<int> merged = covered[i];
      for (int bi : inc[i]) {
        const auto& bond = graph.bonds[bi];
        const int j = smiles::MolecularGraph::other_end(bond, i);
        neighbors.emplace_back(smiles::bond_order_code(bond.order), current[j]);
        std::vector<int> tmp;
        std::set_union(merged.begin(), merged.end(), covered[j].begin(), covered[j].end(),
                       std::back_inserter(tmp));
        merged.swap(tmp);
      }
      std::sort(neighbors.begin(), neighbors.end());
      next[i] = iterate_invariant(current[i], neighbors);
      next_covered[i] = std::move(merged);

      auto [it, inserted] = dedup.emplace(next_covered[i], next[i]);
      if (!inserted) it->second = std::min(it->second, next[i]);
    }
    for (const auto& [atom_set, id] : dedup) result.increment(id);
    current.swap(next);
    covered.swap(next_covered);
  }
  return result;
}

double tanimoto(const SparseCountVector& a, const SparseCountVector& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t intersection = 0;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  while (ia != a.entries().end() && ib != b.entries().end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      ++intersection;
      ++ia;
      ++ib;
    }
  }
  const std::size_t unions = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

std::vector<double> reference_features(const SparseCountVector& fingerprint,
                                       const ReferenceSet& refs) {
  if (refs.patterns.empty()) throw Error("reference_features: empty reference set");
  std::vector<double> out;
  out.reserve(refs.patterns.size());
  for (const auto& [id, pattern] : refs.patterns) {
    out.push_back(tanimoto(fingerprint, pattern));
  }
  return out;
}

ReferenceSet load_reference_set(const std::string& path, const std::string& name, int radius) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open reference set file: " + path);
  ReferenceSet set;
  set.name = name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected pattern_id<TAB>SMILES");
    }
    std::string id = line.substr(0, tab);
    std::string smiles_text = line.substr(tab + 1);
    for (const auto& [existing, fp] : set.patterns) {
      if (existing == id) {
        throw Error(path + ":" + std::to_string(line_no) + ": duplicate pattern id '" + id + "'");
      }
    }
    try {
      set.patterns.emplace_back(std::move(id), ecfp(smiles::parse_smiles(smiles_text), radius));
    } catch (const SmilesParseError& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return set;
}

std::vector<bool> sparsity_filter(const std::vector<std::size_t>& nonzero_compound_counts,
                                  int threshold) {
  if (threshold <= 0) throw Error("sparsity_filter: threshold must be positive");
  std::vector<bool> keep(nonzero_compound_counts.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    keep[j] = nonzero_compound_counts[j] >= static_cast<std::size_t>(threshold);
  }
  return keep;
}

}  // namespace toxnet::fp
