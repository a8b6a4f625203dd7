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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toxnet/errors.hpp"

namespace toxnet::smiles {

enum class BondOrder : std::uint8_t {
  Single = 1,
  Double = 2,
  Triple = 3,
  Aromatic = 4,
};

/// Numeric code used when hashing bond orders into fingerprints.
inline int bond_order_code(BondOrder o) { return static_cast<int>(o); }

struct Atom {
  std::string element;          // symbol as written, e.g. "C", "Cl"
  bool aromatic = false;
  int formal_charge = 0;
  std::optional<int> explicit_h;  // from a bracket H-count
  int implicit_h = 0;             // derived; 0 whenever explicit_h is set
  int degree = 0;                 // number of incident bonds
  bool in_ring = false;
  int isotope = 0;                // parsed and otherwise ignored

  int total_h() const { return explicit_h ? *explicit_h : implicit_h; }
};

struct Bond {
  int a = 0;  // atom indices, a < never enforced; endpoints are distinct
  int b = 0;
  BondOrder order = BondOrder::Single;
  bool in_ring = false;
};

/// Annotated molecular graph produced by parse_smiles. Possibly
/// multi-component when the input contained dot-separated fragments.
struct MolecularGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string source_text;

  /// Incident bond indices per atom.
  std::vector<std::vector<int>> incidence() const;

  /// Neighbor atom index across a bond.
  static int other_end(const Bond& bond, int atom) {
    return bond.a == atom ? bond.b : bond.a;
  }
};

// Parses the supported SMILES subset into a molecular graph:
// organic-subset bare atoms (B C N O P S F Cl Br I, aromatic b c n o p s),
// bracket atoms with isotope / charge / H-count, bond symbols - = # :,
// branches, ring closures (digits and %nn), and dot-separated fragments.
// Stereo markers (/ \ @ @@) are accepted and discarded. Implicit hydrogens
// follow the standard valence model (B:3 C:4 N:3 O:2 P:3 S:2 halogens:1);
// bracket atoms get the written H-count, or none, except that charged
// N / O / S without an H-count use the charge-shifted valence.
//
// Errors are reported as SmilesParseError with a character offset.
MolecularGraph parse_smiles(std::string_view text);

/// Connected components as atom-index sets, ordered by descending size,
/// ties by smallest contained atom index.
std::vector<std::vector<int>> atom_components(const MolecularGraph& graph);

/// Graph restricted to a subset of atoms (indices remapped, order kept).
MolecularGraph induced_subgraph(const MolecularGraph& graph,
                                const std::vector<int>& atom_indices);

struct ElementInfo {
  int atomic_number;
  double atomic_mass;
};

/// Lookup in the built-in element table; nullopt for unknown symbols.
std::optional<ElementInfo> element_info(std::string_view symbol);

}  // namespace toxnet::smiles
