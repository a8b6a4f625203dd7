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

#include "toxnet/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>

namespace toxnet {

const char* to_string(SmilesErrorKind kind) {
  switch (kind) {
    case SmilesErrorKind::EmptyInput: return "EmptyInput";
    case SmilesErrorKind::UnclosedBranch: return "UnclosedBranch";
    case SmilesErrorKind::UnclosedRing: return "UnclosedRing";
    case SmilesErrorKind::UnknownElement: return "UnknownElement";
    case SmilesErrorKind::MalformedBracket: return "MalformedBracket";
  }
  return "Unknown";
}

SmilesParseError::SmilesParseError(SmilesErrorKind kind, std::size_t offset,
                                   const std::string& detail)
    : Error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

}  // namespace toxnet

namespace toxnet::smiles {

namespace {

const std::unordered_map<std::string_view, ElementInfo>& element_table() {
  static const std::unordered_map<std::string_view, ElementInfo> table = {
      {"H", {1, 1.008}},    {"He", {2, 4.003}},   {"Li", {3, 6.94}},
      {"Be", {4, 9.012}},   {"B", {5, 10.81}},    {"C", {6, 12.011}},
      {"N", {7, 14.007}},   {"O", {8, 15.999}},   {"F", {9, 18.998}},
      {"Ne", {10, 20.180}}, {"Na", {11, 22.990}}, {"Mg", {12, 24.305}},
      {"Al", {13, 26.982}}, {"Si", {14, 28.085}}, {"P", {15, 30.974}},
      {"S", {16, 32.06}},   {"Cl", {17, 35.45}},  {"Ar", {18, 39.948}},
      {"K", {19, 39.098}},  {"Ca", {20, 40.078}}, {"Ti", {22, 47.867}},
      {"V", {23, 50.942}},  {"Cr", {24, 51.996}}, {"Mn", {25, 54.938}},
      {"Fe", {26, 55.845}}, {"Co", {27, 58.933}}, {"Ni", {28, 58.693}},
      {"Cu", {29, 63.546}}, {"Zn", {30, 65.38}},  {"Ga", {31, 69.723}},
      {"Ge", {32, 72.630}}, {"As", {33, 74.922}}, {"Se", {34, 78.971}},
      {"Br", {35, 79.904}}, {"Kr", {36, 83.798}}, {"Sr", {38, 87.62}},
      {"Zr", {40, 91.224}}, {"Mo", {42, 95.95}},  {"Ru", {44, 101.07}},
      {"Rh", {45, 102.906}},{"Pd", {46, 106.42}}, {"Ag", {47, 107.868}},
      {"Cd", {48, 112.414}},{"In", {49, 114.818}},{"Sn", {50, 118.710}},
      {"Sb", {51, 121.760}},{"Te", {52, 127.60}}, {"I", {53, 126.904}},
      {"Xe", {54, 131.293}},{"Ba", {56, 137.327}},{"Gd", {64, 157.25}},
      {"W", {74, 183.84}},  {"Pt", {78, 195.084}},{"Au", {79, 196.967}},
      {"Hg", {80, 200.592}},{"Tl", {81, 204.38}}, {"Pb", {82, 207.2}},
      {"Bi", {83, 208.980}},
  };
  return table;
}

int base_valence(std::string_view element) {
  if (element == "B") return 3;
  if (element == "C") return 4;
  if (element == "N") return 3;
  if (element == "O") return 2;
  if (element == "P") return 3;
  if (element == "S") return 2;
  if (element == "F" || element == "Cl" || element == "Br" || element == "I") return 1;
  return -1;
}

[[noreturn]] void fail(SmilesErrorKind kind, std::size_t offset, const std::string& detail) {
  throw SmilesParseError(kind, offset, detail);
}

struct RingHalf {
  int atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  MolecularGraph run() {
    graph_.source_text = std::string(text_);
    while (pos_ < text_.size()) {
      step();
    }
    finish();
    return std::move(graph_);
  }

 private:
  void step() {
    const char c = text_[pos_];
    if (static_cast<unsigned char>(c) >= 0x80) {
      fail(SmilesErrorKind::MalformedBracket, pos_, "non-ASCII byte in input");
    }
    switch (c) {
      case '(': {
        if (prev_ < 0) fail(SmilesErrorKind::MalformedBracket, pos_, "branch before any atom");
        branches_.push_back({prev_, pos_});
        ++pos_;
        return;
      }
      case ')': {
        if (pending_) fail(SmilesErrorKind::MalformedBracket, pending_offset_, "bond before closing branch");
        if (branches_.empty()) fail(SmilesErrorKind::UnclosedBranch, pos_, "unmatched ')'");
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      }
      case '-': set_pending(BondOrder::Single); return;
      case '=': set_pending(BondOrder::Double); return;
      case '#': set_pending(BondOrder::Triple); return;
      case ':': set_pending(BondOrder::Aromatic); return;
      case '/':                       // stereo bonds parse as plain single
      case '\\': set_pending(BondOrder::Single); return;
      case '.': {
        if (pending_) fail(SmilesErrorKind::MalformedBracket, pending_offset_, "bond before fragment dot");
        prev_ = -1;
        ++pos_;
        return;
      }
      case '%': {
        if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
          fail(SmilesErrorKind::MalformedBracket, pos_, "'%' needs two digits");
        }
        const int index = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
        ring_closure(index, pos_);
        pos_ += 3;
        return;
      }
      case '[': parse_bracket(); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0', pos_);
      ++pos_;
      return;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      fail(SmilesErrorKind::MalformedBracket, pos_, "whitespace inside SMILES");
    }
    parse_bare_atom();
  }

  void set_pending(BondOrder order) {
    if (pending_) fail(SmilesErrorKind::MalformedBracket, pos_, "two bond symbols in a row");
    pending_ = order;
    pending_offset_ = pos_;
    ++pos_;
  }

  void parse_bare_atom() {
    const std::size_t at = pos_;
    const char c = text_[pos_];
    std::string symbol;
    bool aromatic = false;
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      symbol = "Cl";
      pos_ += 2;
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      symbol = "Br";
      pos_ += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' ||
               c == 'F' || c == 'I') {
      symbol = std::string(1, c);
      ++pos_;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
      symbol = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      aromatic = true;
      ++pos_;
    } else {
      fail(SmilesErrorKind::UnknownElement, at,
           std::string("unexpected symbol '") + c + "' outside brackets");
    }
    Atom atom;
    atom.element = symbol;
    atom.aromatic = aromatic;
    add_atom(std::move(atom), /*bracket=*/false);
  }

  void parse_bracket() {
    const std::size_t open = pos_;
    ++pos_;  // '['
    Atom atom;

    // isotope
    std::size_t digits = 0;
    int isotope = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      isotope = isotope * 10 + (text_[pos_] - '0');
      ++pos_;
      if (++digits > 3) fail(SmilesErrorKind::MalformedBracket, pos_, "isotope too long");
    }
    atom.isotope = isotope;

    // element symbol
    if (pos_ >= text_.size()) fail(SmilesErrorKind::MalformedBracket, open, "unterminated bracket");
    const std::size_t sym_at = pos_;
    const char s0 = text_[pos_];
    if (std::isupper(static_cast<unsigned char>(s0))) {
      std::string two;
      if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
        two = std::string{s0, text_[pos_ + 1]};
      }
      if (!two.empty() && element_table().count(two)) {
        atom.element = two;
        pos_ += 2;
      } else if (element_table().count(std::string_view(&s0, 1))) {
        atom.element = std::string(1, s0);
        ++pos_;
      } else {
        fail(SmilesErrorKind::UnknownElement, sym_at,
             "unknown element '" + (two.empty() ? std::string(1, s0) : two) + "'");
      }
    } else if (std::islower(static_cast<unsigned char>(s0))) {
      std::string two;
      if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
        two = std::string{s0, text_[pos_ + 1]};
      }
      if (two == "se" || two == "as") {
        atom.element = std::string{static_cast<char>(std::toupper(s0)), two[1]};
        atom.aromatic = true;
        pos_ += 2;
      } else if (s0 == 'b' || s0 == 'c' || s0 == 'n' || s0 == 'o' || s0 == 'p' || s0 == 's') {
        atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(s0))));
        atom.aromatic = true;
        ++pos_;
      } else {
        fail(SmilesErrorKind::UnknownElement, sym_at, std::string("unknown aromatic symbol '") + s0 + "'");
      }
    } else {
      fail(SmilesErrorKind::MalformedBracket, pos_, "missing element symbol in bracket");
    }

    // chirality, accepted and discarded
    while (pos_ < text_.size() && text_[pos_] == '@') ++pos_;

    // explicit hydrogen count
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      int h = 1;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        h = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          h = h * 10 + (text_[pos_] - '0');
          ++pos_;
        }
      }
      atom.explicit_h = h;
    }

    // charge
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign_char = text_[pos_];
      const int sign = sign_char == '+' ? 1 : -1;
      int magnitude = 0;
      while (pos_ < text_.size() && text_[pos_] == sign_char) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1 && pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        magnitude = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          magnitude = magnitude * 10 + (text_[pos_] - '0');
          ++pos_;
        }
      }
      atom.formal_charge = sign * magnitude;
    }

    // atom class, accepted and discarded
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        fail(SmilesErrorKind::MalformedBracket, pos_, "atom class needs digits");
      }
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    if (pos_ >= text_.size() || text_[pos_] != ']') {
      fail(SmilesErrorKind::MalformedBracket, pos_, "expected ']'");
    }
    ++pos_;
    add_atom(std::move(atom), /*bracket=*/true);
  }

  void add_atom(Atom atom, bool bracket) {
    const int index = static_cast<int>(graph_.atoms.size());
    graph_.atoms.push_back(std::move(atom));
    bracket_.push_back(bracket);
    if (prev_ >= 0) {
      add_bond(prev_, index, resolve_order(prev_, index, pending_), pending_offset_);
    }
    pending_.reset();
    prev_ = index;
  }

  BondOrder resolve_order(int a, int b, std::optional<BondOrder> requested) const {
    if (requested) return *requested;
    if (graph_.atoms[a].aromatic && graph_.atoms[b].aromatic) return BondOrder::Aromatic;
    return BondOrder::Single;
  }

  void add_bond(int a, int b, BondOrder order, std::size_t offset) {
    if (a == b) fail(SmilesErrorKind::MalformedBracket, offset, "self bond");
    for (const Bond& bond : graph_.bonds) {
      if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a)) {
        fail(SmilesErrorKind::MalformedBracket, offset, "duplicate bond between atom pair");
      }
    }
    graph_.bonds.push_back(Bond{a, b, order, false});
  }

  void ring_closure(int index, std::size_t offset) {
    if (prev_ < 0) fail(SmilesErrorKind::MalformedBracket, offset, "ring closure before any atom");
    auto it = open_rings_.find(index);
    if (it == open_rings_.end()) {
      open_rings_.emplace(index, RingHalf{prev_, pending_, offset});
      pending_.reset();
      return;
    }
    const RingHalf half = it->second;
    open_rings_.erase(it);
    std::optional<BondOrder> order = half.order;
    if (pending_) {
      if (order && *order != *pending_) {
        fail(SmilesErrorKind::MalformedBracket, offset, "conflicting ring bond orders");
      }
      order = pending_;
    }
    add_bond(half.atom, prev_, resolve_order(half.atom, prev_, order), offset);
    pending_.reset();
  }

  void finish() {
    if (pending_) fail(SmilesErrorKind::MalformedBracket, pending_offset_, "dangling bond at end of input");
    if (!branches_.empty()) {
      fail(SmilesErrorKind::UnclosedBranch, branches_.back().second, "unclosed '('");
    }
    if (!open_rings_.empty()) {
      std::size_t first = std::string::npos;
      for (const auto& [idx, half] : open_rings_) first = std::min(first, half.offset);
      fail(SmilesErrorKind::UnclosedRing, first, "dangling ring closure");
    }
    annotate();
  }

  // Degrees, ring membership (non-bridge bonds) and implicit hydrogens.
  void annotate() {
    auto& atoms = graph_.atoms;
    auto& bonds = graph_.bonds;
    const int n = static_cast<int>(atoms.size());

    std::vector<std::vector<int>> inc(n);
    for (int bi = 0; bi < static_cast<int>(bonds.size()); ++bi) {
      inc[bonds[bi].a].push_back(bi);
      inc[bonds[bi].b].push_back(bi);
    }
    for (int i = 0; i < n; ++i) atoms[i].degree = static_cast<int>(inc[i].size());

    mark_ring_bonds(inc);
    for (const Bond& bond : bonds) {
      if (bond.in_ring) {
        atoms[bond.a].in_ring = true;
        atoms[bond.b].in_ring = true;
      }
    }

    // bond-order sums in half units so aromatic counts 1.5
    std::vector<int> order2(n, 0);
    for (const Bond& bond : bonds) {
      const int contribution = bond.order == BondOrder::Aromatic ? 3 : 2 * bond_order_code(bond.order);
      order2[bond.a] += contribution;
      order2[bond.b] += contribution;
    }
    for (int i = 0; i < n; ++i) {
      Atom& atom = atoms[i];
      if (atom.explicit_h) {
        atom.implicit_h = 0;
        continue;
      }
      const int used = (order2[i] + 1) / 2;
      if (!bracket_[i]) {
        atom.implicit_h = std::max(0, base_valence(atom.element) - used);
      } else if (atom.formal_charge != 0 &&
                 (atom.element == "N" || atom.element == "O" || atom.element == "S")) {
        // charge-shifted valence, e.g. [N+] behaves as valence 4
        const int target = base_valence(atom.element) + (atom.formal_charge > 0 ? 1 : -1);
        atom.implicit_h = std::max(0, target - used);
      } else {
        atom.implicit_h = 0;
      }
    }
  }

  // Tarjan bridge finding; every non-bridge bond lies on a cycle.
  void mark_ring_bonds(const std::vector<std::vector<int>>& inc) {
    const int n = static_cast<int>(graph_.atoms.size());
    std::vector<int> disc(n, -1), low(n, 0);
    std::vector<bool> is_bridge(graph_.bonds.size(), false);
    int timer = 0;

    struct Frame {
      int atom;
      int parent_bond;
      std::size_t next;
    };
    std::vector<Frame> stack;
    for (int root = 0; root < n; ++root) {
      if (disc[root] >= 0) continue;
      stack.push_back({root, -1, 0});
      disc[root] = low[root] = timer++;
      while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next < inc[frame.atom].size()) {
          const int bi = inc[frame.atom][frame.next++];
          if (bi == frame.parent_bond) continue;
          const int to = MolecularGraph::other_end(graph_.bonds[bi], frame.atom);
          if (disc[to] >= 0) {
            low[frame.atom] = std::min(low[frame.atom], disc[to]);
          } else {
            disc[to] = low[to] = timer++;
            stack.push_back({to, bi, 0});
          }
        } else {
          const Frame done = frame;
          stack.pop_back();
          if (!stack.empty()) {
            Frame& up = stack.back();
            low[up.atom] = std::min(low[up.atom], low[done.atom]);
            if (low[done.atom] > disc[up.atom]) is_bridge[done.parent_bond] = true;
          }
        }
      }
    }
    for (std::size_t bi = 0; bi < graph_.bonds.size(); ++bi) {
      graph_.bonds[bi].in_ring = !is_bridge[bi];
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  MolecularGraph graph_;
  std::vector<bool> bracket_;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  std::size_t pending_offset_ = 0;
  std::vector<std::pair<int, std::size_t>> branches_;  // (atom, '(' offset)
  std::map<int, RingHalf> open_rings_;
};

}  // namespace

std::vector<std::vector<int>> MolecularGraph::incidence() const {
  std::vector<std::vector<int>> inc(atoms.size());
  for (int bi = 0; bi < static_cast<int>(bonds.size()); ++bi) {
    inc[bonds[bi].a].push_back(bi);
    inc[bonds[bi].b].push_back(bi);
  }
  return inc;
}

MolecularGraph parse_smiles(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  if (begin == end) {
    throw SmilesParseError(SmilesErrorKind::EmptyInput, 0, "empty SMILES");
  }
  Parser parser(text.substr(begin, end - begin));
  return parser.run();
}

std::vector<std::vector<int>> atom_components(const MolecularGraph& graph) {
  const int n = static_cast<int>(graph.atoms.size());
  const auto inc = graph.incidence();
  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> components;
  for (int start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    std::vector<int> members{start};
    label[start] = static_cast<int>(components.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (int bi : inc[members[k]]) {
        const int to = MolecularGraph::other_end(graph.bonds[bi], members[k]);
        if (label[to] < 0) {
          label[to] = label[start];
          members.push_back(to);
        }
      }
    }
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::stable_sort(components.begin(), components.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     if (a.size() != b.size()) return a.size() > b.size();
                     return a.front() < b.front();
                   });
  return components;
}

MolecularGraph induced_subgraph(const MolecularGraph& graph, const std::vector<int>& atom_indices) {
  MolecularGraph sub;
  sub.source_text = graph.source_text;
  std::vector<int> remap(graph.atoms.size(), -1);
  for (int idx : atom_indices) {
    remap[idx] = static_cast<int>(sub.atoms.size());
    sub.atoms.push_back(graph.atoms[idx]);
  }
  for (const Bond& bond : graph.bonds) {
    if (remap[bond.a] >= 0 && remap[bond.b] >= 0) {
      sub.bonds.push_back(Bond{remap[bond.a], remap[bond.b], bond.order, bond.in_ring});
    }
  }
  for (Atom& atom : sub.atoms) atom.degree = 0;
  for (const Bond& bond : sub.bonds) {
    ++sub.atoms[bond.a].degree;
    ++sub.atoms[bond.b].degree;
  }
  return sub;
}

std::optional<ElementInfo> element_info(std::string_view symbol) {
  auto it = element_table().find(symbol);
  if (it == element_table().end()) return std::nullopt;
  return it->second;
}

}  // namespace toxnet::smiles
