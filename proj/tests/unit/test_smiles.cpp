#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "toxnet/smiles.hpp"

using namespace toxnet;
using smiles::BondOrder;
using smiles::parse_smiles;

TEST_CASE("ethanol parses with standard valence hydrogens") {
  const auto g = parse_smiles("CCO");
  REQUIRE(g.atoms.size() == 3);
  REQUIRE(g.bonds.size() == 2);
  CHECK(g.atoms[0].implicit_h == 3);
  CHECK(g.atoms[1].implicit_h == 2);
  CHECK(g.atoms[2].implicit_h == 1);
  CHECK(g.bonds[0].order == BondOrder::Single);
  CHECK(g.bonds[1].order == BondOrder::Single);
  CHECK((g.bonds[0].a == 0 && g.bonds[0].b == 1));
  CHECK((g.bonds[1].a == 1 && g.bonds[1].b == 2));
  for (const auto& atom : g.atoms) CHECK_FALSE(atom.in_ring);
}

TEST_CASE("cyclopropane ring closure marks every atom and bond") {
  const auto g = parse_smiles("C1CC1");
  REQUIRE(g.atoms.size() == 3);
  REQUIRE(g.bonds.size() == 3);
  for (const auto& atom : g.atoms) CHECK(atom.in_ring);
  for (const auto& bond : g.bonds) CHECK(bond.in_ring);
}

TEST_CASE("benzene is six aromatic CH") {
  const auto g = parse_smiles("c1ccccc1");
  REQUIRE(g.atoms.size() == 6);
  REQUIRE(g.bonds.size() == 6);
  for (const auto& atom : g.atoms) {
    CHECK(atom.aromatic);
    CHECK(atom.element == "C");
    CHECK(atom.implicit_h == 1);
    CHECK(atom.in_ring);
  }
  for (const auto& bond : g.bonds) CHECK(bond.order == BondOrder::Aromatic);
}

TEST_CASE("parse errors carry kind and offset") {
  auto expect_error = [](const std::string& text, SmilesErrorKind kind, std::size_t offset) {
    try {
      parse_smiles(text);
      FAIL("expected parse error for '", text, "'");
    } catch (const SmilesParseError& e) {
      CHECK(e.kind() == kind);
      CHECK(e.offset() == offset);
      CHECK(e.offset() <= text.size());
    }
  };
  expect_error("C(", SmilesErrorKind::UnclosedBranch, 1);
  expect_error("C(C", SmilesErrorKind::UnclosedBranch, 1);
  expect_error("CC)", SmilesErrorKind::UnclosedBranch, 2);
  expect_error("C1CC", SmilesErrorKind::UnclosedRing, 1);
  expect_error("", SmilesErrorKind::EmptyInput, 0);
  expect_error("   ", SmilesErrorKind::EmptyInput, 0);
  expect_error("CA", SmilesErrorKind::UnknownElement, 1);
  expect_error("[Xx]", SmilesErrorKind::UnknownElement, 1);
  expect_error("[CH4", SmilesErrorKind::MalformedBracket, 4);
  expect_error("C=", SmilesErrorKind::MalformedBracket, 1);
  expect_error("C==C", SmilesErrorKind::MalformedBracket, 2);
  expect_error("C%1C", SmilesErrorKind::MalformedBracket, 1);
}

TEST_CASE("non-ASCII input is rejected with an offset") {
  try {
    parse_smiles("CC\xc3\xa9");
    FAIL("expected parse error");
  } catch (const SmilesParseError& e) {
    CHECK(e.kind() == SmilesErrorKind::MalformedBracket);
    CHECK(e.offset() == 2);
  }
}

TEST_CASE("bracket atoms: isotope, charge, explicit hydrogens") {
  const auto g = parse_smiles("[13CH4]");
  REQUIRE(g.atoms.size() == 1);
  CHECK(g.atoms[0].isotope == 13);
  CHECK(g.atoms[0].explicit_h == 4);
  CHECK(g.atoms[0].implicit_h == 0);

  const auto charged = parse_smiles("[NH4+]");
  CHECK(charged.atoms[0].formal_charge == 1);
  CHECK(charged.atoms[0].explicit_h == 4);

  const auto doubly = parse_smiles("[Ca+2]");
  CHECK(doubly.atoms[0].formal_charge == 2);
  const auto minus2 = parse_smiles("[O--]");
  CHECK(minus2.atoms[0].formal_charge == -2);
}

TEST_CASE("charged N/O/S without H-count get charge-shifted valence") {
  // quaternary ammonium: no room for hydrogens
  const auto quat = parse_smiles("C[N+](C)(C)C");
  CHECK(quat.atoms[1].implicit_h == 0);
  // phenolate oxygen: shifted valence 1, one bond, no H
  const auto phenolate = parse_smiles("c1ccccc1[O-]");
  CHECK(phenolate.atoms[6].implicit_h == 0);
  // bare hydroxide gets its one hydrogen
  const auto hydroxide = parse_smiles("[O-]");
  CHECK(hydroxide.atoms[0].implicit_h == 1);
  // charged atoms outside N/O/S stay at their written H-count
  const auto iron = parse_smiles("[Fe+2]");
  CHECK(iron.atoms[0].implicit_h == 0);
}

TEST_CASE("hydrogen count never goes negative") {
  // fusion carbon in naphthalene has three aromatic bonds
  const auto g = parse_smiles("c1ccc2ccccc2c1");
  REQUIRE(g.atoms.size() == 10);
  int h_total = 0;
  for (const auto& atom : g.atoms) {
    CHECK(atom.implicit_h >= 0);
    h_total += atom.implicit_h;
  }
  CHECK(h_total == 8);  // naphthalene C10H8
}

TEST_CASE("stereo markers are accepted and discarded") {
  const auto g = parse_smiles("N[C@@H](C)C(=O)O");
  CHECK(g.atoms.size() == 6);
  const auto h = parse_smiles("F/C=C/F");
  CHECK(h.atoms.size() == 4);
  CHECK(h.bonds[1].order == BondOrder::Double);
}

TEST_CASE("two-digit ring closures") {
  const auto g = parse_smiles("C%12CC%12");
  CHECK(g.atoms.size() == 3);
  CHECK(g.bonds.size() == 3);
}

TEST_CASE("duplicate and self ring bonds are rejected") {
  CHECK_THROWS_AS(parse_smiles("C11"), SmilesParseError);   // self loop
  CHECK_THROWS_AS(parse_smiles("C12CC12"), SmilesParseError);  // parallel bond
  CHECK_THROWS_AS(parse_smiles("C=1CC-1"), SmilesParseError);  // conflicting orders
}

TEST_CASE("ring bond order may be written on either side") {
  const auto left = parse_smiles("C=1CCCCC=1");
  const auto right = parse_smiles("C1CCCCC=1");
  CHECK(tt::isomorphic(left, right));
}

TEST_CASE("atom components split fragments and order by size") {
  const auto one = smiles::atom_components(parse_smiles("CCO"));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == std::vector<int>{0, 1, 2});

  const auto two = smiles::atom_components(parse_smiles("C.C"));
  CHECK(two.size() == 2);

  const auto sized = smiles::atom_components(parse_smiles("CC.O"));
  REQUIRE(sized.size() == 2);
  CHECK(sized[0] == std::vector<int>{0, 1});
  CHECK(sized[1] == std::vector<int>{2});

  // equal sizes: smaller first index leads
  const auto tie = smiles::atom_components(parse_smiles("O.C"));
  CHECK(tie[0] == std::vector<int>{0});
  CHECK(tie[1] == std::vector<int>{1});
}

TEST_CASE("degree matches incident bonds") {
  const auto g = parse_smiles("CC(C)(C)C");
  CHECK(g.atoms[1].degree == 4);
  CHECK(g.atoms[0].degree == 1);
}

namespace {

// hand-constructed equivalent spellings of the same molecule
const std::vector<std::pair<std::string, std::string>> kEquivalentPairs = {
    {"CCO", "OCC"},
    {"CC(C)C", "C(C)(C)C"},
    {"C1CC1", "C2CC2"},
    {"c1ccccc1", "c1ccccc1"},
    {"CCN(CC)CC", "N(CC)(CC)CC"},
    {"CC(=O)O", "OC(C)=O"},
    {"C(F)(Cl)Br", "BrC(Cl)F"},
    {"C1CCCCC1", "C2CCCCC2"},
    {"Cc1ccccc1", "c1ccccc1C"},
    {"CC(C)(C)O", "OC(C)(C)C"},
    {"O=C=O", "C(=O)=O"},
    {"C#N", "N#C"},
    {"CCOC", "COCC"},
    {"CC1CCC1", "C1CCC1C"},
    {"NC(=O)C", "CC(N)=O"},
    {"c1ccoc1", "c1occc1"},
    {"CSC", "S(C)C"},
    {"CN1CCC1", "C1CCN1C"},
    {"ClCCCl", "C(Cl)CCl"},
    {"CC=CC", "C(C)=CC"},
    {"C1=CC=CC=C1", "C=1C=CC=CC1"},
    {"CC(C)CC", "CCC(C)C"},
};

}  // namespace

TEST_CASE("equivalent spellings parse to isomorphic graphs") {
  REQUIRE(kEquivalentPairs.size() >= 20);
  for (const auto& [a, b] : kEquivalentPairs) {
    CAPTURE(a); CAPTURE(b);
    CHECK(tt::isomorphic(parse_smiles(a), parse_smiles(b)));
  }
}

TEST_CASE("random re-spellings are isomorphic to the original") {
  Rng rng(20260810);
  for (const auto& [a, b] : kEquivalentPairs) {
    const auto g = parse_smiles(a);
    for (int rep = 0; rep < 4; ++rep) {
      const std::string rewritten = tt::write_smiles(g, rng);
      CAPTURE(a); CAPTURE(rewritten);
      CHECK(tt::isomorphic(g, parse_smiles(rewritten)));
    }
  }
}
