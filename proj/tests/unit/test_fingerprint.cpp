#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "toxnet/fingerprint.hpp"

using namespace toxnet;
using fp::SparseCountVector;
using fp::ecfp;
using fp::tanimoto;
using smiles::parse_smiles;

namespace {

SparseCountVector make_vector(const std::vector<std::pair<std::uint64_t, std::uint32_t>>& e) {
  return SparseCountVector(e);
}

// independent oracle: the set of atoms within graph distance r of `center`
std::set<int> distance_ball(const smiles::MolecularGraph& g, int center, int radius) {
  const auto inc = g.incidence();
  std::set<int> ball{center};
  std::vector<int> frontier{center};
  for (int r = 0; r < radius; ++r) {
    std::vector<int> next;
    for (int atom : frontier) {
      for (int bi : inc[atom]) {
        const int to = smiles::MolecularGraph::other_end(g.bonds[bi], atom);
        if (ball.insert(to).second) next.push_back(to);
      }
    }
    frontier = std::move(next);
  }
  return ball;
}

// total increments the iteration must produce: one per atom at radius 0,
// then one per distinct distance ball per radius (isolated atoms stop).
std::size_t expected_total_count(const smiles::MolecularGraph& g, int radius) {
  std::size_t total = g.atoms.size();
  for (int r = 1; r <= radius; ++r) {
    std::set<std::set<int>> balls;
    for (int i = 0; i < static_cast<int>(g.atoms.size()); ++i) {
      if (g.atoms[i].degree == 0) continue;
      balls.insert(distance_ball(g, i, r));
    }
    total += balls.size();
  }
  return total;
}

std::size_t total_count(const SparseCountVector& v) {
  std::size_t total = 0;
  for (const auto& [id, count] : v.entries()) total += count;
  return total;
}

const std::vector<std::string> kCorpus = {
    "C",
    "CCO",
    "CC(C)C",
    "c1ccccc1",
    "Cc1ccccc1",
    "C1CCCCC1",
    "CC(=O)OC",
    "N#Cc1ccccc1",
    "ClC(Cl)Cl",
    "CS(=O)(=O)C",
    "c1ccc2ccccc2c1",
    "CC(N)C(=O)O",
    "O=C(O)c1ccccc1O",
    "CCOC(=O)CC",
    "C1CC1.CCO",
    "[NH4+].[O-]C(=O)C",
    "CCSSCC",
    "c1ccoc1CC(F)F",
    "CN1CCCC1",
    "CC(C)(C)c1ccc(O)cc1",
};

}  // namespace

TEST_CASE("single atom yields exactly one radius-0 feature") {
  const auto v = ecfp(parse_smiles("C"), 2);
  REQUIRE(v.size() == 1);
  CHECK(v.entries()[0].second == 1);
}

TEST_CASE("the radius-0 identifier follows the documented byte encoding") {
  // independent re-implementation of the documented FNV-1a tuple encoding
  auto fnv_byte = [](std::uint64_t h, std::uint8_t b) { return (h ^ b) * 1099511628211ULL; };
  auto fnv_u64 = [&](std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h = fnv_byte(h, static_cast<std::uint8_t>(v & 0xff));
      v >>= 8;
    }
    return h;
  };
  std::uint64_t h = 14695981039346656037ULL;
  h = fnv_byte(h, 0x01);  // radius-0 tag
  h = fnv_u64(h, 6);      // atomic number of carbon
  h = fnv_u64(h, 0);      // degree
  h = fnv_u64(h, 4);      // total hydrogens
  h = fnv_u64(h, 0);      // formal charge
  h = fnv_byte(h, 0);     // aromatic
  h = fnv_byte(h, 0);     // in ring
  const auto v = ecfp(parse_smiles("C"), 0);
  REQUIRE(v.size() == 1);
  CHECK(v.entries()[0].first == h);
}

TEST_CASE("ethanol at radius 1 has six singleton features") {
  const auto v = ecfp(parse_smiles("CCO"), 1);
  REQUIRE(v.size() == 6);
  for (const auto& [id, count] : v.entries()) CHECK(count == 1);
}

TEST_CASE("atom order does not change the fingerprint") {
  CHECK(ecfp(parse_smiles("OCC"), 2) == ecfp(parse_smiles("CCO"), 2));
  CHECK(ecfp(parse_smiles("C(C)(C)C"), 2) == ecfp(parse_smiles("CC(C)C"), 2));
}

TEST_CASE("property: fingerprints are invariant under random re-spelling") {
  Rng rng(7);
  for (const auto& text : kCorpus) {
    const auto g = parse_smiles(text);
    const auto reference = ecfp(g, 2);
    for (int rep = 0; rep < 10; ++rep) {
      const std::string respelled = tt::write_smiles(g, rng);
      CAPTURE(text); CAPTURE(respelled);
      CHECK(ecfp(parse_smiles(respelled), 2) == reference);
    }
  }
}

TEST_CASE("property: total feature count matches the distance-ball oracle") {
  for (const auto& text : kCorpus) {
    const auto g = parse_smiles(text);
    for (int radius = 0; radius <= 3; ++radius) {
      CAPTURE(text); CAPTURE(radius);
      CHECK(total_count(ecfp(g, radius)) == expected_total_count(g, radius));
    }
  }
}

TEST_CASE("property: entry count grows with radius") {
  for (const auto& text : kCorpus) {
    const auto g = parse_smiles(text);
    std::size_t previous = 0;
    for (int radius = 0; radius <= 4; ++radius) {
      const std::size_t entries = ecfp(g, radius).size();
      CAPTURE(text); CAPTURE(radius);
      CHECK(entries >= previous);
      previous = entries;
    }
  }
}

TEST_CASE("radius is validated") {
  const auto g = parse_smiles("CC");
  CHECK_THROWS_AS(ecfp(g, -1), Error);
  CHECK_THROWS_AS(ecfp(g, 11), Error);
  CHECK_NOTHROW(ecfp(g, 10));
}

TEST_CASE("tanimoto on shared and disjoint supports") {
  const auto a = make_vector({{1, 2}, {2, 1}});
  const auto b = make_vector({{2, 5}, {3, 1}});
  CHECK(tanimoto(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(tanimoto(a, a) == 1.0);
  const auto c = make_vector({{7, 1}});
  CHECK(tanimoto(a, c) == 0.0);
  CHECK(tanimoto(SparseCountVector{}, SparseCountVector{}) == 1.0);
  // counts do not matter, only supports
  const auto a_scaled = make_vector({{1, 9}, {2, 9}});
  CHECK(tanimoto(a_scaled, b) == tanimoto(a, b));
}

TEST_CASE("property: tanimoto is symmetric and within [0,1]") {
  Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> ea, eb;
    std::uint64_t id = 0;
    for (int k = 0; k < 12; ++k) {
      id += 1 + rng.below(5);
      if (rng.uniform() < 0.5) ea.push_back({id, 1 + static_cast<std::uint32_t>(rng.below(4))});
      if (rng.uniform() < 0.5) eb.push_back({id, 1 + static_cast<std::uint32_t>(rng.below(4))});
    }
    const auto a = make_vector(ea);
    const auto b = make_vector(eb);
    const double ab = tanimoto(a, b);
    CHECK(ab == tanimoto(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("reference features follow file order and reuse tanimoto") {
  fp::ReferenceSet refs;
  refs.name = "test";
  refs.patterns.push_back({"p1", make_vector({{1, 1}, {2, 1}})});
  refs.patterns.push_back({"p2", make_vector({{9, 1}})});
  const auto fp_match = make_vector({{1, 1}, {2, 1}});
  const auto features = fp::reference_features(fp_match, refs);
  REQUIRE(features.size() == 2);
  CHECK(features[0] == 1.0);
  CHECK(features[1] == 0.0);

  const auto fp_partial = make_vector({{2, 3}, {3, 1}});
  CHECK(fp::reference_features(fp_partial, refs)[0] == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(fp::reference_features(fp_match, fp::ReferenceSet{}), Error);
}

TEST_CASE("reference set files reject duplicates and bad smiles") {
  tt::TempDir dir;
  {
    std::ofstream out(dir.file("refs.tsv"));
    out << "# comment line\n";
    out << "tox1\tc1ccccc1\n";
    out << "tox2\tCCO\n";
  }
  const auto set = fp::load_reference_set(dir.file("refs.tsv"), "tox");
  CHECK(set.patterns.size() == 2);
  CHECK(set.patterns[0].first == "tox1");

  {
    std::ofstream out(dir.file("dup.tsv"));
    out << "a\tCC\na\tCCC\n";
  }
  CHECK_THROWS_AS(fp::load_reference_set(dir.file("dup.tsv"), "dup"), Error);

  {
    std::ofstream out(dir.file("bad.tsv"));
    out << "a\tC(\n";
  }
  CHECK_THROWS_WITH_AS(fp::load_reference_set(dir.file("bad.tsv"), "bad"),
                       doctest::Contains(":1:"), Error);
}

TEST_CASE("sparsity filter boundary and idempotence") {
  CHECK(fp::sparsity_filter({4, 5, 6}, 5) == std::vector<bool>{false, true, true});
  CHECK(fp::sparsity_filter({0, 1, 2}, 1) == std::vector<bool>{false, true, true});
  CHECK(fp::sparsity_filter({0, 0, 0}, 5) == std::vector<bool>{false, false, false});
  CHECK_THROWS_AS(fp::sparsity_filter({1}, 0), Error);
  CHECK_THROWS_AS(fp::sparsity_filter({1}, -3), Error);

  // applying the filter to the surviving counts keeps them all
  const std::vector<std::size_t> counts = {3, 7, 12, 5, 0};
  const auto keep = fp::sparsity_filter(counts, 5);
  std::vector<std::size_t> surviving;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (keep[j]) surviving.push_back(counts[j]);
  }
  const auto again = fp::sparsity_filter(surviving, 5);
  CHECK(std::all_of(again.begin(), again.end(), [](bool b) { return b; }));
}

TEST_CASE("fingerprints are bit-identical across repeated runs") {
  const auto g = parse_smiles("CC(N)C(=O)Oc1ccccc1");
  const auto a = ecfp(g, 2);
  const auto b = ecfp(g, 2);
  CHECK(a == b);
}
