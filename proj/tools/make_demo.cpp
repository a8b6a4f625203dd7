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

// Generates the bundled demonstration dataset: ~300 small molecules built
// from a fragment grammar, four binary tasks, and reference pattern files.
// The activity rule is sulfonyl XOR trichloromethyl: a single planted group
// activates, both together neutralize each other. Tasks A-C are dense noisy
// copies of that indicator; task D is a sparsely labeled copy that stays
// highly correlated with them. A dozen labels are far too few to learn an
// XOR of substructures, while the dense tasks teach it easily, which is the
// regime where shared hidden representations pay off. Fully seeded: the
// same arguments always reproduce the same files byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toxnet/rng.hpp"
#include "toxnet/smiles.hpp"

namespace {

using toxnet::Rng;

const std::vector<std::string> kPlainFragments = {
    "CC",    "CCC",       "CCO",      "CCN",  "COC",      "CCS",
    "C(C)C", "c1ccccc1",  "C1CCCCC1", "CCOC", "CC(C)O",   "CCNC",
    "C=CC",  "CC(=O)C",   "CC(=O)N",  "COCC", "c1ccncc1", "CC(C)(C)C",
};

constexpr const char* kMotifSulfonyl = "S(=O)(=O)C";
constexpr const char* kMotifTrichloro = "C(Cl)(Cl)Cl";  // terminal only

struct DemoCompound {
  std::string id;
  std::string smiles;
  bool active;  // sulfonyl XOR trichloromethyl
  std::vector<int> labels;  // -1 missing, 0, 1
};

std::string build_molecule(Rng& rng, bool with_sulfonyl, bool with_trichloro) {
  const int n_fragments = 2 + static_cast<int>(rng.below(3));
  std::vector<std::string> parts;
  for (int f = 0; f < n_fragments; ++f) {
    parts.push_back(kPlainFragments[rng.below(kPlainFragments.size())]);
  }
  if (with_sulfonyl) {
    // never first: the sulfonyl group stays internal or terminal
    const std::size_t at = 1 + rng.below(parts.size());
    parts.insert(parts.begin() + at, kMotifSulfonyl);
  }
  // the trichloromethyl carbon saturates, so it always closes the chain
  if (with_trichloro) parts.push_back(kMotifTrichloro);
  std::string smiles;
  for (const auto& part : parts) smiles += part;
  return smiles;
}

int noisy_copy(Rng& rng, bool truth, double flip) {
  const bool flipped = rng.uniform() < flip;
  return (truth != flipped) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate the bundled toxnet demo dataset"};
  std::string out_dir = "data/demo";
  int n_compounds = 300;
  std::uint64_t seed = 20260101;
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--n", n_compounds, "number of compounds");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out_dir);
  Rng rng(seed);

  std::vector<DemoCompound> compounds;
  compounds.reserve(n_compounds);
  while (static_cast<int>(compounds.size()) < n_compounds) {
    const bool sulfonyl = rng.uniform() < 0.5;
    const bool trichloro = rng.uniform() < 0.5;
    const bool active = sulfonyl != trichloro;
    const std::string smiles = build_molecule(rng, sulfonyl, trichloro);
    try {
      toxnet::smiles::parse_smiles(smiles);
    } catch (const toxnet::Error&) {
      continue;  // grammar should not produce these; skip defensively
    }
    DemoCompound compound;
    compound.id = "d" + std::to_string(1000 + compounds.size());
    compound.smiles = smiles;
    compound.active = active;

    // tasks A, B, C: dense, 5% label noise; task D: 5% labeled, 6% noise
    for (int t = 0; t < 3; ++t) {
      if (rng.uniform() < 0.85) {
        compound.labels.push_back(noisy_copy(rng, active, 0.05));
      } else {
        compound.labels.push_back(-1);
      }
    }
    if (rng.uniform() < 0.05) {
      compound.labels.push_back(noisy_copy(rng, active, 0.06));
    } else {
      compound.labels.push_back(-1);
    }
    compounds.push_back(std::move(compound));
  }

  // keep task D at its nominal 5% coverage with both classes represented
  auto count_d = [&compounds](int value) {
    int count = 0;
    for (const auto& compound : compounds) {
      if (compound.labels[3] == value) ++count;
    }
    return count;
  };
  const int d_floor = std::max(4, n_compounds / 40);  // half of 5% per class
  for (int wanted : {1, 0}) {
    for (std::size_t i = 0; count_d(wanted) < d_floor && i < compounds.size(); ++i) {
      auto& compound = compounds[i];
      if (compound.labels[3] == -1 && static_cast<int>(compound.active) == wanted) {
        compound.labels[3] = wanted;
      }
    }
  }

  {
    std::ofstream out(out_dir + "/demo_compounds.tsv");
    out << "id\tsmiles\tA\tB\tC\tD\n";
    for (const auto& compound : compounds) {
      out << compound.id << '\t' << compound.smiles;
      for (int label : compound.labels) {
        out << '\t';
        if (label >= 0) out << label;
      }
      out << '\n';
    }
  }

  {
    std::ofstream out(out_dir + "/demo_toxicophores.tsv");
    out << "# reference toxicophore-like patterns for the demo dataset\n";
    out << "sulfonyl\tCS(=O)(=O)C\n";
    out << "sulfonyl_ring\tc1ccccc1S(=O)(=O)C\n";
    out << "nitrile\tCC#N\n";
    out << "trichloromethyl\tCC(Cl)(Cl)Cl\n";
    out << "amide\tCC(=O)N\n";
    out << "ketone\tCC(=O)C\n";
    out << "furan\tc1ccoc1\n";
    out << "pyridine\tc1ccncc1\n";
    out << "thioether\tCSC\n";
    out << "phenol\tOc1ccccc1\n";
    out << "aniline\tNc1ccccc1\n";
    out << "epoxide\tC1CO1\n";
  }

  {
    std::ofstream out(out_dir + "/demo_scaffolds.tsv");
    out << "# common scaffold patterns for the demo dataset\n";
    out << "ethane\tCC\n";
    out << "propane\tCCC\n";
    out << "benzene\tc1ccccc1\n";
    out << "cyclohexane\tC1CCCCC1\n";
    out << "ethanol\tCCO\n";
    out << "ethylamine\tCCN\n";
    out << "dimethyl_ether\tCOC\n";
    out << "isobutane\tCC(C)C\n";
  }

  int active_count = 0;
  std::vector<int> labeled(4, 0);
  for (const auto& compound : compounds) {
    if (compound.active) ++active_count;
    for (int t = 0; t < 4; ++t) {
      if (compound.labels[t] >= 0) ++labeled[t];
    }
  }
  std::cout << "compounds\t" << compounds.size() << "\n"
            << "active\t" << active_count << "\n";
  for (int t = 0; t < 4; ++t) {
    std::cout << "labeled_" << static_cast<char>('A' + t) << '\t' << labeled[t] << "\n";
  }
  return 0;
}
