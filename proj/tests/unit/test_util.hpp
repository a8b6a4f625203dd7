// Shared test utilities: independent oracles and generators. Everything here
// deliberately avoids the library's own code paths (hashing, rank sorting,
// analytic gradients) so the tests compare two routes to the same answer.

#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "toxnet/dataset.hpp"
#include "toxnet/network.hpp"
#include "toxnet/rng.hpp"
#include "toxnet/smiles.hpp"

namespace tt {

using toxnet::Rng;
namespace smiles = toxnet::smiles;
namespace data = toxnet::data;
namespace net = toxnet::net;

/// Exact elementwise equality for Eigen blocks.
template <typename A, typename B>
bool same(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

/// Tight approximate equality (for values recomputed in different batches).
template <typename A, typename B>
bool close(const A& a, const B& b, double tol = 1e-12) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() - b.array()).abs().maxCoeff() <= tol;
}

/// Standard normal sample by Box-Muller.
inline double gaussian(Rng& rng) {
  const double u1 = std::max(rng.uniform(), 1e-300);
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// CSR matrix from a dense block (every nonzero stored, generic catalog).
inline data::SparseFeatureMatrix matrix_from_dense(const Eigen::MatrixXd& dense) {
  std::vector<data::ColumnInfo> catalog;
  for (Eigen::Index j = 0; j < dense.cols(); ++j) {
    catalog.push_back({data::FeatureSource::Ecfp, static_cast<std::uint64_t>(j),
                       "ecfp:" + std::to_string(j)});
  }
  data::SparseFeatureMatrix matrix(static_cast<std::size_t>(dense.cols()), catalog);
  std::vector<std::pair<std::uint32_t, float>> row;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) {
        row.push_back({static_cast<std::uint32_t>(j), static_cast<float>(dense(i, j))});
      }
    }
    matrix.add_row(row);
  }
  return matrix;
}

// ---------------------------------------------------------------------------
// AUC oracle: mean over all (positive, negative) pairs, ties count one half.

inline double brute_force_auc(const std::vector<double>& scores,
                              const std::vector<std::int8_t>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (labels[p] != 1) continue;
    for (std::size_t q = 0; q < scores.size(); ++q) {
      if (labels[q] != 0) continue;
      ++pairs;
      if (scores[p] > scores[q]) {
        wins += 1.0;
      } else if (scores[p] == scores[q]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Mann-Whitney oracle: full enumeration over label permutations, with
// midranks recomputed by pairwise counting rather than sorting.

inline double pairwise_midrank(const std::vector<double>& pool, std::size_t i) {
  double less = 0.0, equal = 0.0;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (pool[j] < pool[i]) ++less;
    if (pool[j] == pool[i]) ++equal;
  }
  return less + (equal + 1.0) / 2.0;
}

inline double enumerated_mw_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  const std::size_t n = pool.size();
  const std::size_t na = a.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) ranks[i] = pairwise_midrank(pool, i);

  auto u_of = [&](const std::vector<bool>& in_a) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_a[i]) r += ranks[i];
    }
    return r - static_cast<double>(na * (na + 1)) / 2.0;
  };

  std::vector<bool> observed(n, false);
  for (std::size_t i = 0; i < na; ++i) observed[i] = true;
  const double mu = static_cast<double>(na * b.size()) / 2.0;
  const double dev_obs = std::abs(u_of(observed) - mu);

  // descending-sorted bool vector enumerates all C(n, na) labelings
  std::vector<bool> labeling(n, false);
  for (std::size_t i = 0; i < na; ++i) labeling[i] = true;
  std::sort(labeling.begin(), labeling.end(), std::greater<bool>());
  std::size_t total = 0, extreme = 0;
  do {
    ++total;
    if (std::abs(u_of(labeling) - mu) >= dev_obs - 1e-12) ++extreme;
  } while (std::prev_permutation(labeling.begin(), labeling.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient oracle (central differences).

inline double loss_at(const net::Network& network, const Eigen::MatrixXd& batch,
                      const Eigen::MatrixXd& y, const Eigen::MatrixXd& mask,
                      const std::vector<Eigen::MatrixXd>* dropout_masks = nullptr) {
  const auto pass = net::forward_pass(network, batch, dropout_masks);
  return net::masked_loss(pass.outputs, y, mask).value;
}

inline net::Gradients finite_difference_gradients(
    net::Network network, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& y,
    const Eigen::MatrixXd& mask, double step = 1e-5,
    const std::vector<Eigen::MatrixXd>* dropout_masks = nullptr) {
  net::Gradients grads;
  for (std::size_t l = 0; l < network.weights.size(); ++l) {
    Eigen::MatrixXd gw(network.weights[l].rows(), network.weights[l].cols());
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) {
        const double saved = network.weights[l](r, c);
        network.weights[l](r, c) = saved + step;
        const double up = loss_at(network, batch, y, mask, dropout_masks);
        network.weights[l](r, c) = saved - step;
        const double down = loss_at(network, batch, y, mask, dropout_masks);
        network.weights[l](r, c) = saved;
        gw(r, c) = (up - down) / (2.0 * step);
      }
    }
    grads.weights.push_back(std::move(gw));
    Eigen::VectorXd gb(network.biases[l].size());
    for (Eigen::Index r = 0; r < gb.size(); ++r) {
      const double saved = network.biases[l](r);
      network.biases[l](r) = saved + step;
      const double up = loss_at(network, batch, y, mask, dropout_masks);
      network.biases[l](r) = saved - step;
      const double down = loss_at(network, batch, y, mask, dropout_masks);
      network.biases[l](r) = saved;
      gb(r) = (up - down) / (2.0 * step);
    }
    grads.biases.push_back(std::move(gb));
  }
  return grads;
}

inline double max_relative_gradient_error(const net::Gradients& analytic,
                                          const net::Gradients& numeric) {
  double worst = 0.0;
  // the floor keeps finite-difference noise on true-zero gradients from
  // registering as relative error
  auto update = [&worst](double a, double b) {
    const double scale = std::max({1e-3, std::abs(a), std::abs(b)});
    worst = std::max(worst, std::abs(a - b) / scale);
  };
  for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < analytic.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < analytic.weights[l].cols(); ++c) {
        update(analytic.weights[l](r, c), numeric.weights[l](r, c));
      }
    }
    for (Eigen::Index r = 0; r < analytic.biases[l].size(); ++r) {
      update(analytic.biases[l](r), numeric.biases[l](r));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Attribute-respecting graph isomorphism (backtracking); the parser
// round-trip oracle.

inline bool atoms_match(const smiles::Atom& a, const smiles::Atom& b) {
  return a.element == b.element && a.aromatic == b.aromatic &&
         a.formal_charge == b.formal_charge && a.total_h() == b.total_h() &&
         a.degree == b.degree && a.in_ring == b.in_ring;
}

inline bool isomorphic(const smiles::MolecularGraph& g1, const smiles::MolecularGraph& g2) {
  const std::size_t n = g1.atoms.size();
  if (n != g2.atoms.size() || g1.bonds.size() != g2.bonds.size()) return false;

  std::map<std::pair<int, int>, smiles::BondOrder> bonds2;
  for (const auto& bond : g2.bonds) {
    bonds2[{std::min(bond.a, bond.b), std::max(bond.a, bond.b)}] = bond.order;
  }
  std::vector<std::vector<std::pair<int, smiles::BondOrder>>> adj1(n);
  for (const auto& bond : g1.bonds) {
    adj1[bond.a].push_back({bond.b, bond.order});
    adj1[bond.b].push_back({bond.a, bond.order});
  }

  std::vector<int> map12(n, -1);
  std::vector<bool> used(n, false);

  std::function<bool(std::size_t)> place = [&](std::size_t i) -> bool {
    if (i == n) return true;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || !atoms_match(g1.atoms[i], g2.atoms[j])) continue;
      bool ok = true;
      for (const auto& [nbr, order] : adj1[i]) {
        if (map12[nbr] < 0) continue;
        auto it = bonds2.find({std::min<int>(j, map12[nbr]), std::max<int>(j, map12[nbr])});
        if (it == bonds2.end() || it->second != order) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      map12[i] = static_cast<int>(j);
      used[j] = true;
      if (place(i + 1)) return true;
      map12[i] = -1;
      used[j] = false;
    }
    return false;
  };
  return place(0);
}

// ---------------------------------------------------------------------------
// SMILES writer with randomized atom order and branch order; used to produce
// equivalent spellings of the same molecule for permutation tests.

inline std::string atom_token(const smiles::Atom& atom) {
  const bool organic = !atom.explicit_h && atom.formal_charge == 0 && atom.isotope == 0 &&
                       (atom.element == "B" || atom.element == "C" || atom.element == "N" ||
                        atom.element == "O" || atom.element == "P" || atom.element == "S" ||
                        atom.element == "F" || atom.element == "Cl" || atom.element == "Br" ||
                        atom.element == "I");
  if (organic) {
    std::string token = atom.element;
    if (atom.aromatic) {
      for (auto& c : token) c = static_cast<char>(std::tolower(c));
    }
    return token;
  }
  std::string token = "[";
  if (atom.isotope > 0) token += std::to_string(atom.isotope);
  std::string element = atom.element;
  if (atom.aromatic) {
    for (auto& c : element) c = static_cast<char>(std::tolower(c));
  }
  token += element;
  if (atom.explicit_h && *atom.explicit_h > 0) {
    token += "H";
    if (*atom.explicit_h > 1) token += std::to_string(*atom.explicit_h);
  }
  if (atom.formal_charge > 0) {
    token += "+";
    if (atom.formal_charge > 1) token += std::to_string(atom.formal_charge);
  } else if (atom.formal_charge < 0) {
    token += "-";
    if (atom.formal_charge < -1) token += std::to_string(-atom.formal_charge);
  }
  token += "]";
  return token;
}

inline std::string bond_token(smiles::BondOrder order, const smiles::Atom& a,
                              const smiles::Atom& b) {
  switch (order) {
    case smiles::BondOrder::Single:
      return (a.aromatic && b.aromatic) ? "-" : "";  // explicit to defeat the aromatic default
    case smiles::BondOrder::Double: return "=";
    case smiles::BondOrder::Triple: return "#";
    case smiles::BondOrder::Aromatic:
      return (a.aromatic && b.aromatic) ? "" : ":";
  }
  return "";
}

inline std::string write_smiles(const smiles::MolecularGraph& graph, Rng& rng) {
  const std::size_t n = graph.atoms.size();
  const auto inc = graph.incidence();

  // pass 1: randomized DFS fixes the spanning tree and the ring closures
  std::vector<bool> visited(n, false);
  std::vector<bool> bond_used(graph.bonds.size(), false);
  std::vector<std::vector<int>> children(n);  // tree bonds in emission order
  struct Closure {
    int digit;
    int bond;
    bool with_symbol;  // the later-visited endpoint prints the bond symbol
  };
  std::vector<std::vector<Closure>> closures(n);
  std::vector<int> roots;
  int next_digit = 1;

  std::function<void(int)> explore = [&](int atom) {
    visited[atom] = true;
    std::vector<int> order = inc[atom];
    rng.shuffle(order);
    for (int bi : order) {
      if (bond_used[bi]) continue;
      const int to = smiles::MolecularGraph::other_end(graph.bonds[bi], atom);
      bond_used[bi] = true;
      if (visited[to]) {  // back edge -> ring closure at both endpoints
        const int digit = next_digit++;
        closures[to].push_back({digit, bi, false});
        closures[atom].push_back({digit, bi, true});
      } else {
        children[atom].push_back(bi);
        explore(to);
      }
    }
  };

  std::vector<std::size_t> starts(n);
  for (std::size_t i = 0; i < n; ++i) starts[i] = i;
  rng.shuffle(starts);
  for (std::size_t s : starts) {
    if (!visited[s]) {
      roots.push_back(static_cast<int>(s));
      explore(static_cast<int>(s));
    }
  }

  // pass 2: emission along the recorded tree
  std::string out;
  std::function<void(int)> emit = [&](int atom) {
    out += atom_token(graph.atoms[atom]);
    for (const Closure& closure : closures[atom]) {
      const int to = smiles::MolecularGraph::other_end(graph.bonds[closure.bond], atom);
      if (closure.with_symbol) {
        out += bond_token(graph.bonds[closure.bond].order, graph.atoms[atom], graph.atoms[to]);
      }
      out += closure.digit >= 10 ? "%" + std::to_string(closure.digit)
                                 : std::to_string(closure.digit);
    }
    for (std::size_t k = 0; k < children[atom].size(); ++k) {
      const int bi = children[atom][k];
      const int to = smiles::MolecularGraph::other_end(graph.bonds[bi], atom);
      const bool last = k + 1 == children[atom].size();
      if (!last) out += "(";
      out += bond_token(graph.bonds[bi].order, graph.atoms[atom], graph.atoms[to]);
      emit(to);
      if (!last) out += ")";
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += ".";
    emit(roots[r]);
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("toxnet_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace tt
