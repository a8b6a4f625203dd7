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

#include "toxnet/interpret.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

namespace toxnet::interpret {

Eigen::MatrixXd hidden_activations(const net::Network& network,
                                   const data::SparseFeatureMatrix& features,
                                   const data::NormalizationScheme* normalization,
                                   std::span<const std::size_t> rows, int layer) {
  if (layer < 1 || layer > network.hidden_layers()) {
    throw Error("hidden_activations: layer " + std::to_string(layer) + " out of range [1, " +
                std::to_string(network.hidden_layers()) + "]");
  }
  constexpr std::size_t kChunk = 512;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), network.layer_dims[layer]);
  std::vector<std::size_t> chunk;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const std::size_t stop = std::min(rows.size(), start + kChunk);
    chunk.assign(rows.begin() + start, rows.begin() + stop);
    Eigen::MatrixXd batch = features.dense_batch(chunk);
    if (normalization) data::apply_normalizer(batch, *normalization);
    const auto pass = net::forward_pass(network, batch, nullptr);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(stop - start)) =
        pass.act[layer - 1];
  }
  return out;
}

Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> pattern_presence(
    const std::vector<fp::SparseCountVector>& fingerprints, const fp::ReferenceSet& refs,
    double threshold) {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> presence(
      static_cast<Eigen::Index>(fingerprints.size()),
      static_cast<Eigen::Index>(refs.patterns.size()));
  for (std::size_t i = 0; i < fingerprints.size(); ++i) {
    for (std::size_t j = 0; j < refs.patterns.size(); ++j) {
      presence(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          fp::tanimoto(fingerprints[i], refs.patterns[j].second) >= threshold ? 1 : 0;
    }
  }
  return presence;
}

namespace {

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  const double r2 = std::min(r * r, 1.0 - 1e-15);
  const double df = static_cast<double>(n - 2);
  const double t = std::abs(r) * std::sqrt(df / (1.0 - r2));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace

std::vector<UnitCorrelation> correlate_units(
    const Eigen::MatrixXd& activations,
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& presence,
    const fp::ReferenceSet& refs, std::span<const std::string> compound_ids, int layer,
    double bh_alpha) {
  const Eigen::Index n = activations.rows();
  if (presence.rows() != n) throw Error("correlate_units: row count mismatch");
  if (presence.cols() != static_cast<Eigen::Index>(refs.patterns.size())) {
    throw Error("correlate_units: presence/pattern count mismatch");
  }
  if (!compound_ids.empty() && static_cast<Eigen::Index>(compound_ids.size()) != n) {
    throw Error("correlate_units: compound id count mismatch");
  }
  (void)bh_alpha;  // the BH procedure reports adjusted p-values; no cut is applied

  std::vector<UnitCorrelation> out;
  const double dn = static_cast<double>(n);

  // precompute unit statistics
  std::vector<double> unit_mean(activations.cols()), unit_var(activations.cols());
  for (Eigen::Index u = 0; u < activations.cols(); ++u) {
    unit_mean[u] = activations.col(u).mean();
    unit_var[u] = (activations.col(u).array() - unit_mean[u]).square().sum() / dn;
  }

  for (Eigen::Index j = 0; j < presence.cols(); ++j) {
    const double present = presence.col(j).cast<double>().sum();
    if (present == 0.0 || present == dn) continue;  // single-class pattern
    const double p_mean = present / dn;
    const double p_var = p_mean * (1.0 - p_mean);
    for (Eigen::Index u = 0; u < activations.cols(); ++u) {
      if (unit_var[u] <= 0.0) continue;  // constant activation
      double cov = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cov += (activations(i, u) - unit_mean[u]) *
               (static_cast<double>(presence(i, j)) - p_mean);
      }
      cov /= dn;
      const double r = cov / std::sqrt(unit_var[u] * p_var);

      UnitCorrelation uc;
      uc.layer = layer;
      uc.unit = static_cast<int>(u);
      uc.pattern_id = refs.patterns[static_cast<std::size_t>(j)].first;
      uc.pattern_size = refs.patterns[static_cast<std::size_t>(j)].second.size();
      uc.correlation = r;
      uc.p_raw = correlation_p_value(r, static_cast<std::size_t>(n));
      if (!compound_ids.empty()) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
          return activations(a, u) > activations(b, u);
        });
        for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) {
          uc.top_compounds.push_back(compound_ids[static_cast<std::size_t>(order[k])]);
        }
      }
      out.push_back(std::move(uc));
    }
  }

  // Benjamini-Hochberg adjustment across all retained pairs
  const std::size_t m = out.size();
  if (m > 0) {
    std::vector<std::size_t> by_p(m);
    std::iota(by_p.begin(), by_p.end(), 0);
    std::stable_sort(by_p.begin(), by_p.end(),
                     [&](std::size_t a, std::size_t b) { return out[a].p_raw < out[b].p_raw; });
    double running = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
      const std::size_t idx = by_p[rank - 1];
      const double adjusted = out[idx].p_raw * static_cast<double>(m) / static_cast<double>(rank);
      running = std::min(running, adjusted);
      out[idx].p_adjusted = running;
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const UnitCorrelation& a, const UnitCorrelation& b) {
    const double ma = std::abs(a.correlation);
    const double mb = std::abs(b.correlation);
    if (ma != mb) return ma > mb;
    if (a.unit != b.unit) return a.unit < b.unit;
    return a.pattern_id < b.pattern_id;
  });
  return out;
}

std::vector<LayerTrendRow> layer_trend(
    const std::vector<std::vector<UnitCorrelation>>& per_layer, std::size_t top_q) {
  if (per_layer.size() < 2) throw Error("layer_trend: need at least two layers");
  std::vector<LayerTrendRow> rows;
  rows.reserve(per_layer.size());
  for (const auto& correlations : per_layer) {
    LayerTrendRow row;
    row.layer = correlations.empty() ? 0 : correlations.front().layer;
    double weight_sum = 0.0;
    double weighted_size = 0.0;
    for (std::size_t i = 0; i < std::min(top_q, correlations.size()); ++i) {
      const double w = std::abs(correlations[i].correlation);
      weight_sum += w;
      weighted_size += w * static_cast<double>(correlations[i].pattern_size);
      ++row.pairs_used;
    }
    row.mean_pattern_size = weight_sum > 0.0 ? weighted_size / weight_sum : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace toxnet::interpret
