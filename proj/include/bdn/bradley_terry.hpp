#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/rng.hpp"

namespace bdn {

/// One pairwise preference: `winner` must equal either `item_a` or `item_b`.
struct Comparison {
  std::string item_a;
  std::string item_b;
  std::string winner;
};

struct BtOptions {
  std::string anchor;        // item whose lp_factor is fixed at 1 (required)
  int max_iter = 10000;
  double tol = 1e-8;         // max relative strength change per sweep
  bool virtual_ties = false; // adds half a win each way vs the anchor
};

struct BtScores {
  std::vector<std::string> items;     // sorted
  std::vector<double> strengths;      // geometric mean 1
  std::vector<double> lp_factors;     // strengths / strength(anchor)

  double lp_factor(const std::string& item) const {
    const auto it = std::lower_bound(items.begin(), items.end(), item);
    if (it == items.end() || *it != item)
      throw std::invalid_argument("BtScores: unknown item " + item);
    return lp_factors[static_cast<std::size_t>(it - items.begin())];
  }
};

/// Bradley-Terry log-likelihood of `comparisons` under the given strengths;
/// the minorization-maximization fit never decreases this.
inline double bt_log_likelihood(const std::vector<Comparison>& comparisons,
                                const BtScores& scores) {
  double ll = 0.0;
  for (const Comparison& c : comparisons) {
    const auto idx = [&](const std::string& s) {
      return static_cast<std::size_t>(
          std::lower_bound(scores.items.begin(), scores.items.end(), s) -
          scores.items.begin());
    };
    const double sa = scores.strengths[idx(c.item_a)];
    const double sb = scores.strengths[idx(c.item_b)];
    const double sw = c.winner == c.item_a ? sa : sb;
    ll += std::log(sw / (sa + sb));
  }
  return ll;
}

/// Maximum-likelihood Bradley-Terry fit via the minorization-maximization
/// iteration:  s_i <- W_i / sum_j n_ij / (s_i + s_j).
///
/// Rejects comparison graphs that are not connected (listing the components)
/// and datasets where an item has only wins or only losses, both of which
/// make the MLE diverge. `virtual_ties` instead adds half a win each way
/// between every item and the anchor.
inline BtScores bt_fit(const std::vector<Comparison>& comparisons,
                       const BtOptions& opts) {
  if (comparisons.empty())
    throw std::invalid_argument("bt_fit: no comparisons");
  if (opts.anchor.empty())
    throw std::invalid_argument("bt_fit: anchor item must be set");

  std::map<std::string, int> index;
  for (const Comparison& c : comparisons) {
    if (c.item_a == c.item_b)
      throw std::invalid_argument("bt_fit: self-comparison of " + c.item_a);
    if (c.winner != c.item_a && c.winner != c.item_b)
      throw std::invalid_argument("bt_fit: winner '" + c.winner +
                                  "' is neither '" + c.item_a + "' nor '" +
                                  c.item_b + "'");
    index.emplace(c.item_a, 0);
    index.emplace(c.item_b, 0);
  }
  if (index.find(opts.anchor) == index.end())
    throw std::invalid_argument("bt_fit: anchor item '" + opts.anchor +
                                "' appears in no comparison");
  const int k = static_cast<int>(index.size());
  if (k < 2) throw std::invalid_argument("bt_fit: need at least two items");
  {
    int i = 0;
    for (auto& [name, id] : index) id = i++;
  }
  std::vector<std::string> items(k);
  for (const auto& [name, id] : index) items[id] = name;

  // Pair totals and wins (doubles: virtual ties contribute halves).
  std::vector<double> wins(k, 0.0), losses(k, 0.0);
  std::vector<double> pair_n(static_cast<std::size_t>(k) * k, 0.0);
  for (const Comparison& c : comparisons) {
    const int a = index[c.item_a], b = index[c.item_b];
    pair_n[static_cast<std::size_t>(a) * k + b] += 1.0;
    pair_n[static_cast<std::size_t>(b) * k + a] += 1.0;
    const int w = c.winner == c.item_a ? a : b;
    const int l = w == a ? b : a;
    wins[w] += 1.0;
    losses[l] += 1.0;
  }

  // Connectivity check over the comparison graph.
  {
    std::vector<int> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if (pair_n[static_cast<std::size_t>(a) * k + b] > 0.0)
          parent[find(a)] = find(b);
    std::map<int, std::vector<std::string>> comps;
    for (int v = 0; v < k; ++v) comps[find(v)].push_back(items[v]);
    if (comps.size() > 1) {
      std::string msg = "bt_fit: comparison graph is disconnected:";
      for (auto& [root, members] : comps) {
        msg += " {";
        for (std::size_t i = 0; i < members.size(); ++i)
          msg += (i ? "," : "") + members[i];
        msg += "}";
      }
      throw std::invalid_argument(msg);
    }
  }

  const int anchor = index[opts.anchor];
  if (opts.virtual_ties) {
    for (int v = 0; v < k; ++v) {
      if (v == anchor) continue;
      pair_n[static_cast<std::size_t>(v) * k + anchor] += 1.0;
      pair_n[static_cast<std::size_t>(anchor) * k + v] += 1.0;
      wins[v] += 0.5;
      losses[v] += 0.5;
      wins[anchor] += 0.5;
      losses[anchor] += 0.5;
    }
  }
  for (int v = 0; v < k; ++v) {
    if (wins[v] == 0.0 && losses[v] == 0.0)
      throw std::invalid_argument("bt_fit: item '" + items[v] +
                                  "' has no wins and no losses");
    if (wins[v] == 0.0 || losses[v] == 0.0)
      throw std::invalid_argument(
          "bt_fit: item '" + items[v] + "' has " +
          (wins[v] == 0.0 ? "no wins" : "no losses") +
          "; the MLE diverges (consider virtual_ties)");
  }

  std::vector<double> s(k, 1.0), next(k, 0.0);
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    double max_rel = 0.0;
    for (int i = 0; i < k; ++i) {
      double denom = 0.0;
      for (int j = 0; j < k; ++j) {
        const double nij = pair_n[static_cast<std::size_t>(i) * k + j];
        if (nij > 0.0) denom += nij / (s[i] + s[j]);
      }
      next[i] = wins[i] / denom;
    }
    // Fix the scale gauge: geometric mean 1.
    double log_mean = 0.0;
    for (int i = 0; i < k; ++i) log_mean += std::log(next[i]);
    log_mean /= k;
    for (int i = 0; i < k; ++i) next[i] *= std::exp(-log_mean);
    for (int i = 0; i < k; ++i)
      max_rel = std::max(max_rel, std::abs(next[i] - s[i]) / s[i]);
    s.swap(next);
    if (max_rel < opts.tol) break;
  }

  BtScores out;
  out.items = std::move(items);
  out.strengths = s;
  out.lp_factors.resize(k);
  for (int i = 0; i < k; ++i) out.lp_factors[i] = s[i] / s[anchor];
  return out;
}

/// Uniformly random pairings with Bradley-Terry-distributed winners; the
/// test-data generator mirroring the pairwise survey protocol.
inline std::vector<Comparison> simulate_tournament(
    std::span<const std::string> items, std::span<const double> true_scores,
    int n_comparisons, std::uint64_t seed) {
  if (items.size() != true_scores.size() || items.size() < 2)
    throw std::invalid_argument("simulate_tournament: bad item/score lists");
  for (double v : true_scores)
    if (!(v > 0.0))
      throw std::invalid_argument("simulate_tournament: scores must be positive");
  Rng rng(seed);
  const int k = static_cast<int>(items.size());
  std::vector<Comparison> out;
  out.reserve(static_cast<std::size_t>(n_comparisons));
  for (int t = 0; t < n_comparisons; ++t) {
    const int a = static_cast<int>(rng.uniform_index(k));
    int b = static_cast<int>(rng.uniform_index(k - 1));
    if (b >= a) ++b;
    const double pa = true_scores[a] / (true_scores[a] + true_scores[b]);
    const bool a_wins = rng.bernoulli(pa);
    out.push_back({items[a], items[b], a_wins ? items[a] : items[b]});
  }
  return out;
}

}  // namespace bdn
