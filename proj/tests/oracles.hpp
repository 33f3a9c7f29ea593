#pragma once

// Test-only oracles, independent of the library code paths they check.

#include "gansearch/metrics.hpp"
#include "gansearch/supernet.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracles {

using gansearch::Batch;
using gansearch::Matrix;
using gansearch::NetView;
using gansearch::ObjectiveId;
using gansearch::ObjectiveVector;

// Naive repeated-peel non-dominated sort: O(P^2 K) per front, collapsed
// individuals forced into a trailing rank.
inline std::vector<std::vector<int>> naive_peel(
    const std::vector<ObjectiveVector>& objs,
    const std::vector<ObjectiveId>& active) {
  auto dom = [&](int a, int b) {
    bool strict = false;
    for (ObjectiveId id : active) {
      const double av = objs[static_cast<std::size_t>(a)].get(id);
      const double bv = objs[static_cast<std::size_t>(b)].get(id);
      if (av > bv) return false;
      if (av < bv) strict = true;
    }
    return strict;
  };

  std::vector<int> remaining, collapsed;
  for (int i = 0; i < static_cast<int>(objs.size()); ++i)
    (objs[static_cast<std::size_t>(i)].collapsed ? collapsed : remaining)
        .push_back(i);

  std::vector<std::vector<int>> fronts;
  while (!remaining.empty()) {
    std::vector<int> front, rest;
    for (int i : remaining) {
      bool dominated = false;
      for (int j : remaining)
        if (j != i && dom(j, i)) {
          dominated = true;
          break;
        }
      (dominated ? rest : front).push_back(i);
    }
    fronts.push_back(front);
    remaining = rest;
  }
  if (!collapsed.empty()) fronts.push_back(collapsed);
  return fronts;
}

// Central finite difference of a scalar function of one parameter entry.
template <typename F>
double central_diff(double& param, const F& loss, double eps = 1e-5) {
  const double saved = param;
  param = saved + eps;
  const double up = loss();
  param = saved - eps;
  const double down = loss();
  param = saved;
  return (up - down) / (2.0 * eps);
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

// 3-sigma binomial band around expected probability p for n trials.
inline bool freq_within_3sigma(long hits, long n, double p) {
  const double freq = static_cast<double>(hits) / static_cast<double>(n);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return std::abs(freq - p) <= 3.0 * sigma;
}

}  // namespace oracles
