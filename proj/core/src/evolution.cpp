#include "gansearch/evolution.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace gansearch {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b,
               std::span<const ObjectiveId> active) {
  bool strictly = false;
  for (ObjectiveId id : active) {
    const double av = a.get(id), bv = b.get(id);
    if (av > bv) return false;
    if (av < bv) strictly = true;
  }
  return strictly;
}

RankPartition non_dominated_sort(std::vector<Individual>& pop,
                                 std::span<const ObjectiveId> active) {
  std::vector<int> healthy, collapsed;
  for (int i = 0; i < static_cast<int>(pop.size()); ++i)
    (pop[static_cast<std::size_t>(i)].objectives.collapsed ? collapsed : healthy)
        .push_back(i);

  // Deb-style: count dominators and keep dominee lists, then peel by count.
  const int n = static_cast<int>(healthy.size());
  std::vector<int> dom_count(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& oi = pop[static_cast<std::size_t>(healthy[static_cast<std::size_t>(i)])].objectives;
      const auto& oj = pop[static_cast<std::size_t>(healthy[static_cast<std::size_t>(j)])].objectives;
      if (dominates(oi, oj, active)) {
        dominated[static_cast<std::size_t>(i)].push_back(j);
        ++dom_count[static_cast<std::size_t>(j)];
      } else if (dominates(oj, oi, active)) {
        dominated[static_cast<std::size_t>(j)].push_back(i);
        ++dom_count[static_cast<std::size_t>(i)];
      }
    }
  }

  RankPartition partition;
  std::vector<int> front;
  for (int i = 0; i < n; ++i)
    if (dom_count[static_cast<std::size_t>(i)] == 0) front.push_back(i);
  while (!front.empty()) {
    std::vector<int> next;
    std::vector<int> members;
    for (int i : front) {
      members.push_back(healthy[static_cast<std::size_t>(i)]);
      for (int j : dominated[static_cast<std::size_t>(i)])
        if (--dom_count[static_cast<std::size_t>(j)] == 0) next.push_back(j);
    }
    partition.push_back(std::move(members));
    front = std::move(next);
  }

  if (!collapsed.empty()) partition.push_back(collapsed);
  for (std::size_t r = 0; r < partition.size(); ++r)
    for (int i : partition[r])
      pop[static_cast<std::size_t>(i)].rank = static_cast<int>(r);
  return partition;
}

bool selection_less(const Individual& a, const Individual& b) {
  const auto key = [](const Individual& x) {
    return std::make_tuple(x.objectives.fid_like, x.objectives.inv_is,
                           x.objectives.size, x.genome.hash());
  };
  return key(a) < key(b);
}

std::vector<int> select_parents(const std::vector<Individual>& pop,
                                const RankPartition& partition, int count) {
  if (count > static_cast<int>(pop.size()))
    throw std::invalid_argument("select_parents: count exceeds population");
  long healthy = 0;
  for (const auto& ind : pop)
    if (!ind.objectives.collapsed) ++healthy;
  if (healthy < count)
    throw std::runtime_error(
        "select_parents: only " + std::to_string(healthy) +
        " healthy individuals for " + std::to_string(count) +
        " parent slots (population collapsed)");

  std::vector<int> parents;
  for (const auto& rank : partition) {
    if (static_cast<int>(parents.size()) == count) break;
    std::vector<int> members;
    for (int i : rank)
      if (!pop[static_cast<std::size_t>(i)].objectives.collapsed)
        members.push_back(i);
    if (static_cast<int>(parents.size() + members.size()) <= count) {
      parents.insert(parents.end(), members.begin(), members.end());
      continue;
    }
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      return selection_less(pop[static_cast<std::size_t>(a)],
                            pop[static_cast<std::size_t>(b)]);
    });
    for (int i : members) {
      if (static_cast<int>(parents.size()) == count) break;
      parents.push_back(i);
    }
  }
  return parents;
}

std::vector<ArchitectureGenome> make_offspring(
    const std::vector<const ArchitectureGenome*>& parents, double p_cross,
    double p_mut, int target, std::mt19937_64& rng) {
  if (parents.size() < 2)
    throw std::invalid_argument("make_offspring: need at least 2 parents");
  const bool dedup = !(p_cross == 0.0 && p_mut == 0.0);

  std::unordered_set<std::uint64_t> seen;
  for (const auto* p : parents) seen.insert(p->hash());

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);

  std::vector<ArchitectureGenome> out;
  while (static_cast<int>(out.size()) < target) {
    std::vector<ArchitectureGenome> batch;
    for (int attempt = 0; attempt < 50; ++attempt) {
      batch.clear();
      std::size_t i = pick(rng), j = pick(rng);
      while (j == i) j = pick(rng);
      if (coin(rng) < p_cross) {
        auto [a, b] = crossover(*parents[i], *parents[j], rng);
        batch.push_back(std::move(a));
        batch.push_back(std::move(b));
      } else {
        batch.push_back(*parents[i]);
      }
      for (auto& c : batch)
        if (coin(rng) < p_mut) c = mutate(c, rng);
      if (dedup) {
        std::erase_if(batch, [&](const ArchitectureGenome& c) {
          return seen.contains(c.hash());
        });
      }
      if (!batch.empty()) break;
    }
    bool forced = false;
    if (batch.empty()) {  // retries exhausted: accept a duplicate clone
      batch.push_back(*parents[pick(rng)]);
      forced = true;
    }
    for (auto& c : batch) {
      if (static_cast<int>(out.size()) == target) break;
      if (!forced && dedup && seen.contains(c.hash())) continue;
      seen.insert(c.hash());
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace gansearch
