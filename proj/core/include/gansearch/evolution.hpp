#pragma once

#include "gansearch/genome.hpp"
#include "gansearch/metrics.hpp"

#include <optional>
#include <span>
#include <vector>

namespace gansearch {

struct Individual {
  ArchitectureGenome genome;
  ObjectiveVector objectives;
  std::optional<int> rank;
  int id = 0;  // stable within a round
};

/// Disjoint Pareto ranks, best first; indices into the sorted population.
using RankPartition = std::vector<std::vector<int>>;

inline const std::vector<ObjectiveId> kDefaultObjectives = {
    ObjectiveId::FidLike, ObjectiveId::InvIs};

/// True iff a is no worse than b on every active objective and strictly
/// better on at least one (minimization). Irreflexive by construction.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b,
               std::span<const ObjectiveId> active);

/// Front peeling via domination counts. Collapsed individuals are excluded
/// from peeling and always form the final rank. Assigns Individual::rank.
RankPartition non_dominated_sort(std::vector<Individual>& pop,
                                 std::span<const ObjectiveId> active);

/// Deterministic tie-break: (fid_like, inv_is, size, genome hash) ascending.
/// Used inside the overflowing rank and for "best individual" picks.
bool selection_less(const Individual& a, const Individual& b);

/// Fill parents from rank 0 upward; the overflowing rank is ordered by
/// (fid_like, inv_is, size, genome hash) ascending and truncated. Collapsed
/// individuals are never selected; throws std::runtime_error when fewer than
/// `count` healthy individuals exist, and std::invalid_argument when
/// count > |pop|.
std::vector<int> select_parents(const std::vector<Individual>& pop,
                                const RankPartition& partition, int count);

/// Repeatedly crossover (p_cross) or clone, then mutate each candidate with
/// p_mut, deduplicating by hash against parents and accepted offspring with up
/// to 50 retries per slot. Always returns exactly `target` genomes.
std::vector<ArchitectureGenome> make_offspring(
    const std::vector<const ArchitectureGenome*>& parents, double p_cross,
    double p_mut, int target, std::mt19937_64& rng);

}  // namespace gansearch
