#pragma once

#include "gansearch/types.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gansearch {

// Candidate operations. Dense ops are square (width-preserving), expand ops
// double the feature width, reduce ops halve it.
enum class OpKind : int {
  None,
  Identity,
  DenseTanh,
  DenseRelu,
  DenseElu,
  RepeatDouble,    // expand, parameter-free (nearest-neighbour style repeat)
  LinearExpand,    // expand, trainable dense w -> 2w
  MeanPoolHalve,   // reduce, parameter-free (adjacent-pair average)
  LinearContract,  // reduce, trainable dense w -> w/2
};

const char* to_string(OpKind k);
OpKind op_kind_from_string(std::string_view s);
bool op_is_trainable(OpKind k);
long op_param_count(OpKind k, int in_width, int out_width);

enum class EdgeRole : int { Expand, Normal, Reduce };

struct EdgeSlot {
  int index = 0;  // global slot index (cell-major)
  int cell = 0;
  int from_node = 0;  // nodes are 0..4 within a cell, 0 = cell input
  int to_node = 0;
  EdgeRole role = EdgeRole::Normal;
  std::vector<OpKind> candidates;
  int in_width = 0;
  int out_width = 0;
};

/// The search space: cell count, per-slot candidate lists, and all feature
/// widths. Cells are DAGs over five nodes; node 0 carries the previous cell's
/// output. Generator cells expand the width on entry (two parallel expand
/// edges), discriminator cells reduce it on exit (two parallel reduce edges).
struct SearchSpaceSpec {
  Role role = Role::Generator;
  int cells = 3;
  int input_dim = 0;   // noise dim (generator) / data dim (discriminator)
  int output_dim = 0;  // data dim (generator) / 1 (discriminator)
  int stem_width = 0;  // width entering cell 0 (stem output)
  std::vector<EdgeSlot> slots;
  std::vector<int> cell_in;
  std::vector<int> cell_out;
  std::string id;

  int total_slots() const { return static_cast<int>(slots.size()); }
  int head_width() const { return cell_out.back(); }
  int slots_per_cell() const { return total_slots() / cells; }

  static SearchSpaceSpec generator(int cells = 3, int base_width = 8,
                                   int noise_dim = 8, int data_dim = 2);
  static SearchSpaceSpec discriminator(int cells = 3, int base_width = 64,
                                       int data_dim = 2);
};

struct EdgeGene {
  int edge_index = 0;
  std::vector<std::uint8_t> onehot;  // exactly one bit set

  int op_index() const;  // position of the set bit, -1 if malformed
  bool operator==(const EdgeGene&) const = default;
};

struct ArchitectureGenome {
  Role role = Role::Generator;
  std::string space_id;
  std::vector<EdgeGene> genes;

  std::uint64_t hash() const;  // pure function of (role, genes)
  OpKind op_at(const SearchSpaceSpec& space, int slot) const;
  bool operator==(const ArchitectureGenome&) const = default;
};

/// Uniform draw over every slot's candidates.
ArchitectureGenome random_genome(const SearchSpaceSpec& space,
                                 std::mt19937_64& rng);

/// All violations (length mismatch, non-one-hot genes, role/space mismatch);
/// empty result means the genome is well-formed. Never throws.
std::vector<std::string> validate(const ArchitectureGenome& g,
                                  const SearchSpaceSpec& space);

/// Swap one uniformly chosen edge gene between the parents. Parents must share
/// role and space; throws std::invalid_argument otherwise.
std::pair<ArchitectureGenome, ArchitectureGenome> crossover(
    const ArchitectureGenome& a, const ArchitectureGenome& b,
    std::mt19937_64& rng);

/// Move the set bit of one uniformly chosen edge to a different candidate,
/// uniformly among the alternatives. The result always differs from g.
ArchitectureGenome mutate(const ArchitectureGenome& g, std::mt19937_64& rng);

/// Trainable parameters of the activated operations only ("none", identity
/// and the pooling/repeat ops contribute 0). Stem and head are not genome ops
/// and are excluded.
long param_count(const ArchitectureGenome& g, const SearchSpaceSpec& space);

// JSON round trip: {"role": ..., "space_id": ..., "genes": [[0,1,0], ...]}
std::string genome_to_json(const ArchitectureGenome& g);
ArchitectureGenome genome_from_json(const std::string& text);
void save_genome(const ArchitectureGenome& g, const std::filesystem::path& path);
ArchitectureGenome load_genome(const std::filesystem::path& path);

// Fixed architectures shipped with the repo.
ArchitectureGenome default_discriminator_genome(const SearchSpaceSpec& space);
ArchitectureGenome simple_discriminator_genome(const SearchSpaceSpec& space);
ArchitectureGenome default_generator_genome(const SearchSpaceSpec& space);

}  // namespace gansearch
