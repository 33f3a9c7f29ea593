#pragma once

#include "gansearch/genome.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gansearch {

/// Parameter block address: a genome edge slot plus the candidate index within
/// that slot. The fixed stem and head blocks use the reserved edge indices.
struct BlockKey {
  int edge = 0;
  int op = 0;
  auto operator<=>(const BlockKey&) const = default;
};

inline constexpr int kStemEdge = -1;
inline constexpr int kHeadEdge = -2;

std::string block_name(BlockKey k);

struct AdamMoments {
  Matrix m_w, v_w;
  Vector m_b, v_b;
  long step = 0;
};

struct ParamBlock {
  Matrix w;
  Vector b;
  AdamMoments adam;  // shapes mirror w/b exactly
};

struct GradBlock {
  Matrix w;
  Vector b;
};
using GradMap = std::map<BlockKey, GradBlock>;

struct ParamStore {
  std::map<BlockKey, ParamBlock> blocks;
  long version = 0;  // bumped by every weight mutation; guards stale tapes

  std::uint64_t digest() const;               // weights only
  std::uint64_t digest_with_moments() const;  // weights + Adam state
};

enum class InitScheme { KaimingUniform, Zeros };

/// Shared parameter store over every candidate operation of a space. Subnets
/// are index views into it: a genome picks which blocks a forward pass touches.
struct SuperNet {
  SearchSpaceSpec space;
  ParamStore store;
};

/// A self-contained subnet: owns copies of exactly the blocks its genome
/// activates (plus stem and head). Training it never touches the SuperNet.
struct StandaloneNet {
  SearchSpaceSpec space;
  ArchitectureGenome genome;
  ParamStore store;
};

SuperNet init_supernet(const SearchSpaceSpec& space, InitScheme scheme,
                       std::uint64_t seed);
StandaloneNet init_standalone(const SearchSpaceSpec& space,
                              const ArchitectureGenome& genome,
                              InitScheme scheme, std::uint64_t seed);

/// Borrowed (store, space, genome) triple accepted by forward/backward; works
/// for SuperNet subnet views and StandaloneNets alike.
struct NetView {
  ParamStore* store = nullptr;
  const SearchSpaceSpec* space = nullptr;
  const ArchitectureGenome* genome = nullptr;
};

inline NetView subnet_view(SuperNet& net, const ArchitectureGenome& genome) {
  return {&net.store, &net.space, &genome};
}
inline NetView net_view(StandaloneNet& net) {
  return {&net.store, &net.space, &net.genome};
}

/// Stem, head, and every activated parameterized (edge, op) pair, in key order.
std::vector<BlockKey> active_param_keys(const SearchSpaceSpec& space,
                                        const ArchitectureGenome& genome);

struct EdgeTrace {
  OpKind op = OpKind::None;
  Matrix out;  // post-activation, kept for dense edges only
};

struct CellTrace {
  std::vector<Matrix> nodes;      // node values, empty = never written (zero)
  std::vector<EdgeTrace> edges;   // one per slot in the cell
  std::vector<int> output_nodes;  // nodes summed into the cell output
};

struct Tape {
  const ParamStore* store = nullptr;
  long version = -1;
  Matrix input;
  std::vector<CellTrace> cells;
  Matrix head_in;
};

/// Forward pass through the activated operations only. A node's value is the
/// sum of its incoming activated edges; the cell output is the sum of the
/// intermediate nodes with no activated outgoing edge (width permitting), so
/// "none" edges contribute exactly nothing. Records intermediates on tape when
/// given one. Throws std::invalid_argument on dimension/genome mismatch.
Batch forward(const NetView& net, const Batch& input, Tape* tape = nullptr);

struct BackwardResult {
  GradMap grads;      // keyed by every active parameterized block
  Matrix input_grad;  // d loss / d input, for chaining through the pair
};

/// Manual reverse pass over a tape from a matching forward. Throws
/// std::logic_error if weights changed since the tape was recorded.
BackwardResult backward(const NetView& net, const Tape& tape,
                        const Matrix& out_grad);

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Bias-corrected Adam applied to the keyed blocks only; blocks absent from
/// grads are untouched, moments included.
void adam_step(ParamStore& store, const GradMap& grads, const AdamParams& p);

/// Per-batch single-path sampling used during warm-up (alias of random_genome).
inline ArchitectureGenome uniform_path_sample(const SearchSpaceSpec& space,
                                              std::mt19937_64& rng) {
  return random_genome(space, rng);
}

/// Deep copy of the genome's active blocks (Adam state included); training the
/// result never mutates the SuperNet.
StandaloneNet extract_subnet(const SuperNet& net,
                             const ArchitectureGenome& genome);

/// Bit-exact weight copy between nets of identical genome. Adam moments are
/// copied too unless copy_moments is false (then they are zeroed).
void copy_weights(StandaloneNet& dst, const StandaloneNet& src,
                  bool copy_moments = true);

// Checkpoints: JSON dump keyed by (edge_index, op_index, block_name) with
// shape headers and a mandatory version field. Weights only.
void save_checkpoint(const ParamStore& store, Role role,
                     const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path,
                           Role* role = nullptr);

}  // namespace gansearch
