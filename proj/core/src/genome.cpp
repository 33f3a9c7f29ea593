#include "gansearch/genome.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gansearch {

using nlohmann::json;

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::None: return "none";
    case OpKind::Identity: return "identity";
    case OpKind::DenseTanh: return "dense_tanh";
    case OpKind::DenseRelu: return "dense_relu";
    case OpKind::DenseElu: return "dense_elu";
    case OpKind::RepeatDouble: return "repeat_double";
    case OpKind::LinearExpand: return "linear_expand";
    case OpKind::MeanPoolHalve: return "mean_pool_halve";
    case OpKind::LinearContract: return "linear_contract";
  }
  return "?";
}

OpKind op_kind_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(OpKind::LinearContract); ++i) {
    if (s == to_string(static_cast<OpKind>(i))) return static_cast<OpKind>(i);
  }
  throw std::invalid_argument("unknown op kind: " + std::string(s));
}

bool op_is_trainable(OpKind k) {
  switch (k) {
    case OpKind::DenseTanh:
    case OpKind::DenseRelu:
    case OpKind::DenseElu:
    case OpKind::LinearExpand:
    case OpKind::LinearContract:
      return true;
    default:
      return false;
  }
}

long op_param_count(OpKind k, int in_width, int out_width) {
  if (!op_is_trainable(k)) return 0;
  return static_cast<long>(in_width) * out_width + out_width;  // W + bias
}

namespace {

struct EdgeDef {
  int from, to;
  EdgeRole role;
};

// Up-cell: two parallel expand edges on entry, five normal edges among the
// expanded nodes, node 4 is the output.
constexpr EdgeDef kGenCell[7] = {
    {0, 1, EdgeRole::Expand}, {0, 2, EdgeRole::Expand},
    {1, 3, EdgeRole::Normal}, {2, 3, EdgeRole::Normal},
    {1, 4, EdgeRole::Normal}, {2, 4, EdgeRole::Normal},
    {3, 4, EdgeRole::Normal},
};

// Down-cell: the inverted up-cell (edges reversed, nodes relabelled), so the
// five normal edges come first and the two reduce edges feed the output.
constexpr EdgeDef kDisCell[7] = {
    {0, 1, EdgeRole::Normal}, {0, 2, EdgeRole::Normal},
    {0, 3, EdgeRole::Normal}, {1, 2, EdgeRole::Normal},
    {1, 3, EdgeRole::Normal}, {2, 4, EdgeRole::Reduce},
    {3, 4, EdgeRole::Reduce},
};

const std::vector<OpKind> kExpandOps = {OpKind::RepeatDouble,
                                        OpKind::LinearExpand};
const std::vector<OpKind> kNormalOps = {OpKind::None, OpKind::Identity,
                                        OpKind::DenseTanh, OpKind::DenseRelu,
                                        OpKind::DenseElu};
const std::vector<OpKind> kReduceOps = {OpKind::MeanPoolHalve,
                                        OpKind::LinearContract};

void check_space(const SearchSpaceSpec& s) {
  for (const auto& slot : s.slots) {
    if (slot.candidates.size() < 2)
      throw std::logic_error("edge slot with fewer than 2 candidates");
    bool has_none = std::find(slot.candidates.begin(), slot.candidates.end(),
                              OpKind::None) != slot.candidates.end();
    if (slot.role == EdgeRole::Normal && !has_none)
      throw std::logic_error("normal slot missing the none op");
    if (slot.role != EdgeRole::Normal && has_none)
      throw std::logic_error("expand/reduce slot must not offer none");
  }
}

}  // namespace

SearchSpaceSpec SearchSpaceSpec::generator(int cells, int base_width,
                                           int noise_dim, int data_dim) {
  SearchSpaceSpec s;
  s.role = Role::Generator;
  s.cells = cells;
  s.input_dim = noise_dim;
  s.output_dim = data_dim;
  s.stem_width = base_width;

  int w = base_width;
  int index = 0;
  for (int c = 0; c < cells; ++c) {
    s.cell_in.push_back(w);
    const int wide = 2 * w;
    for (const auto& def : kGenCell) {
      EdgeSlot slot;
      slot.index = index++;
      slot.cell = c;
      slot.from_node = def.from;
      slot.to_node = def.to;
      slot.role = def.role;
      slot.candidates = def.role == EdgeRole::Expand ? kExpandOps : kNormalOps;
      slot.in_width = def.from == 0 ? w : wide;
      slot.out_width = wide;
      s.slots.push_back(std::move(slot));
    }
    s.cell_out.push_back(wide);
    w = wide;
  }
  std::ostringstream id;
  id << "gen-c" << cells << "-b" << base_width << "-z" << noise_dim << "-d"
     << data_dim;
  s.id = id.str();
  check_space(s);
  return s;
}

SearchSpaceSpec SearchSpaceSpec::discriminator(int cells, int base_width,
                                               int data_dim) {
  if (base_width % (1 << cells) != 0)
    throw std::invalid_argument(
        "discriminator base width must be divisible by 2^cells");
  SearchSpaceSpec s;
  s.role = Role::Discriminator;
  s.cells = cells;
  s.input_dim = data_dim;
  s.output_dim = 1;
  s.stem_width = base_width;

  int w = base_width;
  int index = 0;
  for (int c = 0; c < cells; ++c) {
    s.cell_in.push_back(w);
    const int half = w / 2;
    for (const auto& def : kDisCell) {
      EdgeSlot slot;
      slot.index = index++;
      slot.cell = c;
      slot.from_node = def.from;
      slot.to_node = def.to;
      slot.role = def.role;
      slot.candidates = def.role == EdgeRole::Reduce ? kReduceOps : kNormalOps;
      slot.in_width = w;
      slot.out_width = def.role == EdgeRole::Reduce ? half : w;
      s.slots.push_back(std::move(slot));
    }
    s.cell_out.push_back(half);
    w = half;
  }
  std::ostringstream id;
  id << "dis-c" << cells << "-b" << base_width << "-d" << data_dim;
  s.id = id.str();
  check_space(s);
  return s;
}

int EdgeGene::op_index() const {
  int idx = -1;
  for (std::size_t i = 0; i < onehot.size(); ++i) {
    if (!onehot[i]) continue;
    if (idx >= 0) return -1;  // more than one bit
    idx = static_cast<int>(i);
  }
  return idx;
}

std::uint64_t ArchitectureGenome::hash() const {
  std::uint64_t h = fnv1a_u64(static_cast<std::uint64_t>(role));
  for (const auto& g : genes) {
    h = fnv1a_u64(static_cast<std::uint64_t>(g.edge_index), h);
    h = fnv1a(g.onehot.data(), g.onehot.size(), h);
  }
  return h;
}

OpKind ArchitectureGenome::op_at(const SearchSpaceSpec& space, int slot) const {
  return space.slots[static_cast<std::size_t>(slot)]
      .candidates[static_cast<std::size_t>(genes[static_cast<std::size_t>(slot)].op_index())];
}

ArchitectureGenome random_genome(const SearchSpaceSpec& space,
                                 std::mt19937_64& rng) {
  ArchitectureGenome g;
  g.role = space.role;
  g.space_id = space.id;
  g.genes.reserve(space.slots.size());
  for (const auto& slot : space.slots) {
    EdgeGene gene;
    gene.edge_index = slot.index;
    gene.onehot.assign(slot.candidates.size(), 0);
    std::uniform_int_distribution<std::size_t> pick(0, slot.candidates.size() - 1);
    gene.onehot[pick(rng)] = 1;
    g.genes.push_back(std::move(gene));
  }
  return g;
}

std::vector<std::string> validate(const ArchitectureGenome& g,
                                  const SearchSpaceSpec& space) {
  std::vector<std::string> issues;
  if (g.role != space.role) issues.push_back("role mismatch");
  if (g.space_id != space.id)
    issues.push_back("space mismatch: genome for '" + g.space_id +
                     "', space is '" + space.id + "'");
  if (g.genes.size() != space.slots.size()) {
    std::ostringstream os;
    os << "length mismatch: " << g.genes.size() << " genes for "
       << space.slots.size() << " slots";
    issues.push_back(os.str());
    return issues;  // per-gene checks are meaningless past this point
  }
  for (std::size_t i = 0; i < g.genes.size(); ++i) {
    const auto& gene = g.genes[i];
    const auto& slot = space.slots[i];
    if (gene.edge_index != slot.index) {
      std::ostringstream os;
      os << "edge index mismatch at slot " << i;
      issues.push_back(os.str());
    }
    if (gene.onehot.size() != slot.candidates.size()) {
      std::ostringstream os;
      os << "candidate count mismatch at edge " << i;
      issues.push_back(os.str());
      continue;
    }
    int bits = 0;
    for (auto b : gene.onehot) bits += b ? 1 : 0;
    if (bits != 1) {
      std::ostringstream os;
      os << "not one-hot at edge " << i;
      issues.push_back(os.str());
    }
  }
  return issues;
}

std::pair<ArchitectureGenome, ArchitectureGenome> crossover(
    const ArchitectureGenome& a, const ArchitectureGenome& b,
    std::mt19937_64& rng) {
  if (a.role != b.role || a.space_id != b.space_id ||
      a.genes.size() != b.genes.size())
    throw std::invalid_argument("crossover: parents from different spaces");
  std::uniform_int_distribution<std::size_t> pick(0, a.genes.size() - 1);
  const std::size_t k = pick(rng);
  ArchitectureGenome ca = a, cb = b;
  std::swap(ca.genes[k], cb.genes[k]);
  return {std::move(ca), std::move(cb)};
}

ArchitectureGenome mutate(const ArchitectureGenome& g, std::mt19937_64& rng) {
  ArchitectureGenome out = g;
  std::uniform_int_distribution<std::size_t> pick_edge(0, g.genes.size() - 1);
  const std::size_t e = pick_edge(rng);
  auto& gene = out.genes[e];
  const int cur = gene.op_index();
  const int n = static_cast<int>(gene.onehot.size());
  std::uniform_int_distribution<int> pick_alt(0, n - 2);
  int alt = pick_alt(rng);
  if (alt >= cur) ++alt;  // skip the current position
  gene.onehot.assign(gene.onehot.size(), 0);
  gene.onehot[static_cast<std::size_t>(alt)] = 1;
  return out;
}

long param_count(const ArchitectureGenome& g, const SearchSpaceSpec& space) {
  long total = 0;
  for (std::size_t i = 0; i < g.genes.size(); ++i) {
    const auto& slot = space.slots[i];
    const OpKind op = slot.candidates[static_cast<std::size_t>(g.genes[i].op_index())];
    total += op_param_count(op, slot.in_width, slot.out_width);
  }
  return total;
}

std::string genome_to_json(const ArchitectureGenome& g) {
  json j;
  j["role"] = to_string(g.role);
  j["space_id"] = g.space_id;
  json genes = json::array();
  for (const auto& gene : g.genes) {
    json bits = json::array();
    for (auto b : gene.onehot) bits.push_back(static_cast<int>(b));
    genes.push_back(bits);
  }
  j["genes"] = genes;
  return j.dump(2);
}

ArchitectureGenome genome_from_json(const std::string& text) {
  json j = json::parse(text);
  ArchitectureGenome g;
  const std::string role = j.at("role").get<std::string>();
  if (role == "generator") {
    g.role = Role::Generator;
  } else if (role == "discriminator") {
    g.role = Role::Discriminator;
  } else {
    throw std::invalid_argument("genome: bad role '" + role + "'");
  }
  g.space_id = j.at("space_id").get<std::string>();
  int index = 0;
  for (const auto& bits : j.at("genes")) {
    EdgeGene gene;
    gene.edge_index = index++;
    for (const auto& b : bits)
      gene.onehot.push_back(static_cast<std::uint8_t>(b.get<int>() ? 1 : 0));
    g.genes.push_back(std::move(gene));
  }
  return g;
}

void save_genome(const ArchitectureGenome& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << genome_to_json(g) << "\n";
}

ArchitectureGenome load_genome(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return genome_from_json(ss.str());
}

namespace {

ArchitectureGenome from_op_table(const SearchSpaceSpec& space,
                                 const std::vector<OpKind>& per_cell_ops) {
  ArchitectureGenome g;
  g.role = space.role;
  g.space_id = space.id;
  const int spc = space.slots_per_cell();
  for (const auto& slot : space.slots) {
    const OpKind want = per_cell_ops[static_cast<std::size_t>(slot.index % spc)];
    EdgeGene gene;
    gene.edge_index = slot.index;
    gene.onehot.assign(slot.candidates.size(), 0);
    auto it = std::find(slot.candidates.begin(), slot.candidates.end(), want);
    if (it == slot.candidates.end())
      throw std::logic_error("fixed genome op not offered by slot");
    gene.onehot[static_cast<std::size_t>(it - slot.candidates.begin())] = 1;
    g.genes.push_back(std::move(gene));
  }
  return g;
}

}  // namespace

ArchitectureGenome default_discriminator_genome(const SearchSpaceSpec& space) {
  // Mid-capacity: two dense paths per cell plus identity shortcuts.
  // Slots per down-cell: (0,1) (0,2) (0,3) (1,2) (1,3) | (2,4) (3,4)
  return from_op_table(space, {OpKind::DenseRelu, OpKind::Identity,
                               OpKind::None, OpKind::DenseRelu,
                               OpKind::Identity, OpKind::LinearContract,
                               OpKind::MeanPoolHalve});
}

ArchitectureGenome simple_discriminator_genome(const SearchSpaceSpec& space) {
  // One dense op per cell on a single path, parameter-free reductions.
  return from_op_table(space, {OpKind::DenseRelu, OpKind::None, OpKind::None,
                               OpKind::None, OpKind::Identity,
                               OpKind::MeanPoolHalve, OpKind::MeanPoolHalve});
}

ArchitectureGenome default_generator_genome(const SearchSpaceSpec& space) {
  // Slots per up-cell: (0,1) (0,2) expand | (1,3) (2,3) (1,4) (2,4) (3,4)
  return from_op_table(space, {OpKind::LinearExpand, OpKind::RepeatDouble,
                               OpKind::DenseTanh, OpKind::Identity,
                               OpKind::None, OpKind::Identity,
                               OpKind::DenseRelu});
}

}  // namespace gansearch
