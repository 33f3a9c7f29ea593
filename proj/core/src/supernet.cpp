#include "gansearch/supernet.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gansearch {

using nlohmann::json;

std::string block_name(BlockKey k) {
  if (k.edge == kStemEdge) return "stem";
  if (k.edge == kHeadEdge) return "head";
  std::ostringstream os;
  os << "e" << k.edge << "_op" << k.op;
  return os.str();
}

std::uint64_t ParamStore::digest() const {
  std::uint64_t h = kFnvBasis;
  for (const auto& [key, block] : blocks) {
    h = fnv1a_u64(static_cast<std::uint64_t>(key.edge), h);
    h = fnv1a_u64(static_cast<std::uint64_t>(key.op), h);
    h = fnv1a_matrix(block.w, h);
    h = fnv1a(block.b.data(), sizeof(double) * static_cast<std::size_t>(block.b.size()), h);
  }
  return h;
}

std::uint64_t ParamStore::digest_with_moments() const {
  std::uint64_t h = digest();
  for (const auto& [key, block] : blocks) {
    h = fnv1a_matrix(block.adam.m_w, h);
    h = fnv1a_matrix(block.adam.v_w, h);
    h = fnv1a(block.adam.m_b.data(), sizeof(double) * static_cast<std::size_t>(block.adam.m_b.size()), h);
    h = fnv1a(block.adam.v_b.data(), sizeof(double) * static_cast<std::size_t>(block.adam.v_b.size()), h);
    h = fnv1a_u64(static_cast<std::uint64_t>(block.adam.step), h);
  }
  return h;
}

namespace {

struct BlockShape {
  int in = 0, out = 0;
};

// W is (in x out); rows index the source features.
BlockShape shape_for(const SearchSpaceSpec& space, BlockKey key) {
  if (key.edge == kStemEdge) return {space.input_dim, space.stem_width};
  if (key.edge == kHeadEdge) return {space.head_width(), space.output_dim};
  const auto& slot = space.slots[static_cast<std::size_t>(key.edge)];
  return {slot.in_width, slot.out_width};
}

ParamBlock make_block(const SearchSpaceSpec& space, BlockKey key,
                      InitScheme scheme, std::uint64_t seed) {
  const BlockShape s = shape_for(space, key);
  ParamBlock block;
  block.w = Matrix::Zero(s.in, s.out);
  block.b = Vector::Zero(s.out);
  if (scheme == InitScheme::KaimingUniform) {
    auto rng = rng_stream(seed, "init", static_cast<std::uint64_t>(key.edge + 16),
                          static_cast<std::uint64_t>(key.op));
    const double limit = std::sqrt(6.0 / s.in);
    std::uniform_real_distribution<double> u(-limit, limit);
    for (int j = 0; j < s.out; ++j)
      for (int i = 0; i < s.in; ++i) block.w(i, j) = u(rng);
    // fan-in scaled bias; an exactly-zero bias would pin relu units fed by
    // zero-valued nodes onto the kink, dead to gradients
    const double blimit = 1.0 / std::sqrt(static_cast<double>(s.in));
    std::uniform_real_distribution<double> ub(-blimit, blimit);
    for (int j = 0; j < s.out; ++j) block.b(j) = ub(rng);
  }
  block.adam.m_w = Matrix::Zero(s.in, s.out);
  block.adam.v_w = Matrix::Zero(s.in, s.out);
  block.adam.m_b = Vector::Zero(s.out);
  block.adam.v_b = Vector::Zero(s.out);
  return block;
}

std::vector<BlockKey> all_param_keys(const SearchSpaceSpec& space) {
  std::vector<BlockKey> keys = {{kHeadEdge, 0}, {kStemEdge, 0}};
  for (const auto& slot : space.slots)
    for (std::size_t o = 0; o < slot.candidates.size(); ++o)
      if (op_is_trainable(slot.candidates[o]))
        keys.push_back({slot.index, static_cast<int>(o)});
  return keys;
}

int node_width(const SearchSpaceSpec& space, int cell, int node) {
  if (node == 0) return space.cell_in[static_cast<std::size_t>(cell)];
  if (space.role == Role::Generator)
    return space.cell_out[static_cast<std::size_t>(cell)];
  // discriminator: intermediate nodes keep the cell input width, node 4 halves
  return node == 4 ? space.cell_out[static_cast<std::size_t>(cell)]
                   : space.cell_in[static_cast<std::size_t>(cell)];
}

void check_view(const NetView& net) {
  if (!net.store || !net.space || !net.genome)
    throw std::invalid_argument("incomplete net view");
  if (net.genome->space_id != net.space->id ||
      net.genome->genes.size() != net.space->slots.size())
    throw std::invalid_argument("genome does not match the net's space");
}

}  // namespace

SuperNet init_supernet(const SearchSpaceSpec& space, InitScheme scheme,
                       std::uint64_t seed) {
  SuperNet net{space, {}};
  for (BlockKey key : all_param_keys(space))
    net.store.blocks.emplace(key, make_block(space, key, scheme, seed));
  return net;
}

StandaloneNet init_standalone(const SearchSpaceSpec& space,
                              const ArchitectureGenome& genome,
                              InitScheme scheme, std::uint64_t seed) {
  StandaloneNet net{space, genome, {}};
  for (BlockKey key : active_param_keys(space, genome))
    net.store.blocks.emplace(key, make_block(space, key, scheme, seed));
  return net;
}

std::vector<BlockKey> active_param_keys(const SearchSpaceSpec& space,
                                        const ArchitectureGenome& genome) {
  std::vector<BlockKey> keys = {{kHeadEdge, 0}, {kStemEdge, 0}};
  for (std::size_t i = 0; i < space.slots.size(); ++i) {
    const int o = genome.genes[i].op_index();
    if (op_is_trainable(space.slots[i].candidates[static_cast<std::size_t>(o)]))
      keys.push_back({space.slots[i].index, o});
  }
  return keys;
}

namespace {

Matrix apply_dense(const ParamBlock& p, const Matrix& in, OpKind op) {
  Matrix pre = in * p.w;
  pre.rowwise() += p.b.transpose();
  switch (op) {
    case OpKind::DenseTanh:
      return pre.array().tanh().matrix();
    case OpKind::DenseRelu:
      return pre.cwiseMax(0.0);
    case OpKind::DenseElu:
      return pre.unaryExpr(
          [](double x) { return x > 0.0 ? x : std::expm1(x); });
    case OpKind::LinearExpand:
    case OpKind::LinearContract:
      return pre;
    default:
      throw std::logic_error("apply_dense: not a dense op");
  }
}

Matrix apply_repeat(const Matrix& in) {
  Matrix out(in.rows(), 2 * in.cols());
  for (int c = 0; c < in.cols(); ++c) {
    out.col(2 * c) = in.col(c);
    out.col(2 * c + 1) = in.col(c);
  }
  return out;
}

Matrix apply_pool(const Matrix& in) {
  Matrix out(in.rows(), in.cols() / 2);
  for (int c = 0; c < out.cols(); ++c)
    out.col(c) = 0.5 * (in.col(2 * c) + in.col(2 * c + 1));
  return out;
}

// d(activation)/d(pre) recovered from the stored post-activation value.
Matrix act_grad_from_out(OpKind op, const Matrix& out) {
  switch (op) {
    case OpKind::DenseTanh:
      return (1.0 - out.array().square()).matrix();
    case OpKind::DenseRelu:
      return (out.array() > 0.0).cast<double>().matrix();
    case OpKind::DenseElu:
      return out.unaryExpr([](double y) { return y > 0.0 ? 1.0 : y + 1.0; });
    default:
      throw std::logic_error("act_grad_from_out: not an activated op");
  }
}

}  // namespace

Batch forward(const NetView& net, const Batch& input, Tape* tape) {
  check_view(net);
  const SearchSpaceSpec& space = *net.space;
  if (input.cols() != space.input_dim)
    throw std::invalid_argument("forward: input feature dim mismatch");

  if (tape) {
    tape->store = net.store;
    tape->version = net.store->version;
    tape->input = input;
    tape->cells.assign(static_cast<std::size_t>(space.cells), {});
  }

  const ParamBlock& stem = net.store->blocks.at({kStemEdge, 0});
  Matrix h = input * stem.w;
  h.rowwise() += stem.b.transpose();

  const int spc = space.slots_per_cell();
  const auto n = input.rows();

  for (int c = 0; c < space.cells; ++c) {
    std::vector<Matrix> nodes(5);
    std::vector<bool> written(5, false), used(5, false);
    nodes[0] = std::move(h);
    written[0] = true;

    CellTrace* trace = tape ? &tape->cells[static_cast<std::size_t>(c)] : nullptr;
    if (trace) trace->edges.assign(static_cast<std::size_t>(spc), {});

    for (int e = 0; e < spc; ++e) {
      const int slot_index = c * spc + e;
      const EdgeSlot& slot = space.slots[static_cast<std::size_t>(slot_index)];
      const int oi = net.genome->genes[static_cast<std::size_t>(slot_index)].op_index();
      if (oi < 0) throw std::invalid_argument("forward: malformed genome gene");
      const OpKind op = slot.candidates[static_cast<std::size_t>(oi)];
      if (trace) trace->edges[static_cast<std::size_t>(e)].op = op;
      if (op == OpKind::None) continue;

      used[static_cast<std::size_t>(slot.from_node)] = true;
      if (!written[static_cast<std::size_t>(slot.from_node)]) {
        nodes[static_cast<std::size_t>(slot.from_node)] =
            Matrix::Zero(n, node_width(space, c, slot.from_node));
        written[static_cast<std::size_t>(slot.from_node)] = true;
      }
      const Matrix& in = nodes[static_cast<std::size_t>(slot.from_node)];

      Matrix out;
      switch (op) {
        case OpKind::Identity:
          out = in;
          break;
        case OpKind::RepeatDouble:
          out = apply_repeat(in);
          break;
        case OpKind::MeanPoolHalve:
          out = apply_pool(in);
          break;
        default: {
          const ParamBlock& p = net.store->blocks.at({slot_index, oi});
          out = apply_dense(p, in, op);
          if (trace) trace->edges[static_cast<std::size_t>(e)].out = out;
          break;
        }
      }

      auto& dst = nodes[static_cast<std::size_t>(slot.to_node)];
      if (!written[static_cast<std::size_t>(slot.to_node)]) {
        dst = std::move(out);
        written[static_cast<std::size_t>(slot.to_node)] = true;
      } else {
        dst += out;
      }
    }

    // Cell output: intermediate nodes that feed nothing downstream, provided
    // their width matches (in discriminator cells only node 4 qualifies).
    const int out_w = space.cell_out[static_cast<std::size_t>(c)];
    Matrix cell_out = Matrix::Zero(n, out_w);
    for (int v = 1; v <= 4; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      if (node_width(space, c, v) != out_w) continue;
      if (written[static_cast<std::size_t>(v)])
        cell_out += nodes[static_cast<std::size_t>(v)];
      if (trace) trace->output_nodes.push_back(v);
    }
    if (trace) trace->nodes = std::move(nodes);
    h = std::move(cell_out);
  }

  if (tape) tape->head_in = h;
  const ParamBlock& head = net.store->blocks.at({kHeadEdge, 0});
  Matrix y = h * head.w;
  y.rowwise() += head.b.transpose();
  return y;
}

BackwardResult backward(const NetView& net, const Tape& tape,
                        const Matrix& out_grad) {
  check_view(net);
  if (tape.store != net.store || tape.version != net.store->version)
    throw std::logic_error("backward: stale tape (weights changed since forward)");
  const SearchSpaceSpec& space = *net.space;
  if (out_grad.rows() != tape.input.rows() || out_grad.cols() != space.output_dim)
    throw std::invalid_argument("backward: out_grad shape mismatch");

  BackwardResult res;
  for (BlockKey key : active_param_keys(space, *net.genome)) {
    const ParamBlock& p = net.store->blocks.at(key);
    res.grads.emplace(key, GradBlock{Matrix::Zero(p.w.rows(), p.w.cols()),
                                     Vector::Zero(p.b.size())});
  }

  const ParamBlock& head = net.store->blocks.at({kHeadEdge, 0});
  {
    GradBlock& g = res.grads.at({kHeadEdge, 0});
    g.w += tape.head_in.transpose() * out_grad;
    g.b += out_grad.colwise().sum();
  }
  Matrix adj_out = out_grad * head.w.transpose();

  const int spc = space.slots_per_cell();
  const auto n = tape.input.rows();

  for (int c = space.cells - 1; c >= 0; --c) {
    const CellTrace& trace = tape.cells[static_cast<std::size_t>(c)];
    std::vector<Matrix> adj(5);
    std::vector<bool> has_adj(5, false);
    auto add_adj = [&](int v, const Matrix& m) {
      if (!has_adj[static_cast<std::size_t>(v)]) {
        adj[static_cast<std::size_t>(v)] = m;
        has_adj[static_cast<std::size_t>(v)] = true;
      } else {
        adj[static_cast<std::size_t>(v)] += m;
      }
    };
    for (int v : trace.output_nodes) add_adj(v, adj_out);

    for (int e = spc - 1; e >= 0; --e) {
      const int slot_index = c * spc + e;
      const EdgeSlot& slot = space.slots[static_cast<std::size_t>(slot_index)];
      const OpKind op = trace.edges[static_cast<std::size_t>(e)].op;
      if (op == OpKind::None) continue;
      if (!has_adj[static_cast<std::size_t>(slot.to_node)]) continue;
      const Matrix& g = adj[static_cast<std::size_t>(slot.to_node)];

      switch (op) {
        case OpKind::Identity:
          add_adj(slot.from_node, g);
          break;
        case OpKind::RepeatDouble: {
          Matrix gi(n, slot.in_width);
          for (int k = 0; k < slot.in_width; ++k)
            gi.col(k) = g.col(2 * k) + g.col(2 * k + 1);
          add_adj(slot.from_node, gi);
          break;
        }
        case OpKind::MeanPoolHalve: {
          Matrix gi(n, slot.in_width);
          for (int k = 0; k < slot.out_width; ++k) {
            gi.col(2 * k) = 0.5 * g.col(k);
            gi.col(2 * k + 1) = 0.5 * g.col(k);
          }
          add_adj(slot.from_node, gi);
          break;
        }
        default: {
          const int oi = net.genome->genes[static_cast<std::size_t>(slot_index)].op_index();
          const ParamBlock& p = net.store->blocks.at({slot_index, oi});
          const Matrix* src = &trace.nodes[static_cast<std::size_t>(slot.from_node)];
          Matrix zero_src;
          if (src->size() == 0) {  // source node was never written: zeros
            zero_src = Matrix::Zero(n, slot.in_width);
            src = &zero_src;
          }
          Matrix dpre;
          if (op == OpKind::LinearExpand || op == OpKind::LinearContract) {
            dpre = g;
          } else {
            dpre = g.cwiseProduct(
                act_grad_from_out(op, trace.edges[static_cast<std::size_t>(e)].out));
          }
          GradBlock& gb = res.grads.at({slot_index, oi});
          gb.w += src->transpose() * dpre;
          gb.b += dpre.colwise().sum();
          add_adj(slot.from_node, dpre * p.w.transpose());
          break;
        }
      }
    }

    adj_out = has_adj[0] ? std::move(adj[0])
                         : Matrix::Zero(n, node_width(space, c, 0));
  }

  const ParamBlock& stem = net.store->blocks.at({kStemEdge, 0});
  {
    GradBlock& g = res.grads.at({kStemEdge, 0});
    g.w += tape.input.transpose() * adj_out;
    g.b += adj_out.colwise().sum();
  }
  res.input_grad = adj_out * stem.w.transpose();
  return res;
}

void adam_step(ParamStore& store, const GradMap& grads, const AdamParams& p) {
  for (const auto& [key, g] : grads) {
    auto it = store.blocks.find(key);
    if (it == store.blocks.end())
      throw std::invalid_argument("adam_step: gradient for unknown block " +
                                  block_name(key));
    ParamBlock& blk = it->second;
    if (g.w.rows() != blk.w.rows() || g.w.cols() != blk.w.cols() ||
        g.b.size() != blk.b.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch at " +
                                  block_name(key));
    AdamMoments& a = blk.adam;
    a.step += 1;
    const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(a.step));
    const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(a.step));
    a.m_w = p.beta1 * a.m_w + (1.0 - p.beta1) * g.w;
    a.v_w = p.beta2 * a.v_w + (1.0 - p.beta2) * g.w.cwiseProduct(g.w);
    a.m_b = p.beta1 * a.m_b + (1.0 - p.beta1) * g.b;
    a.v_b = p.beta2 * a.v_b + (1.0 - p.beta2) * g.b.cwiseProduct(g.b);
    blk.w.array() -= p.lr * (a.m_w.array() / bc1) /
                     ((a.v_w.array() / bc2).sqrt() + p.eps);
    blk.b.array() -= p.lr * (a.m_b.array() / bc1) /
                     ((a.v_b.array() / bc2).sqrt() + p.eps);
  }
  store.version += 1;
}

StandaloneNet extract_subnet(const SuperNet& net,
                             const ArchitectureGenome& genome) {
  StandaloneNet out{net.space, genome, {}};
  for (BlockKey key : active_param_keys(net.space, genome))
    out.store.blocks.emplace(key, net.store.blocks.at(key));
  return out;
}

void copy_weights(StandaloneNet& dst, const StandaloneNet& src,
                  bool copy_moments) {
  if (!(dst.genome == src.genome))
    throw std::invalid_argument("copy_weights: genome mismatch");
  dst.store.blocks = src.store.blocks;
  if (!copy_moments) {
    for (auto& [key, blk] : dst.store.blocks) {
      blk.adam.m_w.setZero();
      blk.adam.v_w.setZero();
      blk.adam.m_b.setZero();
      blk.adam.v_b.setZero();
      blk.adam.step = 0;
    }
  }
  dst.store.version += 1;
}

namespace {

json matrix_entry(BlockKey key, const char* name, const double* data, long rows,
                  long cols) {
  json j;
  j["edge"] = key.edge;
  j["op"] = key.op;
  j["name"] = name;
  j["rows"] = rows;
  j["cols"] = cols;
  json arr = json::array();
  for (long i = 0; i < rows * cols; ++i) arr.push_back(data[i]);
  j["data"] = arr;
  return j;
}

}  // namespace

void save_checkpoint(const ParamStore& store, Role role,
                     const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["role"] = to_string(role);
  json blocks = json::array();
  for (const auto& [key, blk] : store.blocks) {
    blocks.push_back(matrix_entry(key, "w", blk.w.data(), blk.w.rows(), blk.w.cols()));
    blocks.push_back(matrix_entry(key, "b", blk.b.data(), blk.b.size(), 1));
  }
  j["blocks"] = blocks;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << "\n";
}

ParamStore load_checkpoint(const std::filesystem::path& path, Role* role) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j = json::parse(in);
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw std::runtime_error("checkpoint: missing or unsupported version field");
  if (role)
    *role = j.at("role").get<std::string>() == "generator"
                ? Role::Generator
                : Role::Discriminator;
  ParamStore store;
  for (const auto& e : j.at("blocks")) {
    BlockKey key{e.at("edge").get<int>(), e.at("op").get<int>()};
    const long rows = e.at("rows").get<long>();
    const long cols = e.at("cols").get<long>();
    const auto& data = e.at("data");
    ParamBlock& blk = store.blocks[key];
    if (e.at("name").get<std::string>() == "w") {
      blk.w.resize(rows, cols);
      for (long i = 0; i < rows * cols; ++i) blk.w.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
    } else {
      blk.b.resize(rows);
      for (long i = 0; i < rows; ++i) blk.b(i) = data[static_cast<std::size_t>(i)].get<double>();
    }
  }
  for (auto& [key, blk] : store.blocks) {
    blk.adam.m_w = Matrix::Zero(blk.w.rows(), blk.w.cols());
    blk.adam.v_w = Matrix::Zero(blk.w.rows(), blk.w.cols());
    blk.adam.m_b = Vector::Zero(blk.b.size());
    blk.adam.v_b = Vector::Zero(blk.b.size());
  }
  return store;
}

}  // namespace gansearch
