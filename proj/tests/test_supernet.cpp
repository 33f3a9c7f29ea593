#include "gansearch/supernet.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace gansearch;

namespace {

bool bits_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bits_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool block_bits_equal(const ParamBlock& a, const ParamBlock& b) {
  return bits_equal(a.w, b.w) && bits_equal(a.b, b.b);
}

Batch random_batch(int n, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch b(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) b(i, j) = normal(rng);
  return b;
}

// Genome with fixed ops: expand/reduce slots get `structural`, normal slots
// get `normal_op`, except the listed (slot % 7) positions get `special`.
ArchitectureGenome fixed_genome(const SearchSpaceSpec& space, OpKind structural,
                                OpKind normal_op,
                                std::vector<int> special_slots = {},
                                OpKind special = OpKind::Identity) {
  ArchitectureGenome g;
  g.role = space.role;
  g.space_id = space.id;
  for (const auto& slot : space.slots) {
    OpKind want = slot.role == EdgeRole::Normal ? normal_op : structural;
    for (int s : special_slots)
      if (slot.index % space.slots_per_cell() == s && slot.role == EdgeRole::Normal)
        want = special;
    EdgeGene gene;
    gene.edge_index = slot.index;
    gene.onehot.assign(slot.candidates.size(), 0);
    bool found = false;
    for (std::size_t i = 0; i < slot.candidates.size(); ++i)
      if (slot.candidates[i] == want) {
        gene.onehot[i] = 1;
        found = true;
      }
    REQUIRE(found);
    g.genes.push_back(gene);
  }
  return g;
}

}  // namespace

TEST_SUITE("supernet") {

TEST_CASE("init: deterministic, zero scheme, block census") {
  const auto space = SearchSpaceSpec::generator();
  const auto a = init_supernet(space, InitScheme::KaimingUniform, 42);
  const auto b = init_supernet(space, InitScheme::KaimingUniform, 42);
  CHECK(a.store.digest_with_moments() == b.store.digest_with_moments());
  const auto c = init_supernet(space, InitScheme::KaimingUniform, 43);
  CHECK(a.store.digest() != c.store.digest());

  const auto z = init_supernet(space, InitScheme::Zeros, 1);
  for (const auto& [key, blk] : z.store.blocks) {
    CHECK(blk.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK((blk.b.size() == 0 || blk.b.cwiseAbs().maxCoeff() == 0.0));
  }

  // Independent census from the space table: stem + head + trainable candidates.
  long expected = 2;
  for (const auto& slot : space.slots)
    for (OpKind k : slot.candidates)
      if (op_is_trainable(k)) ++expected;
  CHECK(static_cast<long>(a.store.blocks.size()) == expected);
}

TEST_CASE("forward: expand chain alone when all normals are none") {
  const auto space = SearchSpaceSpec::generator(3, 4, 6, 2);
  auto net = init_supernet(space, InitScheme::KaimingUniform, 5);
  auto rng = rng_stream(5, "fw");
  const Batch x = random_batch(9, 6, rng);

  // E0 = linear expand, E1 = repeat, all normal edges none.
  auto all_none = fixed_genome(space, OpKind::RepeatDouble, OpKind::None);
  for (auto& gene : all_none.genes) {
    const auto& slot = space.slots[static_cast<std::size_t>(gene.edge_index)];
    if (slot.role == EdgeRole::Expand && slot.index % 7 == 0) {
      gene.onehot.assign(slot.candidates.size(), 0);
      for (std::size_t i = 0; i < slot.candidates.size(); ++i)
        if (slot.candidates[i] == OpKind::LinearExpand) gene.onehot[i] = 1;
    }
  }

  // Hand-computed reference: per cell, output = lin(h) + repeat(h).
  const ParamBlock& stem = net.store.blocks.at({kStemEdge, 0});
  const ParamBlock& head = net.store.blocks.at({kHeadEdge, 0});
  Matrix h = x * stem.w;
  h.rowwise() += stem.b.transpose();
  for (int c = 0; c < 3; ++c) {
    const ParamBlock& lin = net.store.blocks.at({c * 7 + 0, 1});
    Matrix e0 = h * lin.w;
    e0.rowwise() += lin.b.transpose();
    Matrix e1(h.rows(), 2 * h.cols());
    for (int k = 0; k < h.cols(); ++k) {
      e1.col(2 * k) = h.col(k);
      e1.col(2 * k + 1) = h.col(k);
    }
    h = e0 + e1;
  }
  Matrix want = h * head.w;
  want.rowwise() += head.b.transpose();

  const Batch got = forward(subnet_view(net, all_none), x);
  CHECK((got - want).cwiseAbs().maxCoeff() == 0.0);

  // An identity-only normal path passes the expand value through unchanged:
  // same output as the all-none genome.
  const auto id_path = [&] {
    auto g = all_none;
    for (auto& gene : g.genes) {
      const auto& slot = space.slots[static_cast<std::size_t>(gene.edge_index)];
      const int local = slot.index % 7;
      if (local == 2 || local == 6) {  // (1->3) and (3->4)
        gene.onehot.assign(slot.candidates.size(), 0);
        for (std::size_t i = 0; i < slot.candidates.size(); ++i)
          if (slot.candidates[i] == OpKind::Identity) gene.onehot[i] = 1;
      }
    }
    return g;
  }();
  const Batch got_id = forward(subnet_view(net, id_path), x);
  CHECK((got_id - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: supernet and extracted subnet agree exactly") {
  for (const auto& space :
       {SearchSpaceSpec::generator(), SearchSpaceSpec::discriminator()}) {
    auto net = init_supernet(space, InitScheme::KaimingUniform, 9);
    auto rng = rng_stream(9, "eq");
    for (int i = 0; i < 20; ++i) {
      const auto genome = random_genome(space, rng);
      auto sub = extract_subnet(net, genome);
      const Batch x = random_batch(7, space.input_dim, rng);
      const Batch a = forward(subnet_view(net, genome), x);
      const Batch b = forward(net_view(sub), x);
      CHECK(bits_equal(a, b));
    }
  }
}

TEST_CASE("forward: dimension mismatch throws") {
  const auto space = SearchSpaceSpec::generator();
  auto net = init_supernet(space, InitScheme::KaimingUniform, 2);
  auto rng = rng_stream(2, "dim");
  const auto genome = random_genome(space, rng);
  const Batch bad = random_batch(3, space.input_dim + 1, rng);
  CHECK_THROWS_AS(forward(subnet_view(net, genome), bad),
                  std::invalid_argument);
}

TEST_CASE("backward: gradient map keys are exactly the active blocks") {
  const auto space = SearchSpaceSpec::discriminator();
  auto net = init_supernet(space, InitScheme::KaimingUniform, 21);
  auto rng = rng_stream(21, "keys");
  const auto genome = random_genome(space, rng);
  const Batch x = random_batch(5, space.input_dim, rng);
  Tape tape;
  forward(subnet_view(net, genome), x, &tape);
  const auto res = backward(subnet_view(net, genome), tape,
                            Matrix::Ones(5, space.output_dim));
  const auto active = active_param_keys(space, genome);
  REQUIRE(res.grads.size() == active.size());
  for (BlockKey k : active) CHECK(res.grads.contains(k));
}

TEST_CASE("backward: zero out_grad gives zero gradients") {
  const auto space = SearchSpaceSpec::generator();
  auto net = init_supernet(space, InitScheme::KaimingUniform, 23);
  auto rng = rng_stream(23, "zg");
  const auto genome = random_genome(space, rng);
  const Batch x = random_batch(4, space.input_dim, rng);
  Tape tape;
  forward(subnet_view(net, genome), x, &tape);
  const auto res = backward(subnet_view(net, genome), tape,
                            Matrix::Zero(4, space.output_dim));
  for (const auto& [key, g] : res.grads) {
    CHECK(g.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.b.cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(res.input_grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  // >= 100 random (genome, input) pairs across both supernets; relative
  // error <= 1e-4 at eps = 1e-5 on a random parameter subset per pair.
  const double eps = 1e-5;
  const double tol = 1e-4;
  double worst = 0.0;
  long checked = 0;

  for (const auto& space : {SearchSpaceSpec::generator(2, 4, 4, 2),
                            SearchSpaceSpec::discriminator(2, 8, 2)}) {
    auto net = init_supernet(space, InitScheme::KaimingUniform, 77);
    auto rng = rng_stream(77, "fd", space.role == Role::Generator ? 0 : 1);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (int pair = 0; pair < 55; ++pair) {
      const auto genome = random_genome(space, rng);
      const Batch x = random_batch(4, space.input_dim, rng);
      Matrix weights(4, space.output_dim);
      for (int i = 0; i < weights.rows(); ++i)
        for (int j = 0; j < weights.cols(); ++j) weights(i, j) = normal(rng);

      const NetView view = subnet_view(net, genome);
      const auto loss = [&] {
        return (forward(view, x).cwiseProduct(weights)).sum();
      };

      Tape tape;
      forward(view, x, &tape);
      const auto res = backward(view, tape, weights);

      for (const auto& [key, g] : res.grads) {
        ParamBlock& blk = net.store.blocks.at(key);
        std::uniform_int_distribution<int> pr(0, static_cast<int>(blk.w.rows()) - 1);
        std::uniform_int_distribution<int> pc(0, static_cast<int>(blk.w.cols()) - 1);
        for (int probe = 0; probe < 2; ++probe) {
          const int i = pr(rng), j = pc(rng);
          const double num = oracles::central_diff(blk.w(i, j), loss, eps);
          const double err = oracles::rel_err(num, g.w(i, j));
          worst = std::max(worst, err);
          ++checked;
          CHECK(err <= tol);
        }
        std::uniform_int_distribution<int> pb(0, static_cast<int>(blk.b.size()) - 1);
        const int bi = pb(rng);
        const double num = oracles::central_diff(blk.b(bi), loss, eps);
        const double err = oracles::rel_err(num, g.b(bi));
        worst = std::max(worst, err);
        ++checked;
        CHECK(err <= tol);
      }

      // input gradient against the same oracle
      Batch xcopy = x;
      const NetView vcopy = view;
      const auto loss_x = [&] {
        return (forward(vcopy, xcopy).cwiseProduct(weights)).sum();
      };
      std::uniform_int_distribution<int> px(0, 3);
      const int xi = px(rng);
      std::uniform_int_distribution<int> pxj(0, space.input_dim - 1);
      const int xj = pxj(rng);
      const double num = oracles::central_diff(xcopy(xi, xj), loss_x, eps);
      CHECK(oracles::rel_err(num, res.input_grad(xi, xj)) <= tol);
    }
  }
  MESSAGE("finite-difference probes: ", checked, ", worst rel err: ", worst);
  CHECK(checked >= 100);
}

TEST_CASE("adam: hand-computed scalar step and freeze behavior") {
  ParamStore store;
  ParamBlock blk;
  blk.w = Matrix::Zero(1, 1);
  blk.b = Vector::Zero(1);
  blk.adam.m_w = Matrix::Zero(1, 1);
  blk.adam.v_w = Matrix::Zero(1, 1);
  blk.adam.m_b = Vector::Zero(1);
  blk.adam.v_b = Vector::Zero(1);
  store.blocks.emplace(BlockKey{0, 0}, blk);
  store.blocks.emplace(BlockKey{1, 0}, blk);

  GradMap grads;
  grads.emplace(BlockKey{0, 0}, GradBlock{Matrix::Ones(1, 1), Vector::Zero(1)});

  const AdamParams p{2e-4, 0.0, 0.9, 1e-8};
  adam_step(store, grads, p);

  // beta1 = 0: mhat = 1; vhat = 1; delta = -lr / (1 + eps)
  const double want = -p.lr / (1.0 + p.eps);
  CHECK(store.blocks.at({0, 0}).w(0, 0) == doctest::Approx(want).epsilon(1e-12));
  // zero gradient entry (the bias) on a fresh block: unchanged
  CHECK(store.blocks.at({0, 0}).b(0) == 0.0);
  // block not in grads: bit-identical
  CHECK(block_bits_equal(store.blocks.at({1, 0}), blk));

  GradMap bad;
  bad.emplace(BlockKey{9, 9}, GradBlock{Matrix::Ones(1, 1), Vector::Zero(1)});
  CHECK_THROWS_AS(adam_step(store, bad, p), std::invalid_argument);
}

TEST_CASE("inactive blocks are bit-identical after train steps") {
  const auto space = SearchSpaceSpec::generator(2, 4, 4, 2);
  auto net = init_supernet(space, InitScheme::KaimingUniform, 55);
  auto rng = rng_stream(55, "freeze");
  const AdamParams p{1e-3, 0.0, 0.9, 1e-8};

  for (int step = 0; step < 200; ++step) {
    const auto genome = random_genome(space, rng);
    const auto active = active_param_keys(space, genome);
    std::map<BlockKey, ParamBlock> snapshot;
    for (const auto& [key, blk] : net.store.blocks) {
      if (std::find(active.begin(), active.end(), key) == active.end())
        snapshot.emplace(key, blk);
    }

    const Batch x = random_batch(6, space.input_dim, rng);
    Tape tape;
    forward(subnet_view(net, genome), x, &tape);
    const auto res = backward(subnet_view(net, genome), tape,
                              Matrix::Ones(6, space.output_dim));
    adam_step(net.store, res.grads, p);

    for (const auto& [key, before] : snapshot)
      CHECK(block_bits_equal(net.store.blocks.at(key), before));
  }
}

TEST_CASE("extract_subnet isolates the supernet") {
  const auto space = SearchSpaceSpec::generator(2, 4, 4, 2);
  auto net = init_supernet(space, InitScheme::KaimingUniform, 66);
  auto rng = rng_stream(66, "iso");
  const auto genome = random_genome(space, rng);

  auto sub = extract_subnet(net, genome);
  auto sub2 = extract_subnet(net, genome);
  const auto before = net.store.digest_with_moments();
  const auto sub2_before = sub2.store.digest_with_moments();

  const AdamParams p{1e-2, 0.0, 0.9, 1e-8};
  for (int i = 0; i < 10; ++i) {
    const Batch x = random_batch(5, space.input_dim, rng);
    Tape tape;
    forward(net_view(sub), x, &tape);
    const auto res =
        backward(net_view(sub), tape, Matrix::Ones(5, space.output_dim));
    adam_step(sub.store, res.grads, p);
  }
  CHECK(net.store.digest_with_moments() == before);
  CHECK(sub2.store.digest_with_moments() == sub2_before);
  CHECK(sub.store.digest() != sub2.store.digest());
}

TEST_CASE("copy_weights: bit-equal forwards, isolation, mismatch error") {
  const auto space = SearchSpaceSpec::generator(2, 4, 4, 2);
  auto rng = rng_stream(88, "cw");
  const auto genome = random_genome(space, rng);
  auto src = init_standalone(space, genome, InitScheme::KaimingUniform, 1);
  auto dst = init_standalone(space, genome, InitScheme::KaimingUniform, 2);

  copy_weights(dst, src);
  CHECK(dst.store.digest_with_moments() == src.store.digest_with_moments());
  const Batch x = random_batch(8, space.input_dim, rng);
  CHECK(bits_equal(forward(net_view(dst), x), forward(net_view(src), x)));

  // copies across P nets all agree
  std::vector<StandaloneNet> nets(4, dst);
  for (auto& n : nets)
    CHECK(bits_equal(forward(net_view(n), x), forward(net_view(src), x)));

  // mutating src afterwards leaves dst unchanged
  const auto dst_digest = dst.store.digest();
  src.store.blocks.at({kStemEdge, 0}).w.setConstant(3.0);
  CHECK(dst.store.digest() == dst_digest);

  auto other = init_standalone(space, mutate(genome, rng),
                               InitScheme::KaimingUniform, 3);
  CHECK_THROWS_AS(copy_weights(other, src), std::invalid_argument);

  copy_weights(dst, src, /*copy_moments=*/false);
  for (const auto& [key, blk] : dst.store.blocks) {
    CHECK(blk.adam.step == 0);
    CHECK(blk.adam.m_w.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("stale tape is rejected") {
  const auto space = SearchSpaceSpec::generator(2, 4, 4, 2);
  auto net = init_supernet(space, InitScheme::KaimingUniform, 91);
  auto rng = rng_stream(91, "stale");
  const auto genome = random_genome(space, rng);
  const Batch x = random_batch(4, space.input_dim, rng);
  Tape tape;
  forward(subnet_view(net, genome), x, &tape);
  const auto res = backward(subnet_view(net, genome), tape,
                            Matrix::Ones(4, space.output_dim));
  adam_step(net.store, res.grads, {1e-3, 0.0, 0.9, 1e-8});
  CHECK_THROWS_AS(backward(subnet_view(net, genome), tape,
                           Matrix::Ones(4, space.output_dim)),
                  std::logic_error);
}

TEST_CASE("checkpoint round trip preserves the weights") {
  const auto space = SearchSpaceSpec::discriminator(2, 8, 2);
  auto net = init_supernet(space, InitScheme::KaimingUniform, 99);
  const auto tmp = std::filesystem::temp_directory_path() / "ck_test.json";
  save_checkpoint(net.store, space.role, tmp);
  Role role;
  const ParamStore loaded = load_checkpoint(tmp, &role);
  CHECK(role == Role::Discriminator);
  CHECK(loaded.digest() == net.store.digest());
  std::filesystem::remove(tmp);

  const auto bad = std::filesystem::temp_directory_path() / "ck_bad.json";
  std::ofstream(bad) << "{\"role\":\"generator\",\"blocks\":[]}";
  CHECK_THROWS(load_checkpoint(bad));
  std::filesystem::remove(bad);
}

}  // TEST_SUITE
