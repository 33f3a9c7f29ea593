#include "gansearch/evolution.hpp"
#include "gansearch/gan.hpp"
#include "gansearch/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gansearch;

namespace {

std::vector<Individual> random_pop(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Individual> pop(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& ind = pop[static_cast<std::size_t>(i)];
    ind.id = i;
    ind.objectives.fid_like = u(rng);
    ind.objectives.inv_is = u(rng);
    ind.objectives.size = u(rng);
    ind.objectives.collapsed = false;
  }
  return pop;
}

void BM_NonDominatedSort(benchmark::State& state) {
  auto rng = rng_stream(1, "bench_nds");
  auto pop = random_pop(static_cast<int>(state.range(0)), rng);
  const std::vector<ObjectiveId> active = {ObjectiveId::FidLike,
                                           ObjectiveId::InvIs};
  for (auto _ : state) {
    auto partition = non_dominated_sort(pop, active);
    benchmark::DoNotOptimize(partition);
  }
}
BENCHMARK(BM_NonDominatedSort)->Arg(8)->Arg(32)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  const auto space = SearchSpaceSpec::generator();
  auto net = init_supernet(space, InitScheme::KaimingUniform, 1);
  auto rng = rng_stream(1, "bench_fb");
  const auto genome = random_genome(space, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch x(static_cast<int>(state.range(0)), space.input_dim);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
  const Matrix g = Matrix::Ones(x.rows(), space.output_dim);

  for (auto _ : state) {
    Tape tape;
    forward(subnet_view(net, genome), x, &tape);
    auto res = backward(subnet_view(net, genome), tape, g);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(40)->Arg(80)->Arg(1000);

void BM_GanTrainBatch(benchmark::State& state) {
  const auto gspace = SearchSpaceSpec::generator();
  const auto dspace = SearchSpaceSpec::discriminator();
  auto rng = rng_stream(2, "bench_step");
  auto gen = init_standalone(gspace, random_genome(gspace, rng),
                             InitScheme::KaimingUniform, 1);
  auto dis = init_standalone(dspace, default_discriminator_genome(dspace),
                             InitScheme::KaimingUniform, 2);
  const auto data = TargetDistribution::ring();
  const NoiseSource noise{gspace.input_dim};
  const TrainParams tp;
  GanPair pair{net_view(gen), net_view(dis), LossKind::Hinge, 40, 80};

  for (auto _ : state) {
    const Batch real = data.sample(40, rng);
    auto res = gan_train_batch(pair, real, noise, rng, tp);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_GanTrainBatch);

void BM_Metrics(benchmark::State& state) {
  const auto ring = TargetDistribution::ring();
  auto rng = rng_stream(3, "bench_metrics");
  const Batch samples = ring.sample(static_cast<int>(state.range(0)), rng);
  const auto stats = analytic_stats(ring);
  for (auto _ : state) {
    auto v = compute_objectives(samples, ring, stats, 1234);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
