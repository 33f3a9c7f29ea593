#include "gansearch/pipeline.hpp"

#include "oracles.hpp"

#include <doctest.h>
#include <json.hpp>

#include <map>
#include <set>

using namespace gansearch;

namespace {

SearchConfig tiny_config(std::uint64_t seed = 1) {
  SearchConfig cfg;
  cfg.population = 4;
  cfg.rounds = 2;
  cfg.epochs_per_round = 1;
  cfg.warmup_epochs = 1;
  cfg.steps_per_epoch = 10;
  cfg.batch_g = 8;
  cfg.batch_d = 16;
  cfg.n_eval = 128;
  cfg.full_train_epochs = 2;
  cfg.final_eval_samples = 1000;
  cfg.seed = seed;
  cfg.workers = 1;
  cfg.space.cells = 3;
  cfg.space.gen_base_width = 4;
  cfg.space.dis_base_width = 16;
  cfg.space.noise_dim = 4;
  return cfg;
}

bool same_records_ignoring_wallclock(const RoundLog& a, const RoundLog& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ra = a[i], rb = b[i];
    ra.wallclock_ms = 0;
    rb.wallclock_ms = 0;
    if (to_jsonl_line(ra) != to_jsonl_line(rb)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config validation") {
  auto cfg = tiny_config();
  CHECK_NOTHROW(cfg.check());
  SUBCASE("odd population") {
    cfg.population = 5;
    CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  }
  SUBCASE("zero rounds") {
    cfg.rounds = 0;
    CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  }
  SUBCASE("n_eval below the metric floor") {
    cfg.n_eval = 50;
    CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  }
  SUBCASE("bad data kind") {
    cfg.data.kind = "spiral";
    CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  }
}

TEST_CASE("config json round trip") {
  auto cfg = tiny_config(42);
  cfg.loss = LossKind::Minimax;
  cfg.stage_order = StageOrder::DFirst;
  cfg.mode = SearchMode::Coupled;
  cfg.weight_resetting = false;
  cfg.objectives = {ObjectiveId::FidLike, ObjectiveId::InvIs, ObjectiveId::Size};
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
}

TEST_CASE("round record jsonl round trip, including infinities") {
  RoundRecord r;
  r.stage = "stage1";
  r.mode = "decoupled";
  r.role = "generator";
  r.cycle = 0;
  r.round = 3;
  r.id = 7;
  r.genome_hash = "00ff00ff00ff00ff";
  r.fid_like = std::numeric_limits<double>::infinity();
  r.inv_is = std::numeric_limits<double>::infinity();
  r.size = 123;
  r.rank = 2;
  r.collapsed = true;
  r.best_id = 1;
  r.wallclock_ms = 17.5;
  const auto line = to_jsonl_line(r);
  const auto back = record_from_jsonl(line);
  CHECK(back.collapsed);
  CHECK(std::isinf(back.fid_like));
  CHECK(to_jsonl_line(back) == line);
  CHECK_THROWS(record_from_jsonl("{not json"));
}

TEST_CASE("warmup: zero epochs leave the supernet untouched") {
  auto cfg = tiny_config(7);
  cfg.warmup_epochs = 0;
  const auto data = cfg.data.build();
  auto sn = init_supernet(cfg.gen_space(), InitScheme::KaimingUniform, 11);
  auto d_bar = init_standalone(cfg.dis_space(),
                               default_discriminator_genome(cfg.dis_space()),
                               InitScheme::KaimingUniform, 12);
  const auto digest = sn.store.digest_with_moments();
  const auto res = warmup(sn, d_bar, cfg, data, 0, "w0");
  CHECK(sn.store.digest_with_moments() == digest);
  CHECK(res.population.size() == 4);
}

TEST_CASE("warmup: same seed gives identical round-0 populations") {
  auto cfg = tiny_config(8);
  const auto data = cfg.data.build();
  std::vector<std::uint64_t> hashes[2];
  for (int run = 0; run < 2; ++run) {
    auto sn = init_supernet(cfg.gen_space(), InitScheme::KaimingUniform, 11);
    auto d_bar = init_standalone(cfg.dis_space(),
                                 default_discriminator_genome(cfg.dis_space()),
                                 InitScheme::KaimingUniform, 12);
    const auto res = warmup(sn, d_bar, cfg, data, 0, "wseed");
    for (const auto& g : res.population) hashes[run].push_back(g.hash());
  }
  CHECK(hashes[0] == hashes[1]);
}

TEST_CASE("warmup activates every op uniformly within 3 sigma") {
  auto cfg = tiny_config(9);
  cfg.warmup_epochs = 5;
  cfg.steps_per_epoch = 200;  // 1000 sampled paths
  cfg.space.cells = 1;        // keep the training cost down
  const auto data = cfg.data.build();
  auto sn = init_supernet(cfg.gen_space(), InitScheme::KaimingUniform, 21);
  auto d_bar = init_standalone(cfg.dis_space(),
                               default_discriminator_genome(cfg.dis_space()),
                               InitScheme::KaimingUniform, 22);
  const auto res = warmup(sn, d_bar, cfg, data, 0, "wuni");
  const long n = 1000;
  for (std::size_t s = 0; s < res.activation_counts.size(); ++s) {
    const auto& counts = res.activation_counts[s];
    const double p = 1.0 / static_cast<double>(counts.size());
    long total = 0;
    for (long c : counts) total += c;
    CHECK(total == n);
    for (long c : counts) CHECK(oracles::freq_within_3sigma(c, n, p));
  }
}

TEST_CASE("stage1: degenerate schedule evaluates the initial population") {
  auto cfg = tiny_config(10);
  cfg.rounds = 1;
  cfg.epochs_per_round = 0;
  cfg.warmup_epochs = 0;
  const auto data = cfg.data.build();
  auto d_bar = init_standalone(cfg.dis_space(),
                               default_discriminator_genome(cfg.dis_space()),
                               InitScheme::KaimingUniform,
                               rng_stream(cfg.seed, "fixed_d_init")());
  StageIO io;
  const auto res = stage1_search(cfg, data, d_bar, 0, "stage1", io);

  REQUIRE(res.log.size() == 4);  // R * P records
  // best = tie-break minimum of the logged round
  const RoundRecord* best = &res.log[0];
  for (const auto& r : res.log) {
    Individual a, b;
    a.objectives.fid_like = r.fid_like;
    a.objectives.inv_is = r.inv_is;
    a.objectives.size = r.size;
    b.objectives.fid_like = best->fid_like;
    b.objectives.inv_is = best->inv_is;
    b.objectives.size = best->size;
    if (a.objectives.fid_like < b.objectives.fid_like) best = &r;
  }
  CHECK(res.log[0].best_id == best->id);
  CHECK(to_hex(res.best_genome.hash()) == best->genome_hash);
  CHECK(res.best_net.genome == res.best_genome);
}

TEST_CASE("stage1: logs hold R x P records and parents persist") {
  auto cfg = tiny_config(11);
  const auto data = cfg.data.build();
  auto d_bar = init_standalone(cfg.dis_space(),
                               default_discriminator_genome(cfg.dis_space()),
                               InitScheme::KaimingUniform,
                               rng_stream(cfg.seed, "fixed_d_init")());
  const auto d_bar_genome = d_bar.genome;
  const auto d_bar_weights = d_bar.store.digest();
  StageIO io;
  const auto res = stage1_search(cfg, data, d_bar, 0, "stage1", io);
  CHECK(d_bar.genome == d_bar_genome);            // beta-bar never mutates
  CHECK(d_bar.store.digest() != d_bar_weights);   // but its weights do train
  REQUIRE(res.log.size() == static_cast<std::size_t>(cfg.rounds * cfg.population));

  // re-derive the selected parents of round 0 and find them in round 1
  std::vector<Individual> round0(static_cast<std::size_t>(cfg.population));
  std::set<std::string> round1_hashes;
  for (const auto& r : res.log) {
    if (r.round == 0) {
      auto& ind = round0[static_cast<std::size_t>(r.id)];
      ind.id = r.id;
      ind.objectives.fid_like = r.fid_like;
      ind.objectives.inv_is = r.inv_is;
      ind.objectives.size = r.size;
      ind.objectives.collapsed = r.collapsed;
    } else {
      round1_hashes.insert(r.genome_hash);
    }
  }
  auto pop = round0;
  const auto part = non_dominated_sort(pop, cfg.objectives);
  for (int idx : select_parents(pop, part, cfg.population / 2)) {
    // the parent genome hash must appear in the next round's population
    std::string h;
    for (const auto& r : res.log)
      if (r.round == 0 && r.id == idx) h = r.genome_hash;
    CHECK(round1_hashes.contains(h));
  }
}

TEST_CASE("stage2: weight resetting controls generator divergence") {
  auto cfg = tiny_config(12);
  cfg.rounds = 3;
  const auto data = cfg.data.build();
  const auto gspace = cfg.gen_space();
  auto grng = rng_stream(cfg.seed, "gsrc");
  auto g_star = init_standalone(gspace, random_genome(gspace, grng),
                                InitScheme::KaimingUniform, 5);

  SUBCASE("on: all generators bit-equal at every round start") {
    cfg.weight_resetting = true;
    std::map<int, std::set<std::uint64_t>> digests;
    StageIO io;
    const auto res = stage2_search(
        cfg, data, g_star, 0, "stage2", io,
        [&](int round, const std::vector<StandaloneNet>& gens) {
          for (const auto& g : gens) {
            digests[round].insert(g.store.digest());
            CHECK(g.genome == g_star.genome);  // alpha* never mutates
          }
        });
    REQUIRE(digests.size() == 3);
    for (const auto& [round, set] : digests) CHECK(set.size() == 1);
    CHECK(res.log.size() == static_cast<std::size_t>(cfg.rounds * cfg.population));
  }

  SUBCASE("off: generators diverge after round 1") {
    cfg.weight_resetting = false;
    std::map<int, std::set<std::uint64_t>> digests;
    StageIO io;
    stage2_search(cfg, data, g_star, 0, "stage2", io,
                  [&](int round, const std::vector<StandaloneNet>& gens) {
                    for (const auto& g : gens)
                      digests[round].insert(g.store.digest());
                  });
    CHECK(digests[0].size() == 1);  // round 0 copies of w_{G*}
    CHECK(digests[1].size() >= 2);
  }
}

TEST_CASE("coupled search: same log schema, both roles present") {
  auto cfg = tiny_config(13);
  cfg.mode = SearchMode::Coupled;
  const auto data = cfg.data.build();
  StageIO io;
  const auto res = coupled_search(cfg, data, 0, io);
  REQUIRE(res.log.size() ==
          static_cast<std::size_t>(2 * cfg.rounds * cfg.population));
  std::map<std::pair<int, std::string>, int> counts;
  for (const auto& r : res.log) {
    CHECK(r.stage == "coupled");
    CHECK(r.mode == "coupled");
    counts[{r.round, r.role}]++;
    // schema: the same jsonl fields parse back
    CHECK_NOTHROW(record_from_jsonl(to_jsonl_line(r)));
  }
  for (int round = 0; round < cfg.rounds; ++round) {
    CHECK(counts[{round, "generator"}] == cfg.population);
    CHECK(counts[{round, "discriminator"}] == cfg.population);
  }
  CHECK(validate(res.alpha_star, cfg.gen_space()).empty());
  CHECK(validate(res.beta_star, cfg.dis_space()).empty());
}

TEST_CASE("full_train: fresh weights, schema, determinism") {
  auto cfg = tiny_config(14);
  const auto data = cfg.data.build();
  const auto alpha = default_generator_genome(cfg.gen_space());
  const auto beta = default_discriminator_genome(cfg.dis_space());

  const auto direct = full_train(cfg, data, alpha, beta);
  // a search in between must not disturb the full train streams
  run_search(cfg);
  const auto after_search = full_train(cfg, data, alpha, beta);
  CHECK(direct.report.fid_like == after_search.report.fid_like);
  CHECK(direct.report.is_like == after_search.report.is_like);
  CHECK(direct.gen.store.digest() == after_search.gen.store.digest());

  const auto j = nlohmann::json::parse(report_to_json(direct.report));
  CHECK(j.contains("fid_like"));
  CHECK(j.contains("is_like"));
  CHECK(j.contains("size"));
  CHECK(j.contains("mode_coverage"));
}

TEST_CASE("run_search: end-to-end determinism of the logs") {
  auto cfg = tiny_config(15);
  const auto a = run_search(cfg);
  const auto b = run_search(cfg);
  CHECK(same_records_ignoring_wallclock(a.stage1_log, b.stage1_log));
  CHECK(same_records_ignoring_wallclock(a.stage2_log, b.stage2_log));
  CHECK(a.alpha_star == b.alpha_star);
  CHECK(a.beta_star == b.beta_star);
  CHECK(a.g_star.store.digest() == b.g_star.store.digest());
}

TEST_CASE("run_search: d-first order still runs and swaps the roles") {
  auto cfg = tiny_config(16);
  cfg.stage_order = StageOrder::DFirst;
  const auto out = run_search(cfg);
  REQUIRE(!out.stage1_log.empty());
  REQUIRE(!out.stage2_log.empty());
  CHECK(out.stage1_log[0].role == "discriminator");
  CHECK(out.stage2_log[0].role == "generator");
  CHECK(validate(out.alpha_star, cfg.gen_space()).empty());
  CHECK(validate(out.beta_star, cfg.dis_space()).empty());
}

TEST_CASE("run_search: repeated two-stage cycles") {
  auto cfg = tiny_config(17);
  cfg.cycles = 2;
  const auto out = run_search(cfg);
  std::set<int> cycles;
  for (const auto& r : out.stage1_log) cycles.insert(r.cycle);
  CHECK(cycles == std::set<int>{0, 1});
  CHECK(out.stage1_log.size() ==
        static_cast<std::size_t>(2 * cfg.rounds * cfg.population));
}

TEST_CASE("stage1 improves on random init (median of 5 seeds, smoke scale)") {
  auto best_fid_at = [](const RoundLog& log, int round) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : log)
      if (r.round == round && !r.collapsed) best = std::min(best, r.fid_like);
    return best;
  };
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2]
                        : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };

  std::vector<double> first, last;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SearchConfig cfg;  // ring-of-8, P=8, R=4, E=2 smoke schedule
    cfg.seed = seed;
    cfg.workers = 1;
    const auto data = cfg.data.build();
    auto d_bar = init_standalone(cfg.dis_space(), resolve_fixed_d(cfg),
                                 InitScheme::KaimingUniform,
                                 rng_stream(cfg.seed, "fixed_d_init")());
    StageIO io;
    const auto res = stage1_search(cfg, data, d_bar, 0, "stage1", io);
    first.push_back(best_fid_at(res.log, 0));
    last.push_back(best_fid_at(res.log, cfg.rounds - 1));
  }
  CHECK(median(last) <= median(first));
}

TEST_CASE("weight_reset copies the best generator into every slot") {
  const auto space = SearchSpaceSpec::generator(2, 4, 4, 2);
  auto rng = rng_stream(20, "wr");
  const auto genome = random_genome(space, rng);
  std::vector<StandaloneNet> gens;
  for (int i = 0; i < 4; ++i)
    gens.push_back(init_standalone(space, genome, InitScheme::KaimingUniform,
                                   static_cast<std::uint64_t>(i)));
  weight_reset(gens, 2);
  for (const auto& g : gens)
    CHECK(g.store.digest_with_moments() == gens[2].store.digest_with_moments());

  gens[1] = init_standalone(space, mutate(genome, rng),
                            InitScheme::KaimingUniform, 9);
  CHECK_THROWS_AS(weight_reset(gens, 0), std::invalid_argument);
}

TEST_CASE("resolve_fixed_d variants") {
  auto cfg = tiny_config(18);
  CHECK(validate(resolve_fixed_d(cfg), cfg.dis_space()).empty());
  cfg.fixed_d = "simple";
  CHECK(validate(resolve_fixed_d(cfg), cfg.dis_space()).empty());
  cfg.fixed_d = "/nonexistent/genome.json";
  CHECK_THROWS(resolve_fixed_d(cfg));
}

}  // TEST_SUITE
