#include "gansearch/pipeline.hpp"

#include "gansearch/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gansearch {

using nlohmann::json;

TargetDistribution DataConfig::build() const {
  if (kind == "ring") return TargetDistribution::ring(modes, radius, sigma);
  if (kind == "grid") return TargetDistribution::grid(side, spacing, sigma);
  throw std::invalid_argument("data.kind must be ring or grid, got '" + kind + "'");
}

void SearchConfig::check() const {
  if (population < 2 || population % 2 != 0)
    throw std::invalid_argument("population must be even and >= 2");
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (epochs_per_round < 0 || warmup_epochs < 0 || steps_per_epoch < 1)
    throw std::invalid_argument("bad epoch/step counts");
  if (batch_g < 1 || batch_d < 2 || batch_d % 2 != 0)
    throw std::invalid_argument("batch_d must be even (half real, half fake)");
  if (n_eval < 100)
    throw std::invalid_argument("n_eval must be >= 100 (metric floor)");
  if (objectives.empty()) throw std::invalid_argument("no active objectives");
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  data.build();  // validates the distribution parameters
}

SearchSpaceSpec SearchConfig::gen_space() const {
  return SearchSpaceSpec::generator(space.cells, space.gen_base_width,
                                    space.noise_dim, space.data_dim);
}

SearchSpaceSpec SearchConfig::dis_space() const {
  return SearchSpaceSpec::discriminator(space.cells, space.dis_base_width,
                                        space.data_dim);
}

std::vector<ObjectiveId> parse_objectives(const std::string& csv) {
  std::vector<ObjectiveId> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "fid") {
      out.push_back(ObjectiveId::FidLike);
    } else if (tok == "is") {
      out.push_back(ObjectiveId::InvIs);
    } else if (tok == "size") {
      out.push_back(ObjectiveId::Size);
    } else if (!tok.empty()) {
      throw std::invalid_argument("unknown objective '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty objective list");
  return out;
}

std::string objectives_to_string(std::span<const ObjectiveId> ids) {
  std::string out;
  for (ObjectiveId id : ids) {
    if (!out.empty()) out += ",";
    switch (id) {
      case ObjectiveId::FidLike: out += "fid"; break;
      case ObjectiveId::InvIs: out += "is"; break;
      case ObjectiveId::Size: out += "size"; break;
    }
  }
  return out;
}

std::string config_to_json(const SearchConfig& c) {
  json j;
  j["population"] = c.population;
  j["rounds"] = c.rounds;
  j["epochs_per_round"] = c.epochs_per_round;
  j["warmup_epochs"] = c.warmup_epochs;
  j["steps_per_epoch"] = c.steps_per_epoch;
  j["lr"] = c.lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["batch_g"] = c.batch_g;
  j["batch_d"] = c.batch_d;
  j["loss"] = to_string(c.loss);
  j["objectives"] = objectives_to_string(c.objectives);
  j["seed"] = c.seed;
  j["stage_order"] = c.stage_order == StageOrder::GFirst ? "g-first" : "d-first";
  j["mode"] = c.mode == SearchMode::Decoupled ? "decoupled" : "coupled";
  j["weight_resetting"] = c.weight_resetting;
  j["fixed_d"] = c.fixed_d;
  j["cycles"] = c.cycles;
  j["p_cross"] = c.p_cross;
  j["p_mut"] = c.p_mut;
  j["n_eval"] = c.n_eval;
  j["full_train_epochs"] = c.full_train_epochs;
  j["final_eval_samples"] = c.final_eval_samples;
  j["workers"] = c.workers;
  j["space"] = {{"cells", c.space.cells},
                {"gen_base_width", c.space.gen_base_width},
                {"dis_base_width", c.space.dis_base_width},
                {"noise_dim", c.space.noise_dim},
                {"data_dim", c.space.data_dim}};
  j["data"] = {{"kind", c.data.kind},     {"modes", c.data.modes},
               {"side", c.data.side},     {"radius", c.data.radius},
               {"spacing", c.data.spacing}, {"sigma", c.data.sigma}};
  return j.dump(2);
}

SearchConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  SearchConfig c;
  c.population = j.value("population", c.population);
  c.rounds = j.value("rounds", c.rounds);
  c.epochs_per_round = j.value("epochs_per_round", c.epochs_per_round);
  c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
  c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.batch_g = j.value("batch_g", c.batch_g);
  c.batch_d = j.value("batch_d", c.batch_d);
  if (j.contains("loss")) c.loss = loss_kind_from_string(j["loss"].get<std::string>());
  if (j.contains("objectives"))
    c.objectives = parse_objectives(j["objectives"].get<std::string>());
  c.seed = j.value("seed", c.seed);
  if (j.contains("stage_order"))
    c.stage_order = j["stage_order"].get<std::string>() == "d-first"
                        ? StageOrder::DFirst
                        : StageOrder::GFirst;
  if (j.contains("mode"))
    c.mode = j["mode"].get<std::string>() == "coupled" ? SearchMode::Coupled
                                                       : SearchMode::Decoupled;
  c.weight_resetting = j.value("weight_resetting", c.weight_resetting);
  c.fixed_d = j.value("fixed_d", c.fixed_d);
  c.cycles = j.value("cycles", c.cycles);
  c.p_cross = j.value("p_cross", c.p_cross);
  c.p_mut = j.value("p_mut", c.p_mut);
  c.n_eval = j.value("n_eval", c.n_eval);
  c.full_train_epochs = j.value("full_train_epochs", c.full_train_epochs);
  c.final_eval_samples = j.value("final_eval_samples", c.final_eval_samples);
  c.workers = j.value("workers", c.workers);
  if (j.contains("space")) {
    const auto& s = j["space"];
    c.space.cells = s.value("cells", c.space.cells);
    c.space.gen_base_width = s.value("gen_base_width", c.space.gen_base_width);
    c.space.dis_base_width = s.value("dis_base_width", c.space.dis_base_width);
    c.space.noise_dim = s.value("noise_dim", c.space.noise_dim);
    c.space.data_dim = s.value("data_dim", c.space.data_dim);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.data.kind = d.value("kind", c.data.kind);
    c.data.modes = d.value("modes", c.data.modes);
    c.data.side = d.value("side", c.data.side);
    c.data.radius = d.value("radius", c.data.radius);
    c.data.spacing = d.value("spacing", c.data.spacing);
    c.data.sigma = d.value("sigma", c.data.sigma);
  }
  return c;
}

// --- round logging ----------------------------------------------------------

std::string to_jsonl_line(const RoundRecord& r) {
  json j;
  j["stage"] = r.stage;
  j["mode"] = r.mode;
  j["role"] = r.role;
  j["cycle"] = r.cycle;
  j["round"] = r.round;
  j["id"] = r.id;
  j["genome_hash"] = r.genome_hash;
  j["fid_like"] = r.fid_like;  // inf serializes as null
  j["inv_is"] = r.inv_is;
  j["size"] = r.size;
  j["rank"] = r.rank;
  j["collapsed"] = r.collapsed;
  j["best_id"] = r.best_id;
  j["wallclock_ms"] = r.wallclock_ms;
  return j.dump();
}

namespace {

double num_or_inf(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity()
                     : v.get<double>();
}

}  // namespace

RoundRecord record_from_jsonl(const std::string& line) {
  json j = json::parse(line);
  RoundRecord r;
  r.stage = j.at("stage").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.role = j.at("role").get<std::string>();
  r.cycle = j.at("cycle").get<int>();
  r.round = j.at("round").get<int>();
  r.id = j.at("id").get<int>();
  r.genome_hash = j.at("genome_hash").get<std::string>();
  r.fid_like = num_or_inf(j.at("fid_like"));
  r.inv_is = num_or_inf(j.at("inv_is"));
  r.size = j.at("size").get<double>();
  r.rank = j.at("rank").get<int>();
  r.collapsed = j.at("collapsed").get<bool>();
  r.best_id = j.at("best_id").get<int>();
  r.wallclock_ms = j.at("wallclock_ms").get<double>();
  return r;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open log " + path.string());
}

void JsonlWriter::write(const RoundRecord& r) {
  out_ << to_jsonl_line(r) << "\n";
  out_.flush();
}

// --- shared stage plumbing ----------------------------------------------------

namespace {

struct RoundTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
};

int best_index(const std::vector<Individual>& pop,
               const RankPartition& partition) {
  const auto& front = partition.front();
  int best = front.front();
  for (int i : front)
    if (selection_less(pop[static_cast<std::size_t>(i)],
                       pop[static_cast<std::size_t>(best)]))
      best = i;
  return best;
}

void require_survivors(const std::vector<Individual>& pop,
                       const std::string& where, int round) {
  for (const auto& ind : pop)
    if (!ind.objectives.collapsed) return;
  throw std::runtime_error(where + " round " + std::to_string(round) +
                           ": every individual collapsed");
}

void log_round(RoundLog& log, JsonlWriter* writer, const std::string& stage,
               const SearchConfig& cfg, const std::string& role, int cycle,
               int round, const std::vector<Individual>& pop, int best_id,
               double wallclock_ms) {
  for (const auto& ind : pop) {
    RoundRecord r;
    r.stage = stage;
    r.mode = cfg.mode == SearchMode::Coupled ? "coupled" : "decoupled";
    r.role = role;
    r.cycle = cycle;
    r.round = round;
    r.id = ind.id;
    r.genome_hash = to_hex(ind.genome.hash());
    r.fid_like = ind.objectives.fid_like;
    r.inv_is = ind.objectives.inv_is;
    r.size = ind.objectives.size;
    r.rank = ind.rank.value_or(-1);
    r.collapsed = ind.objectives.collapsed;
    r.best_id = best_id;
    r.wallclock_ms = wallclock_ms;
    log.push_back(r);
    if (writer) writer->write(r);
  }
}

// Parents keep their genomes, offspring fill the remaining slots.
std::vector<ArchitectureGenome> next_population(
    const std::vector<Individual>& pop, const RankPartition& partition,
    const SearchConfig& cfg, std::mt19937_64& rng) {
  const int half = cfg.population / 2;
  const std::vector<int> parent_idx = select_parents(pop, partition, half);
  std::vector<const ArchitectureGenome*> parents;
  parents.reserve(parent_idx.size());
  std::vector<ArchitectureGenome> next;
  next.reserve(static_cast<std::size_t>(cfg.population));
  for (int i : parent_idx) {
    parents.push_back(&pop[static_cast<std::size_t>(i)].genome);
    next.push_back(pop[static_cast<std::size_t>(i)].genome);
  }
  auto offspring = make_offspring(parents, cfg.p_cross, cfg.p_mut,
                                  cfg.population - half, rng);
  for (auto& g : offspring) next.push_back(std::move(g));
  return next;
}

void maybe_checkpoint(const StageIO& io, const ParamStore& store, Role role,
                      const std::string& stage, int cycle, int round) {
  if (io.checkpoint_dir.empty()) return;
  std::ostringstream name;
  name << stage << "_supernet_" << (role == Role::Generator ? "g" : "d")
       << "_c" << cycle << "_r" << round << ".json";
  save_checkpoint(store, role, io.checkpoint_dir / name.str());
}

}  // namespace

// --- warm-up ------------------------------------------------------------------

WarmupResult warmup(SuperNet& sn, StandaloneNet& partner,
                    const SearchConfig& cfg, const TargetDistribution& data,
                    int cycle, std::string_view stream_tag) {
  WarmupResult res;
  res.activation_counts.resize(static_cast<std::size_t>(sn.space.total_slots()));
  for (std::size_t s = 0; s < res.activation_counts.size(); ++s)
    res.activation_counts[s].assign(sn.space.slots[s].candidates.size(), 0);

  const bool sn_is_gen = sn.space.role == Role::Generator;
  std::string tag(stream_tag);
  auto rng = rng_stream(cfg.seed, tag + "/warmup", static_cast<std::uint64_t>(cycle));
  const TrainParams tp = cfg.train_params();

  for (int e = 0; e < cfg.warmup_epochs; ++e) {
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      const ArchitectureGenome path = uniform_path_sample(sn.space, rng);
      for (std::size_t i = 0; i < path.genes.size(); ++i)
        res.activation_counts[i][static_cast<std::size_t>(path.genes[i].op_index())]++;
      const Batch real = data.sample(cfg.batch_d / 2, rng);
      GanPair pair;
      if (sn_is_gen) {
        pair.gen = subnet_view(sn, path);
        pair.dis = net_view(partner);
      } else {
        pair.gen = net_view(partner);
        pair.dis = subnet_view(sn, path);
      }
      pair.loss = cfg.loss;
      pair.batch_g = cfg.batch_g;
      pair.batch_d = cfg.batch_d;
      const NoiseSource noise{pair.gen.space->input_dim};
      gan_train_batch(pair, real, noise, rng, tp);
    }
  }

  auto pop_rng = rng_stream(cfg.seed, tag + "/population",
                            static_cast<std::uint64_t>(cycle));
  for (int i = 0; i < cfg.population; ++i)
    res.population.push_back(random_genome(sn.space, pop_rng));
  return res;
}

// --- stage 1: many-to-one generator search -------------------------------------

StageResult stage1_search(const SearchConfig& cfg,
                          const TargetDistribution& data, StandaloneNet& d_bar,
                          int cycle, const std::string& stage_label,
                          const StageIO& io) {
  const SearchSpaceSpec gspace = cfg.gen_space();
  SuperNet sn = init_supernet(
      gspace, InitScheme::KaimingUniform,
      rng_stream(cfg.seed, stage_label + "/sn_init", static_cast<std::uint64_t>(cycle))());

  WarmupResult w = warmup(sn, d_bar, cfg, data, cycle, stage_label);
  std::vector<ArchitectureGenome> population = std::move(w.population);

  const GaussianStats data_stats = analytic_stats(data);
  const TrainParams tp = cfg.train_params();
  const NoiseSource noise{gspace.input_dim};
  auto train_rng = rng_stream(cfg.seed, stage_label + "/train",
                              static_cast<std::uint64_t>(cycle));

  StageResult result;
  std::vector<Individual> pop;

  for (int r = 0; r < cfg.rounds; ++r) {
    RoundTimer timer;
    std::uniform_int_distribution<int> pick(0, cfg.population - 1);
    for (int e = 0; e < cfg.epochs_per_round; ++e) {
      for (int s = 0; s < cfg.steps_per_epoch; ++s) {
        const int i = pick(train_rng);
        const Batch real = data.sample(cfg.batch_d / 2, train_rng);
        GanPair pair{subnet_view(sn, population[static_cast<std::size_t>(i)]),
                     net_view(d_bar), cfg.loss, cfg.batch_g, cfg.batch_d};
        gan_train_batch(pair, real, noise, train_rng, tp);
      }
    }

    pop.assign(static_cast<std::size_t>(cfg.population), {});
    parallel_for(cfg.population, cfg.workers, [&](int i) {
      auto eval_rng = rng_stream(cfg.seed, stage_label + "/eval",
                                 static_cast<std::uint64_t>(cycle),
                                 static_cast<std::uint64_t>(r));
      Individual ind;
      ind.genome = population[static_cast<std::size_t>(i)];
      ind.id = i;
      ind.objectives = evaluate_individual(subnet_view(sn, ind.genome), data,
                                           data_stats, cfg.n_eval, eval_rng);
      pop[static_cast<std::size_t>(i)] = std::move(ind);
    });

    require_survivors(pop, stage_label, r);
    const RankPartition partition = non_dominated_sort(pop, cfg.objectives);
    const int best = best_index(pop, partition);
    log_round(result.log, io.log, stage_label, cfg, "generator", cycle, r, pop,
              best, timer.ms());
    maybe_checkpoint(io, sn.store, Role::Generator, stage_label, cycle, r);

    result.best_genome = pop[static_cast<std::size_t>(best)].genome;
    auto evolve_rng = rng_stream(cfg.seed, stage_label + "/evolve",
                                 static_cast<std::uint64_t>(cycle),
                                 static_cast<std::uint64_t>(r));
    population = next_population(pop, partition, cfg, evolve_rng);
  }

  result.best_net = extract_subnet(sn, result.best_genome);
  return result;
}

// --- stage 2: one-to-one discriminator search -----------------------------------

Stage2Result stage2_search(const SearchConfig& cfg,
                           const TargetDistribution& data,
                           const StandaloneNet& g_star, int cycle,
                           const std::string& stage_label, const StageIO& io,
                           const Stage2Observer& observer) {
  const SearchSpaceSpec dspace = cfg.dis_space();
  SuperNet sn = init_supernet(
      dspace, InitScheme::KaimingUniform,
      rng_stream(cfg.seed, stage_label + "/sn_init", static_cast<std::uint64_t>(cycle))());

  StandaloneNet g_warm = g_star;
  WarmupResult w = warmup(sn, g_warm, cfg, data, cycle, stage_label);
  std::vector<ArchitectureGenome> population = std::move(w.population);

  // P independent generator copies, all starting from the warmed G*.
  std::vector<StandaloneNet> gens(static_cast<std::size_t>(cfg.population), g_warm);

  const GaussianStats data_stats = analytic_stats(data);
  const TrainParams tp = cfg.train_params();
  const NoiseSource noise{g_warm.space.input_dim};
  auto train_rng = rng_stream(cfg.seed, stage_label + "/train",
                              static_cast<std::uint64_t>(cycle));

  Stage2Result result;
  std::vector<Individual> pop;
  int best = 0;

  for (int r = 0; r < cfg.rounds; ++r) {
    if (observer) observer(r, gens);
    RoundTimer timer;
    std::uniform_int_distribution<int> pick(0, cfg.population - 1);
    for (int e = 0; e < cfg.epochs_per_round; ++e) {
      for (int s = 0; s < cfg.steps_per_epoch; ++s) {
        const int i = pick(train_rng);
        const Batch real = data.sample(cfg.batch_d / 2, train_rng);
        GanPair pair{net_view(gens[static_cast<std::size_t>(i)]),
                     subnet_view(sn, population[static_cast<std::size_t>(i)]),
                     cfg.loss, cfg.batch_g, cfg.batch_d};
        gan_train_batch(pair, real, noise, train_rng, tp);
      }
    }

    pop.assign(static_cast<std::size_t>(cfg.population), {});
    parallel_for(cfg.population, cfg.workers, [&](int i) {
      auto eval_rng = rng_stream(cfg.seed, stage_label + "/eval",
                                 static_cast<std::uint64_t>(cycle),
                                 static_cast<std::uint64_t>(r));
      const Batch z = sample_noise(noise, cfg.n_eval, eval_rng);
      const Batch samples = forward(net_view(gens[static_cast<std::size_t>(i)]), z);
      Individual ind;
      ind.genome = population[static_cast<std::size_t>(i)];
      ind.id = i;
      ind.objectives = compute_objectives(
          samples, data, data_stats,
          param_count(ind.genome, dspace));  // size objective is the D's
      pop[static_cast<std::size_t>(i)] = std::move(ind);
    });

    require_survivors(pop, stage_label, r);
    const RankPartition partition = non_dominated_sort(pop, cfg.objectives);
    best = best_index(pop, partition);
    log_round(result.log, io.log, stage_label, cfg, "discriminator", cycle, r,
              pop, best, timer.ms());
    maybe_checkpoint(io, sn.store, Role::Discriminator, stage_label, cycle, r);

    result.beta_star = pop[static_cast<std::size_t>(best)].genome;
    auto evolve_rng = rng_stream(cfg.seed, stage_label + "/evolve",
                                 static_cast<std::uint64_t>(cycle),
                                 static_cast<std::uint64_t>(r));
    population = next_population(pop, partition, cfg, evolve_rng);

    if (cfg.weight_resetting) weight_reset(gens, best);
  }

  result.d_star = extract_subnet(sn, result.beta_star);
  result.best_gen = gens[static_cast<std::size_t>(best)];
  return result;
}

void weight_reset(std::vector<StandaloneNet>& generators, int best_index) {
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (static_cast<int>(i) == best_index) continue;
    copy_weights(generators[i], generators[static_cast<std::size_t>(best_index)]);
  }
}

// --- coupled baseline -----------------------------------------------------------

CoupledResult coupled_search(const SearchConfig& cfg,
                             const TargetDistribution& data, int cycle,
                             const StageIO& io) {
  const SearchSpaceSpec gspace = cfg.gen_space();
  const SearchSpaceSpec dspace = cfg.dis_space();
  SuperNet sng = init_supernet(
      gspace, InitScheme::KaimingUniform,
      rng_stream(cfg.seed, "coupled/sn_g", static_cast<std::uint64_t>(cycle))());
  SuperNet snd = init_supernet(
      dspace, InitScheme::KaimingUniform,
      rng_stream(cfg.seed, "coupled/sn_d", static_cast<std::uint64_t>(cycle))());

  const TrainParams tp = cfg.train_params();
  const NoiseSource noise{gspace.input_dim};
  auto rng = rng_stream(cfg.seed, "coupled/warmup", static_cast<std::uint64_t>(cycle));

  for (int e = 0; e < cfg.warmup_epochs; ++e) {
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      const ArchitectureGenome pg = uniform_path_sample(gspace, rng);
      const ArchitectureGenome pd = uniform_path_sample(dspace, rng);
      const Batch real = data.sample(cfg.batch_d / 2, rng);
      GanPair pair{subnet_view(sng, pg), subnet_view(snd, pd), cfg.loss,
                   cfg.batch_g, cfg.batch_d};
      gan_train_batch(pair, real, noise, rng, tp);
    }
  }

  auto pop_rng = rng_stream(cfg.seed, "coupled/population",
                            static_cast<std::uint64_t>(cycle));
  std::vector<ArchitectureGenome> pop_g, pop_d;
  for (int i = 0; i < cfg.population; ++i) pop_g.push_back(random_genome(gspace, pop_rng));
  for (int i = 0; i < cfg.population; ++i) pop_d.push_back(random_genome(dspace, pop_rng));

  const GaussianStats data_stats = analytic_stats(data);
  auto train_rng = rng_stream(cfg.seed, "coupled/train", static_cast<std::uint64_t>(cycle));

  CoupledResult result;
  for (int r = 0; r < cfg.rounds; ++r) {
    RoundTimer timer;
    std::uniform_int_distribution<int> pick(0, cfg.population - 1);
    for (int e = 0; e < cfg.epochs_per_round; ++e) {
      for (int s = 0; s < cfg.steps_per_epoch; ++s) {
        const int i = pick(train_rng);
        const Batch real = data.sample(cfg.batch_d / 2, train_rng);
        GanPair pair{subnet_view(sng, pop_g[static_cast<std::size_t>(i)]),
                     subnet_view(snd, pop_d[static_cast<std::size_t>(i)]),
                     cfg.loss, cfg.batch_g, cfg.batch_d};
        gan_train_batch(pair, real, noise, train_rng, tp);
      }
    }

    // Pair i's samples score both its generator and its discriminator.
    std::vector<ObjectiveVector> shared(static_cast<std::size_t>(cfg.population));
    parallel_for(cfg.population, cfg.workers, [&](int i) {
      auto eval_rng = rng_stream(cfg.seed, "coupled/eval",
                                 static_cast<std::uint64_t>(cycle),
                                 static_cast<std::uint64_t>(r));
      shared[static_cast<std::size_t>(i)] = evaluate_individual(
          subnet_view(sng, pop_g[static_cast<std::size_t>(i)]), data,
          data_stats, cfg.n_eval, eval_rng);
    });

    std::vector<Individual> inds_g(static_cast<std::size_t>(cfg.population));
    std::vector<Individual> inds_d(static_cast<std::size_t>(cfg.population));
    for (int i = 0; i < cfg.population; ++i) {
      auto& g = inds_g[static_cast<std::size_t>(i)];
      g.genome = pop_g[static_cast<std::size_t>(i)];
      g.id = i;
      g.objectives = shared[static_cast<std::size_t>(i)];
      auto& d = inds_d[static_cast<std::size_t>(i)];
      d.genome = pop_d[static_cast<std::size_t>(i)];
      d.id = i;
      d.objectives = shared[static_cast<std::size_t>(i)];
      d.objectives.size = static_cast<double>(
          param_count(d.genome, dspace));
    }

    require_survivors(inds_g, "coupled", r);
    const RankPartition part_g = non_dominated_sort(inds_g, cfg.objectives);
    const RankPartition part_d = non_dominated_sort(inds_d, cfg.objectives);
    const int best_g = best_index(inds_g, part_g);
    const int best_d = best_index(inds_d, part_d);
    const double ms = timer.ms();
    log_round(result.log, io.log, "coupled", cfg, "generator", cycle, r, inds_g,
              best_g, ms);
    log_round(result.log, io.log, "coupled", cfg, "discriminator", cycle, r,
              inds_d, best_d, ms);

    result.alpha_star = inds_g[static_cast<std::size_t>(best_g)].genome;
    result.beta_star = inds_d[static_cast<std::size_t>(best_d)].genome;

    auto ev_g = rng_stream(cfg.seed, "coupled/evolve_g",
                           static_cast<std::uint64_t>(cycle),
                           static_cast<std::uint64_t>(r));
    auto ev_d = rng_stream(cfg.seed, "coupled/evolve_d",
                           static_cast<std::uint64_t>(cycle),
                           static_cast<std::uint64_t>(r));
    pop_g = next_population(inds_g, part_g, cfg, ev_g);
    pop_d = next_population(inds_d, part_d, cfg, ev_d);
  }

  result.g_star = extract_subnet(sng, result.alpha_star);
  result.d_star = extract_subnet(snd, result.beta_star);
  return result;
}

// --- fully-train ------------------------------------------------------------------

std::string report_to_json(const FinalReport& r) {
  json j;
  j["fid_like"] = r.fid_like;
  j["is_like"] = r.is_like;
  j["size"] = r.size;
  j["d_size"] = r.d_size;
  j["mode_coverage"] = r.mode_coverage;
  j["modes_total"] = r.modes_total;
  j["collapsed"] = r.collapsed;
  return j.dump(2);
}

FullTrainResult full_train(const SearchConfig& cfg,
                           const TargetDistribution& data,
                           const ArchitectureGenome& alpha,
                           const ArchitectureGenome& beta) {
  const SearchSpaceSpec gspace = cfg.gen_space();
  const SearchSpaceSpec dspace = cfg.dis_space();
  FullTrainResult out{
      {},
      init_standalone(gspace, alpha, InitScheme::KaimingUniform,
                      rng_stream(cfg.seed, "full_train/init_g")()),
      init_standalone(dspace, beta, InitScheme::KaimingUniform,
                      rng_stream(cfg.seed, "full_train/init_d")())};

  const TrainParams tp = cfg.train_params();
  const NoiseSource noise{gspace.input_dim};
  auto rng = rng_stream(cfg.seed, "full_train/train");

  for (int e = 0; e < cfg.full_train_epochs; ++e) {
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      const Batch real = data.sample(cfg.batch_d / 2, rng);
      GanPair pair{net_view(out.gen), net_view(out.dis), cfg.loss, cfg.batch_g,
                   cfg.batch_d};
      gan_train_batch(pair, real, noise, rng, tp);
    }
  }

  auto eval_rng = rng_stream(cfg.seed, "full_train/eval");
  const Batch z = sample_noise(noise, cfg.final_eval_samples, eval_rng);
  const Batch samples = forward(net_view(out.gen), z);
  const ObjectiveVector obj =
      compute_objectives(samples, data, analytic_stats(data),
                         param_count(alpha, gspace));
  out.report.fid_like = obj.fid_like;
  out.report.is_like = obj.collapsed ? 0.0 : 1.0 / obj.inv_is;
  out.report.size = param_count(alpha, gspace);
  out.report.d_size = param_count(beta, dspace);
  out.report.modes_total = data.modes;
  out.report.mode_coverage =
      samples.allFinite() ? mode_coverage(samples, data) : 0;
  out.report.collapsed = obj.collapsed;
  return out;
}

// --- orchestration ------------------------------------------------------------------

ArchitectureGenome resolve_fixed_d(const SearchConfig& cfg) {
  const SearchSpaceSpec dspace = cfg.dis_space();
  if (cfg.fixed_d == "default") return default_discriminator_genome(dspace);
  if (cfg.fixed_d == "simple") return simple_discriminator_genome(dspace);
  ArchitectureGenome g = load_genome(cfg.fixed_d);
  const auto issues = validate(g, dspace);
  if (!issues.empty())
    throw std::invalid_argument("fixed_d genome '" + cfg.fixed_d +
                                "' invalid: " + issues.front());
  return g;
}

SearchOutcome run_search(const SearchConfig& cfg, const RunIO* io,
                         const Stage2Observer& observer) {
  cfg.check();
  const TargetDistribution data = cfg.data.build();

  JsonlWriter log1, log2;
  StageIO io1, io2;
  if (io) {
    namespace fs = std::filesystem;
    fs::create_directories(io->out_dir / "genomes");
    if (io->checkpoints) fs::create_directories(io->out_dir / "checkpoints");
    log1 = JsonlWriter(io->out_dir / "stage1.jsonl");
    log2 = JsonlWriter(io->out_dir / "stage2.jsonl");
    io1.log = &log1;
    io2.log = &log2;
    if (io->checkpoints) {
      io1.checkpoint_dir = io->out_dir / "checkpoints";
      io2.checkpoint_dir = io->out_dir / "checkpoints";
    }
  }

  SearchOutcome out;

  if (cfg.mode == SearchMode::Coupled) {
    CoupledResult res = coupled_search(cfg, data, 0, io1);
    out.alpha_star = res.alpha_star;
    out.beta_star = res.beta_star;
    out.g_star = std::move(res.g_star);
    out.d_star = std::move(res.d_star);
    out.stage1_log = std::move(res.log);
  } else if (cfg.stage_order == StageOrder::GFirst) {
    StandaloneNet d_bar = init_standalone(
        cfg.dis_space(), resolve_fixed_d(cfg), InitScheme::KaimingUniform,
        rng_stream(cfg.seed, "fixed_d_init")());
    for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
      StageResult s1 = stage1_search(cfg, data, d_bar, cycle, "stage1", io1);
      Stage2Result s2 =
          stage2_search(cfg, data, s1.best_net, cycle, "stage2", io2, observer);
      out.alpha_star = s1.best_genome;
      out.beta_star = s2.beta_star;
      out.g_star = std::move(s2.best_gen);
      out.d_star = s2.d_star;
      for (auto& r : s1.log) out.stage1_log.push_back(std::move(r));
      for (auto& r : s2.log) out.stage2_log.push_back(std::move(r));
      d_bar = std::move(s2.d_star);  // next cycle starts from the searched D
    }
  } else {
    StandaloneNet g_fixed = init_standalone(
        cfg.gen_space(), default_generator_genome(cfg.gen_space()),
        InitScheme::KaimingUniform, rng_stream(cfg.seed, "fixed_g_init")());
    for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
      Stage2Result sA =
          stage2_search(cfg, data, g_fixed, cycle, "stage1", io1, observer);
      StandaloneNet d_bar = std::move(sA.d_star);
      StageResult sB = stage1_search(cfg, data, d_bar, cycle, "stage2", io2);
      out.alpha_star = sB.best_genome;
      out.beta_star = sA.beta_star;
      out.g_star = sB.best_net;
      out.d_star = std::move(d_bar);
      for (auto& r : sA.log) out.stage1_log.push_back(std::move(r));
      for (auto& r : sB.log) out.stage2_log.push_back(std::move(r));
      g_fixed = std::move(sB.best_net);
    }
  }

  if (io) {
    save_genome(out.alpha_star, io->out_dir / "genomes" / "alpha_star.json");
    save_genome(out.beta_star, io->out_dir / "genomes" / "beta_star.json");
    if (cfg.mode == SearchMode::Decoupled && cfg.stage_order == StageOrder::GFirst)
      save_genome(resolve_fixed_d(cfg), io->out_dir / "genomes" / "fixed_d.json");
  }
  return out;
}

}  // namespace gansearch
