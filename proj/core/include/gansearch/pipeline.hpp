#pragma once

#include "gansearch/evolution.hpp"
#include "gansearch/gan.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace gansearch {

enum class StageOrder { GFirst, DFirst };
enum class SearchMode { Decoupled, Coupled };

struct DataConfig {
  std::string kind = "ring";  // ring | grid
  int modes = 8;              // ring
  int side = 5;               // grid
  double radius = 2.0;
  double spacing = 1.0;
  double sigma = 0.05;

  TargetDistribution build() const;
};

struct SpaceConfig {
  int cells = 3;
  int gen_base_width = 8;
  int dis_base_width = 64;
  int noise_dim = 8;
  int data_dim = 2;
};

/// Every knob of a run. Defaults are the desk-scale smoke settings; the
/// paper-parity values live in configs/paper.toml.
struct SearchConfig {
  int population = 8;       // P, even
  int rounds = 4;           // R
  int epochs_per_round = 2; // E
  int warmup_epochs = 2;
  int steps_per_epoch = 100;  // synthetic data: batches per "epoch"
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
  int batch_g = 40;
  int batch_d = 80;
  LossKind loss = LossKind::Hinge;
  std::vector<ObjectiveId> objectives = kDefaultObjectives;
  std::uint64_t seed = 1;
  StageOrder stage_order = StageOrder::GFirst;
  SearchMode mode = SearchMode::Decoupled;
  bool weight_resetting = true;
  std::string fixed_d = "default";  // default | simple | path to a genome json
  int cycles = 1;
  double p_cross = 0.3;
  double p_mut = 0.5;
  int n_eval = 1000;
  int full_train_epochs = 150;
  int final_eval_samples = 10000;
  int workers = 0;  // 0 = hardware concurrency
  SpaceConfig space;
  DataConfig data;

  void check() const;  // throws std::invalid_argument on bad combinations
  SearchSpaceSpec gen_space() const;
  SearchSpaceSpec dis_space() const;
  AdamParams adam() const { return {lr, beta1, beta2, eps}; }
  TrainParams train_params() const { return {adam(), adam()}; }
};

std::string config_to_json(const SearchConfig& cfg);
SearchConfig config_from_json(const std::string& text);

/// "fid,is" or "fid,is,size" <-> objective sets.
std::vector<ObjectiveId> parse_objectives(const std::string& csv);
std::string objectives_to_string(std::span<const ObjectiveId> ids);

// --- round logging ----------------------------------------------------------

struct RoundRecord {
  std::string stage;  // stage1 | stage2 | coupled
  std::string mode;   // decoupled | coupled
  std::string role;   // generator | discriminator
  int cycle = 0;
  int round = 0;
  int id = 0;  // individual slot within the round
  std::string genome_hash;
  double fid_like = 0.0;
  double inv_is = 0.0;
  double size = 0.0;
  int rank = 0;
  bool collapsed = false;
  int best_id = 0;  // the round's best individual, repeated on every record
  double wallclock_ms = 0.0;
};

using RoundLog = std::vector<RoundRecord>;

std::string to_jsonl_line(const RoundRecord& r);
RoundRecord record_from_jsonl(const std::string& line);  // throws on bad line

/// Appends records as they arrive and flushes per line, so a crashed run
/// leaves a parseable log.
class JsonlWriter {
 public:
  JsonlWriter() = default;
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const RoundRecord& r);
  bool open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

// --- search stages ----------------------------------------------------------

struct StageIO {
  JsonlWriter* log = nullptr;
  std::filesystem::path checkpoint_dir;  // empty disables round checkpoints
};

struct WarmupResult {
  std::vector<ArchitectureGenome> population;          // P round-0 genomes
  std::vector<std::vector<long>> activation_counts;    // [slot][candidate]
};

/// Train the supernet with one uniformly sampled single path per batch against
/// the fixed partner net (both sides update), then sample the round-0
/// population. warmup_epochs = 0 leaves the supernet untouched but still
/// samples the population.
WarmupResult warmup(SuperNet& sn, StandaloneNet& partner,
                    const SearchConfig& cfg, const TargetDistribution& data,
                    int cycle, std::string_view stream_tag);

struct StageResult {
  ArchitectureGenome best_genome;
  StandaloneNet best_net;
  RoundLog log;
};

/// Many-to-one generator search: P candidates share SuperNet-G weights, every
/// batch trains one uniformly drawn candidate against d_bar (which also
/// updates). Returns the best individual of the final round's partition with
/// its extracted weights.
StageResult stage1_search(const SearchConfig& cfg,
                          const TargetDistribution& data, StandaloneNet& d_bar,
                          int cycle, const std::string& stage_label,
                          const StageIO& io);

using Stage2Observer =
    std::function<void(int round, const std::vector<StandaloneNet>& gens)>;

struct Stage2Result {
  ArchitectureGenome beta_star;
  StandaloneNet d_star;
  StandaloneNet best_gen;
  RoundLog log;
};

/// One-to-one discriminator search: P independent copies of g_star, each
/// paired with a candidate from SuperNet-D. With weight resetting on, every
/// round ends by copying the best GAN's generator weights into all copies.
Stage2Result stage2_search(const SearchConfig& cfg,
                           const TargetDistribution& data,
                           const StandaloneNet& g_star, int cycle,
                           const std::string& stage_label, const StageIO& io,
                           const Stage2Observer& observer = {});

struct CoupledResult {
  ArchitectureGenome alpha_star, beta_star;
  StandaloneNet g_star, d_star;
  RoundLog log;
};

/// Ablation baseline: both populations evolve every round, pairs sampled
/// jointly by slot index.
CoupledResult coupled_search(const SearchConfig& cfg,
                             const TargetDistribution& data, int cycle,
                             const StageIO& io);

/// Copy generators[best_index] weights into every other entry (genomes must
/// match).
void weight_reset(std::vector<StandaloneNet>& generators, int best_index);

// --- full training ----------------------------------------------------------

struct FinalReport {
  double fid_like = 0.0;
  double is_like = 0.0;
  long size = 0;    // generator parameters
  long d_size = 0;
  int mode_coverage = 0;
  int modes_total = 0;
  bool collapsed = false;
};

std::string report_to_json(const FinalReport& r);

struct FullTrainResult {
  FinalReport report;
  StandaloneNet gen;
  StandaloneNet dis;
};

/// Re-initialize both nets from scratch (search-phase weights are never seen)
/// and train for full_train_epochs; the report is computed on a
/// final_eval_samples draw. Divergence is reported via `collapsed`, not thrown.
FullTrainResult full_train(const SearchConfig& cfg,
                           const TargetDistribution& data,
                           const ArchitectureGenome& alpha,
                           const ArchitectureGenome& beta);

// --- whole-run orchestration --------------------------------------------------

struct RunIO {
  std::filesystem::path out_dir;  // stage1.jsonl, stage2.jsonl, genomes/, checkpoints/
  bool checkpoints = true;
};

struct SearchOutcome {
  ArchitectureGenome alpha_star, beta_star;
  StandaloneNet g_star, d_star;
  RoundLog stage1_log, stage2_log;  // coupled mode logs everything in stage1
};

/// Warm-up + stage-1 + stage-2 (honoring mode, stage order, and cycles);
/// writes logs/genomes/checkpoints when io is given.
SearchOutcome run_search(const SearchConfig& cfg, const RunIO* io = nullptr,
                         const Stage2Observer& observer = {});

/// Resolve the fixed stage-1 discriminator: "default", "simple", or a path.
ArchitectureGenome resolve_fixed_d(const SearchConfig& cfg);

}  // namespace gansearch
