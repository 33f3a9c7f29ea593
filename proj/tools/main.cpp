#include "config_file.hpp"
#include "gansearch/pipeline.hpp"
#include "plot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#ifndef GANSEARCH_VERSION
#define GANSEARCH_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace gansearch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string iso_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compact_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// --- config value parsing ----------------------------------------------------

void parse_into(int& tgt, const std::string& v) {
  std::size_t used = 0;
  tgt = std::stoi(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
}

void parse_into(std::uint64_t& tgt, const std::string& v) {
  std::size_t used = 0;
  tgt = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
}

void parse_into(double& tgt, const std::string& v) {
  std::size_t used = 0;
  tgt = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("not a number: " + v);
}

void parse_into(bool& tgt, const std::string& v) {
  if (v == "true" || v == "1") {
    tgt = true;
  } else if (v == "false" || v == "0") {
    tgt = false;
  } else {
    throw std::invalid_argument("not a boolean: " + v);
  }
}

void parse_into(std::string& tgt, const std::string& v) { tgt = v; }

/// One bound run option: a CLI11 option plus the matching config-file key.
/// Command line and environment values win over the file; the file wins over
/// the built-in defaults.
struct ConfigBinder {
  std::string config_path;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const std::string&)>>>
      keys;

  // staging for values that need post-parse conversion
  std::string objectives;
  std::string loss, mode, stage_order;
  bool no_weight_resetting = false;

  template <typename T>
  void bind(CLI::App* cmd, const std::string& file_key,
            const std::string& cli_names, T& target,
            const std::string& desc = "") {
    auto* opt = cmd->add_option(cli_names, target, desc);
    keys[file_key] = {opt, [&target](const std::string& v) { parse_into(target, v); }};
  }

  void apply_file() {
    if (config_path.empty()) return;
    for (const auto& entry : configfile::read(config_path)) {
      const auto it = keys.find(entry.key);
      if (it == keys.end())
        throw std::invalid_argument(config_path + ":" +
                                    std::to_string(entry.line) +
                                    ": unknown config key '" + entry.key + "'");
      if (it->second.first->count() > 0) continue;  // CLI/env override
      try {
        it->second.second(entry.value);
      } catch (const std::exception& e) {
        throw std::invalid_argument(config_path + ":" +
                                    std::to_string(entry.line) + ": " +
                                    e.what());
      }
    }
  }
};

void register_run_options(CLI::App* cmd, SearchConfig& cfg, ConfigBinder& b) {
  cmd->add_option("--config", b.config_path,
                  "TOML run configuration ([search] [space] [data] [metrics])")
      ->envname("GANSEARCH_CONFIG");

  b.bind(cmd, "search.population", "--search.population", cfg.population,
         "population size P");
  b.bind(cmd, "search.rounds", "--search.rounds", cfg.rounds,
         "search rounds R per stage");
  b.bind(cmd, "search.epochs_per_round", "--search.epochs_per_round",
         cfg.epochs_per_round);
  b.bind(cmd, "search.warmup_epochs", "--search.warmup_epochs",
         cfg.warmup_epochs);
  b.bind(cmd, "search.steps_per_epoch", "--search.steps_per_epoch",
         cfg.steps_per_epoch);
  b.bind(cmd, "search.lr", "--search.lr", cfg.lr);
  b.bind(cmd, "search.beta1", "--search.beta1", cfg.beta1);
  b.bind(cmd, "search.beta2", "--search.beta2", cfg.beta2);
  b.bind(cmd, "search.eps", "--search.eps", cfg.eps);
  b.bind(cmd, "search.batch_g", "--search.batch_g", cfg.batch_g);
  b.bind(cmd, "search.batch_d", "--search.batch_d", cfg.batch_d);
  b.bind(cmd, "search.loss", "--search.loss", b.loss, "hinge | minimax");
  b.keys["search.loss"].first->check(CLI::IsMember({"hinge", "minimax"}));
  b.bind(cmd, "search.objectives", "--search.objectives,--objectives",
         b.objectives, "active objectives: fid,is[,size]");
  b.bind(cmd, "search.seed", "--search.seed,--seed", cfg.seed);
  b.keys["search.seed"].first->envname("GANSEARCH_SEED");
  b.bind(cmd, "search.stage_order", "--search.stage_order,--stage-order",
         b.stage_order, "g-first | d-first");
  b.keys["search.stage_order"].first->check(CLI::IsMember({"g-first", "d-first"}));
  b.bind(cmd, "search.mode", "--search.mode,--mode", b.mode,
         "decoupled | coupled");
  b.keys["search.mode"].first->check(CLI::IsMember({"decoupled", "coupled"}));
  b.bind(cmd, "search.weight_resetting", "--search.weight_resetting",
         cfg.weight_resetting);
  cmd->add_flag("--no-weight-resetting", b.no_weight_resetting,
                "disable stage-2 weight resetting");
  b.bind(cmd, "search.fixed_d", "--search.fixed_d", cfg.fixed_d,
         "stage-1 discriminator: default | simple | genome path");
  b.bind(cmd, "search.cycles", "--search.cycles,--cycles", cfg.cycles,
         "repeat the two-stage search N times");
  b.bind(cmd, "search.p_cross", "--search.p_cross", cfg.p_cross);
  b.bind(cmd, "search.p_mut", "--search.p_mut", cfg.p_mut);
  b.bind(cmd, "search.full_train_epochs", "--search.full_train_epochs",
         cfg.full_train_epochs);
  b.bind(cmd, "search.workers", "--search.workers,--workers", cfg.workers);
  b.keys["search.workers"].first->envname("GANSEARCH_WORKERS");

  b.bind(cmd, "space.cells", "--space.cells", cfg.space.cells);
  b.bind(cmd, "space.gen_base_width", "--space.gen_base_width",
         cfg.space.gen_base_width);
  b.bind(cmd, "space.dis_base_width", "--space.dis_base_width",
         cfg.space.dis_base_width);
  b.bind(cmd, "space.noise_dim", "--space.noise_dim", cfg.space.noise_dim);

  b.bind(cmd, "data.kind", "--data.kind", cfg.data.kind, "ring | grid");
  b.keys["data.kind"].first->check(CLI::IsMember({"ring", "grid"}));
  b.bind(cmd, "data.modes", "--data.modes", cfg.data.modes);
  b.bind(cmd, "data.side", "--data.side", cfg.data.side);
  b.bind(cmd, "data.radius", "--data.radius", cfg.data.radius);
  b.bind(cmd, "data.spacing", "--data.spacing", cfg.data.spacing);
  b.bind(cmd, "data.sigma", "--data.sigma", cfg.data.sigma);

  b.bind(cmd, "metrics.n_eval", "--metrics.n_eval", cfg.n_eval);
  b.bind(cmd, "metrics.final_eval_samples", "--metrics.final_eval_samples",
         cfg.final_eval_samples);
}

void finalize_config(SearchConfig& cfg, ConfigBinder& b) {
  b.apply_file();
  if (!b.objectives.empty()) cfg.objectives = parse_objectives(b.objectives);
  if (!b.loss.empty()) cfg.loss = loss_kind_from_string(b.loss);
  if (!b.mode.empty())
    cfg.mode = b.mode == "coupled" ? SearchMode::Coupled : SearchMode::Decoupled;
  if (!b.stage_order.empty())
    cfg.stage_order = b.stage_order == "d-first" ? StageOrder::DFirst
                                                 : StageOrder::GFirst;
  if (b.no_weight_resetting) cfg.weight_resetting = false;
  cfg.check();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_search(const SearchConfig& cfg, const std::string& out_root,
               std::string run_id, bool checkpoints) {
  if (run_id.empty())
    run_id = "run-" + compact_now() + "-s" + std::to_string(cfg.seed);
  const fs::path out_dir = fs::path(out_root) / run_id;
  fs::create_directories(out_dir);

  nlohmann::json manifest;
  manifest["run_id"] = run_id;
  manifest["version"] = GANSEARCH_VERSION;
  manifest["created"] = iso_now();
  manifest["seed"] = cfg.seed;
  manifest["config"] = nlohmann::json::parse(config_to_json(cfg));
  manifest["paths"] = {{"stage1", "stage1.jsonl"},
                       {"stage2", "stage2.jsonl"},
                       {"genomes", "genomes/"},
                       {"checkpoints", checkpoints ? "checkpoints/" : ""},
                       {"plots", "plots/"}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

  const auto t0 = std::chrono::steady_clock::now();
  RunIO io{out_dir, checkpoints};
  const SearchOutcome outcome = run_search(cfg, &io);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  fs::create_directories(out_dir / "plots");
  std::vector<plot::Series> series;
  std::vector<plot::ParseIssue> issues;
  series.push_back(plot::load_series(out_dir / "stage1.jsonl", issues));
  if (cfg.mode == SearchMode::Decoupled)
    series.push_back(plot::load_series(out_dir / "stage2.jsonl", issues));
  plot::write_svg(series, out_dir / "plots" / "curves.svg");
  plot::write_csv(series, out_dir / "plots" / "curves.csv");

  nlohmann::json summary;
  summary["run_id"] = run_id;
  summary["finished"] = iso_now();
  summary["duration_s"] = secs;
  summary["alpha_star"] = "genomes/alpha_star.json";
  summary["beta_star"] = "genomes/beta_star.json";
  summary["alpha_star_hash"] = to_hex(outcome.alpha_star.hash());
  summary["beta_star_hash"] = to_hex(outcome.beta_star.hash());
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "search finished in " << secs << " s, results under "
            << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const SearchConfig& cfg, const std::string& genome_g,
              const std::string& genome_d, const std::string& out_root,
              int dump_samples) {
  ArchitectureGenome alpha = load_genome(genome_g);
  ArchitectureGenome beta = load_genome(genome_d);
  {
    const auto ga = validate(alpha, cfg.gen_space());
    if (!ga.empty())
      throw std::invalid_argument("generator genome invalid: " + ga.front());
    const auto gd = validate(beta, cfg.dis_space());
    if (!gd.empty())
      throw std::invalid_argument("discriminator genome invalid: " + gd.front());
  }

  const fs::path out_dir = out_root.empty()
                               ? fs::path("out") / ("train-" + compact_now())
                               : fs::path(out_root);
  fs::create_directories(out_dir);

  const TargetDistribution data = cfg.data.build();
  FullTrainResult res = full_train(cfg, data, alpha, beta);
  write_text(out_dir / "metrics.json", report_to_json(res.report) + "\n");

  const int n = dump_samples > 0 ? dump_samples : cfg.final_eval_samples;
  auto rng = rng_stream(cfg.seed, "sample_dump");
  const Batch z = sample_noise(NoiseSource{cfg.space.noise_dim}, n, rng);
  const Batch samples = forward(net_view(res.gen), z);
  std::ofstream csv(out_dir / "samples.csv");
  csv << "x,y\n";
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    csv << samples(i, 0) << "," << samples(i, 1) << "\n";

  std::cout << "fid_like=" << res.report.fid_like
            << " is_like=" << res.report.is_like
            << " mode_coverage=" << res.report.mode_coverage << "/"
            << res.report.modes_total << ", results under " << out_dir.string()
            << "\n";
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& logs, const std::string& out) {
  std::vector<plot::Series> series;
  std::vector<plot::ParseIssue> issues;
  for (const auto& log : logs) series.push_back(plot::load_series(log, issues));
  for (const auto& issue : issues)
    std::cerr << issue.file.string() << ":" << issue.line
              << ": malformed log line: " << issue.what << "\n";

  bool any = false;
  for (const auto& s : series) any = any || !s.rounds.empty();
  if (!any) {
    std::cerr << "no plottable records found\n";
    return kExitRuntime;
  }
  const fs::path svg = out;
  plot::write_svg(series, svg);
  fs::path csv = svg;
  csv.replace_extension(".csv");
  plot::write_csv(series, csv);
  std::cout << "wrote " << svg.string() << " and " << csv.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage evolutionary architecture search for tiny dense "
               "GANs over 2-D mixtures"};
  app.set_version_flag("--version", GANSEARCH_VERSION);
  app.require_subcommand(1);

  SearchConfig cfg;
  ConfigBinder search_binder, train_binder;

  auto* search = app.add_subcommand(
      "search", "warm-up + stage-1 + stage-2 search (or the coupled baseline)");
  std::string out_root = "out", run_id;
  bool no_checkpoints = false;
  register_run_options(search, cfg, search_binder);
  search->add_option("--out", out_root, "output root directory")
      ->envname("GANSEARCH_OUT");
  search->add_option("--run-id", run_id,
                     "run directory name (default: timestamp)");
  search->add_flag("--no-checkpoints", no_checkpoints,
                   "skip per-round supernet checkpoints");

  auto* train = app.add_subcommand(
      "train", "fully train a (G, D) genome pair from scratch and report metrics");
  std::string genome_g, genome_d, train_out;
  int dump_samples = 0;
  register_run_options(train, cfg, train_binder);
  train->add_option("--genome-g", genome_g, "generator genome JSON")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--genome-d", genome_d, "discriminator genome JSON")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "output directory");
  train->add_option("--samples", dump_samples,
                    "rows in the sample dump CSV (default: final_eval_samples)");

  auto* plot_cmd = app.add_subcommand(
      "plot", "render best-per-round fid/IS curves from JSONL logs");
  std::vector<std::string> logs;
  std::string plot_out = "plots.svg";
  plot_cmd->add_option("logs", logs, "JSONL round logs")
      ->required()
      ->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", plot_out, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand(search)) finalize_config(cfg, search_binder);
    if (app.got_subcommand(train)) finalize_config(cfg, train_binder);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (app.got_subcommand(search))
      return cmd_search(cfg, out_root, run_id, !no_checkpoints);
    if (app.got_subcommand(train)) {
      try {
        return cmd_train(cfg, genome_g, genome_d, train_out, dump_samples);
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
    }
    if (app.got_subcommand(plot_cmd)) return cmd_plot(logs, plot_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
