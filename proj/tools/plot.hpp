#pragma once

#include "gansearch/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gansearch::plot {

struct Series {
  std::string label;
  std::vector<double> rounds;    // global round index (cycles concatenated)
  std::vector<double> best_fid;  // min fid_like per round, non-collapsed
  std::vector<double> best_is;   // max 1/inv_is per round
};

struct ParseIssue {
  std::filesystem::path file;
  int line = 0;
  std::string what;
};

/// Reduce one JSONL log to its per-round best curves. Malformed lines are
/// collected in `issues` and skipped.
Series load_series(const std::filesystem::path& log_path,
                   std::vector<ParseIssue>& issues);

/// Two stacked panels (best fid, best IS) with a shared legend.
void write_svg(const std::vector<Series>& series,
               const std::filesystem::path& out_path);

/// Columns: round, run_id, best_fid, best_is.
void write_csv(const std::vector<Series>& series,
               const std::filesystem::path& out_path);

}  // namespace gansearch::plot
