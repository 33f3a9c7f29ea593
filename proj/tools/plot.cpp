#include "plot.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace gansearch::plot {

namespace {

std::string run_label(const std::filesystem::path& log_path) {
  // Prefer the run manifest next to the log; fall back to directory/stem.
  const auto manifest = log_path.parent_path() / "manifest.json";
  std::string base = log_path.parent_path().filename().string();
  std::string tags;
  std::ifstream in(manifest);
  if (in) {
    try {
      nlohmann::json j = nlohmann::json::parse(in);
      if (j.contains("run_id")) base = j["run_id"].get<std::string>();
      if (j.contains("config")) {
        const auto& c = j["config"];
        if (c.value("mode", "") == "coupled") tags += " coupled";
        if (!c.value("weight_resetting", true)) tags += " no-wr";
      }
    } catch (const std::exception&) {
      // unusable manifest: keep the fallback label
    }
  }
  return base + "/" + log_path.stem().string() + tags;
}

}  // namespace

Series load_series(const std::filesystem::path& log_path,
                   std::vector<ParseIssue>& issues) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot read log " + log_path.string());

  std::map<long, std::pair<double, double>> best;  // round -> (fid, inv_is)
  long max_round = 0;
  std::vector<RoundRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_jsonl(line));
      max_round = std::max(max_round, static_cast<long>(records.back().round));
    } catch (const std::exception& e) {
      issues.push_back({log_path, lineno, e.what()});
    }
  }

  for (const auto& r : records) {
    if (r.collapsed) continue;
    const long key = static_cast<long>(r.cycle) * (max_round + 1) + r.round;
    auto [it, fresh] = best.try_emplace(
        key, std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity());
    it->second.first = std::min(it->second.first, r.fid_like);
    it->second.second = std::min(it->second.second, r.inv_is);
  }

  Series s;
  s.label = run_label(log_path);
  for (const auto& [round, v] : best) {
    s.rounds.push_back(static_cast<double>(round));
    s.best_fid.push_back(v.first);
    s.best_is.push_back(std::isfinite(v.second) && v.second > 0.0
                            ? 1.0 / v.second
                            : 0.0);
  }
  return s;
}

namespace {

constexpr int kWidth = 760;
constexpr int kPanelHeight = 240;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 28;
constexpr int kMarginBottom = 40;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct AxisRange {
  double lo = 0.0, hi = 1.0;
  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void draw_panel(std::ostringstream& svg, const std::vector<Series>& series,
                bool use_fid, int y_offset, const std::string& title) {
  double xmin = 0, xmax = 1;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s : series) {
    const auto& ys = use_fid ? s.best_fid : s.best_is;
    for (std::size_t i = 0; i < s.rounds.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      xmax = std::max(xmax, s.rounds[i]);
      ymin = std::min(ymin, ys[i]);
      ymax = std::max(ymax, ys[i]);
      any = true;
    }
  }
  if (!any) {
    ymin = 0;
    ymax = 1;
  }
  if (ymax - ymin < 1e-12) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double pad = 0.06 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
  const int y0 = y_offset + kMarginTop, y1 = y_offset + kPanelHeight - kMarginBottom;
  auto sx = [&](double x) {
    return x0 + (x - xmin) / std::max(1e-12, xmax - xmin) * (x1 - x0);
  };
  auto sy = [&](double y) {
    return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0);
  };

  svg << "<rect x='" << x0 << "' y='" << y0 << "' width='" << x1 - x0
      << "' height='" << y1 - y0 << "' fill='none' stroke='#999'/>\n";
  svg << "<text x='" << x0 << "' y='" << y0 - 8
      << "' font-size='13' font-family='sans-serif'>" << title << "</text>\n";

  for (int t = 0; t <= 4; ++t) {
    const double yv = ymin + t * (ymax - ymin) / 4;
    svg << "<line x1='" << x0 << "' y1='" << sy(yv) << "' x2='" << x1
        << "' y2='" << sy(yv) << "' stroke='#eee'/>\n";
    svg << "<text x='" << x0 - 6 << "' y='" << sy(yv) + 4
        << "' font-size='10' text-anchor='end' font-family='sans-serif'>"
        << fmt(yv) << "</text>\n";
  }
  const int xticks = std::min(8, static_cast<int>(xmax - xmin) + 1);
  for (int t = 0; t < xticks; ++t) {
    const double xv = xmin + t * (xmax - xmin) / std::max(1, xticks - 1);
    svg << "<text x='" << sx(xv) << "' y='" << y1 + 16
        << "' font-size='10' text-anchor='middle' font-family='sans-serif'>"
        << fmt(std::round(xv)) << "</text>\n";
  }
  svg << "<text x='" << (x0 + x1) / 2 << "' y='" << y1 + 32
      << "' font-size='11' text-anchor='middle' font-family='sans-serif'>round</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const auto& ys = use_fid ? s.best_fid : s.best_is;
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.rounds.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      pts << sx(s.rounds[i]) << "," << sy(ys[i]) << " ";
    }
    svg << "<polyline fill='none' stroke='" << kColors[k % 8]
        << "' stroke-width='1.5' points='" << pts.str() << "'/>\n";
    for (std::size_t i = 0; i < s.rounds.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      svg << "<circle cx='" << sx(s.rounds[i]) << "' cy='" << sy(ys[i])
          << "' r='2.5' fill='" << kColors[k % 8] << "'/>\n";
    }
  }
}

}  // namespace

void write_svg(const std::vector<Series>& series,
               const std::filesystem::path& out_path) {
  const int legend_h = 18 * static_cast<int>(series.size()) + 8;
  const int total_h = 2 * kPanelHeight + legend_h;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
      << "' height='" << total_h << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  draw_panel(svg, series, true, 0, "best fid_like per round (lower is better)");
  draw_panel(svg, series, false, kPanelHeight,
             "best is_like per round (higher is better)");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const int y = 2 * kPanelHeight + 14 + 18 * static_cast<int>(k);
    svg << "<line x1='" << kMarginLeft << "' y1='" << y - 4 << "' x2='"
        << kMarginLeft + 24 << "' y2='" << y - 4 << "' stroke='"
        << kColors[k % 8] << "' stroke-width='2'/>\n";
    svg << "<text x='" << kMarginLeft + 30 << "' y='" << y
        << "' font-size='11' font-family='sans-serif'>" << series[k].label
        << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << svg.str();
}

void write_csv(const std::vector<Series>& series,
               const std::filesystem::path& out_path) {
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << "round,run_id,best_fid,best_is\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.rounds.size(); ++i) {
      out << static_cast<long>(s.rounds[i]) << "," << s.label << ","
          << s.best_fid[i] << "," << s.best_is[i] << "\n";
    }
  }
}

}  // namespace gansearch::plot
