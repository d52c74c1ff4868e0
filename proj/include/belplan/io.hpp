#pragma once

// Result serialization: CSV with a fixed schema, simplification-level
// histograms, line-delimited tree snapshots, and minimal SVG line plots.
// Numbers are printed with maximum round-trip precision so same-seed reruns
// produce byte-identical files.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "belplan/episode.hpp"
#include "belplan/given_tree.hpp"
#include "belplan/metrics.hpp"

namespace belplan {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline constexpr const char* kResultsHeader =
    "scenario,planner,seed,session,action,return,motion_calls,obs_calls,"
    "resimpl_calls,wall_ms,particle_speedup\n";

struct ResultRow {
  std::string scenario;
  std::string planner;
  std::uint64_t seed = 0;
  int session = 0;
  int action = 0;
  double ret = 0.0;
  std::uint64_t motion_calls = 0;
  std::uint64_t obs_calls = 0;
  std::uint64_t resimpl_calls = 0;
  double wall_ms = 0.0;
  double particle_speedup = 0.0;
};

inline void append_result_rows(std::string& out, const std::string& scenario,
                               const std::string& planner, std::uint64_t seed,
                               const EpisodeResult& episode) {
  const double speedup = particle_speedup(episode.total.final_levels);
  for (const SessionRecord& rec : episode.sessions) {
    std::ostringstream line;
    line << scenario << ',' << planner << ',' << seed << ',' << rec.session << ','
         << rec.action << ',' << format_double(rec.reward) << ',' << rec.motion_calls << ','
         << rec.obs_calls << ',' << rec.resimplification_calls << ','
         << format_double(rec.wall_ms) << ',' << format_double(speedup) << '\n';
    out += line.str();
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw PlanningError("cannot open output file: " + path);
  f << content;
}

// depth,n_s,count histogram of final simplification levels.
inline std::string level_histogram_csv(const std::vector<LevelRecord>& levels) {
  std::map<std::pair<int, int>, std::uint64_t> hist;
  for (const LevelRecord& rec : levels) ++hist[{rec.depth, rec.n_s}];
  std::string out = "depth,n_s,count\n";
  for (const auto& [key, count] : hist) {
    out += std::to_string(key.first) + "," + std::to_string(key.second) + "," +
           std::to_string(count) + "\n";
  }
  return out;
}

// One line per node: id parent depth action obs=<v;v;...> level.  The root
// has no incoming edge; its action, observation, and level print as dashes.
inline std::string tree_snapshot(const GivenTree& tree, const std::vector<int>& node_levels) {
  std::string out;
  for (const auto& node : tree.nodes) {
    out += std::to_string(node->id) + " " + std::to_string(node->parent) + " " +
           std::to_string(node->depth) + " ";
    if (node->parent < 0) {
      out += "- obs=- -\n";
      continue;
    }
    out += std::to_string(node->action_index) + " obs=";
    for (std::size_t k = 0; k < node->problem.observation.size(); ++k) {
      if (k > 0) out += ';';
      out += format_double(node->problem.observation[k]);
    }
    out += " " + std::to_string(node_levels[node->id]) + "\n";
  }
  return out;
}

inline std::string bounds_study_csv(const std::vector<BoundsStudyPoint>& points) {
  std::string out = "step,boers,kde,discrete,kalman";
  if (!points.empty()) {
    for (int level : points.front().levels) {
      out += ",lower_s" + std::to_string(level) + ",upper_s" + std::to_string(level);
    }
  }
  out += "\n";
  for (const BoundsStudyPoint& p : points) {
    out += std::to_string(p.step) + "," + format_double(p.boers) + "," + format_double(p.kde) +
           "," + format_double(p.discrete) + "," + format_double(p.kalman);
    for (std::size_t i = 0; i < p.levels.size(); ++i) {
      out += "," + format_double(p.lower[i]) + "," + format_double(p.upper[i]);
    }
    out += "\n";
  }
  return out;
}

// ---- minimal SVG line plots ----

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> y;  // x is the index
};

inline std::string svg_line_plot(const std::string& title,
                                 const std::vector<SvgSeries>& series, int width = 720,
                                 int height = 420) {
  double y_min = 0.0, y_max = 1.0;
  std::size_t n = 0;
  bool first = true;
  for (const SvgSeries& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (first) {
        y_min = y_max = v;
        first = false;
      } else {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
  }
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
  const double pad = 50.0;
  const double plot_w = width - 2 * pad;
  const double plot_h = height - 2 * pad;
  auto sx = [&](std::size_t i) {
    return pad + (n > 1 ? plot_w * static_cast<double>(i) / (n - 1) : plot_w / 2);
  };
  auto sy = [&](double v) { return height - pad - plot_h * (v - y_min) / (y_max - y_min); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
  svg << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad
      << "\" y2=\"" << height - pad << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
      << height - pad << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"8\" y=\"" << sy(y_max) + 4 << "\" font-size=\"11\">" << format_double(y_max)
      << "</text>\n";
  svg << "<text x=\"8\" y=\"" << sy(y_min) + 4 << "\" font-size=\"11\">" << format_double(y_min)
      << "</text>\n";
  double legend_y = pad;
  for (const SvgSeries& s : series) {
    if (s.y.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      svg << sx(i) << ',' << sy(s.y[i]) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - pad - 140 << "\" y=\"" << legend_y << "\" font-size=\"12\" "
        << "fill=\"" << s.color << "\">" << s.label << "</text>\n";
    legend_y += 16.0;
  }
  svg << "</svg>\n";
  return svg.str();
}

// Scatter of 2D points (e.g. an executed trajectory).
inline std::string svg_scatter(const std::string& title,
                               const std::vector<std::pair<double, double>>& points,
                               int width = 480, int height = 480) {
  double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
  if (!points.empty()) {
    x_min = x_max = points.front().first;
    y_min = y_max = points.front().second;
    for (const auto& [x, y] : points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
  const double pad = 40.0;
  auto sx = [&](double x) { return pad + (width - 2 * pad) * (x - x_min) / (x_max - x_min); };
  auto sy = [&](double y) {
    return height - pad - (height - 2 * pad) * (y - y_min) / (y_max - y_min);
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    svg << "<circle cx=\"" << sx(points[i].first) << "\" cy=\"" << sy(points[i].second)
        << "\" r=\"3\" fill=\"steelblue\"/>\n";
    if (i > 0) {
      svg << "<line x1=\"" << sx(points[i - 1].first) << "\" y1=\"" << sy(points[i - 1].second)
          << "\" x2=\"" << sx(points[i].first) << "\" y2=\"" << sy(points[i].second)
          << "\" stroke=\"steelblue\" stroke-width=\"0.7\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

// Bubble chart of simplification levels: x = tree depth, y = final particle
// count, radius proportional to the fraction of that depth's nodes.
inline std::string level_histogram_svg(const std::vector<LevelRecord>& levels, int width = 520,
                                       int height = 420) {
  std::map<std::pair<int, int>, std::uint64_t> hist;
  std::map<int, std::uint64_t> per_depth;
  int max_depth = 1, max_ns = 1;
  for (const LevelRecord& rec : levels) {
    ++hist[{rec.depth, rec.n_s}];
    ++per_depth[rec.depth];
    max_depth = std::max(max_depth, rec.depth);
    max_ns = std::max(max_ns, rec.n_s);
  }
  const double pad = 50.0;
  auto sx = [&](int d) { return pad + (width - 2 * pad) * (d - 0.5) / max_depth; };
  auto sy = [&](int ns) {
    return height - pad - (height - 2 * pad) * static_cast<double>(ns) / max_ns;
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2
      << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">final simplification levels"
      << "</text>\n";
  for (const auto& [key, count] : hist) {
    const double frac = static_cast<double>(count) / per_depth[key.first];
    svg << "<circle cx=\"" << sx(key.first) << "\" cy=\"" << sy(key.second) << "\" r=\""
        << 4.0 + 24.0 * frac << "\" fill=\"indianred\" fill-opacity=\"0.6\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline std::string bounds_study_svg(const std::vector<BoundsStudyPoint>& points) {
  std::vector<SvgSeries> series;
  SvgSeries boers{"information estimate", "black", {}};
  SvgSeries kde{"kde", "purple", {}};
  for (const BoundsStudyPoint& p : points) {
    boers.y.push_back(p.boers);
    kde.y.push_back(p.kde);
  }
  series.push_back(boers);
  series.push_back(kde);
  static const char* kColors[] = {"red", "orange", "green", "blue", "teal"};
  if (!points.empty()) {
    for (std::size_t i = 0; i < points.front().levels.size(); ++i) {
      SvgSeries lo{"lower s=" + std::to_string(points.front().levels[i]),
                   kColors[i % 5], {}};
      SvgSeries hi{"upper s=" + std::to_string(points.front().levels[i]),
                   kColors[i % 5], {}};
      for (const BoundsStudyPoint& p : points) {
        lo.y.push_back(p.lower[i]);
        hi.y.push_back(p.upper[i]);
      }
      series.push_back(lo);
      series.push_back(hi);
    }
  }
  return svg_line_plot("adaptive bounds along the trajectory", series);
}

}  // namespace belplan
