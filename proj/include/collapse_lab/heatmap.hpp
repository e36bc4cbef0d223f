#ifndef COLLAPSE_LAB_HEATMAP_HPP_
#define COLLAPSE_LAB_HEATMAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "collapse_lab/errors.hpp"
#include "collapse_lab/io.hpp"
#include "collapse_lab/sweep.hpp"
#include "collapse_lab/theory.hpp"

namespace collapse_lab {

enum class HeatmapMode { kTheory, kEmpirical, kGap };

inline const char* to_string(HeatmapMode mode) {
  switch (mode) {
    case HeatmapMode::kTheory: return "theory";
    case HeatmapMode::kEmpirical: return "empirical";
    case HeatmapMode::kGap: return "gap";
  }
  return "?";
}

/// Cell values of a sweep arranged on its (alpha, tau) grid; repeats are averaged.
struct HeatmapGrid {
  std::vector<double> alphas;              // rows, increasing
  std::vector<double> taus;                // columns, increasing
  std::vector<std::vector<double>> value;  // value[alpha index][tau index]; NaN if every repeat failed
};

inline HeatmapGrid heatmap_grid(const SweepResult& result, HeatmapMode mode) {
  if (result.rows.empty()) throw ShapeError("render_heatmap: empty sweep result");
  std::set<double> alpha_set, tau_set;
  std::map<std::pair<double, double>, std::pair<double, std::size_t>> acc;
  std::map<std::pair<double, double>, std::size_t> counts;
  for (const auto& r : result.rows) {
    alpha_set.insert(r.alpha);
    tau_set.insert(r.tau);
    ++counts[{r.alpha, r.tau}];
    double v = 0.0;
    switch (mode) {
      case HeatmapMode::kTheory: v = r.theory_within; break;
      case HeatmapMode::kEmpirical: v = r.empirical_within; break;
      case HeatmapMode::kGap: v = r.abs_gap; break;
    }
    auto& [sum, k] = acc[{r.alpha, r.tau}];
    if (std::isfinite(v)) {
      sum += v;
      ++k;
    }
  }
  HeatmapGrid grid;
  grid.alphas.assign(alpha_set.begin(), alpha_set.end());
  grid.taus.assign(tau_set.begin(), tau_set.end());
  if (counts.size() != grid.alphas.size() * grid.taus.size())
    throw ShapeError("render_heatmap: sweep does not cover a full rectangular (alpha, tau) grid");
  const std::size_t repeats = counts.begin()->second;
  for (const auto& [cell, k] : counts)
    if (k != repeats) throw ShapeError("render_heatmap: cells have differing repeat counts");
  for (double a : grid.alphas) {
    auto& row = grid.value.emplace_back();
    for (double t : grid.taus) {
      const auto& [sum, k] = acc.at({a, t});
      row.push_back(k > 0 ? sum / static_cast<double>(k) : std::nan(""));
    }
  }
  return grid;
}

namespace detail {

/// Single-hue ramp: white at 0, dark blue at 1.
inline std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 + t * (8.0 - 255.0)));
  const int g = static_cast<int>(std::lround(255.0 + t * (48.0 - 255.0)));
  const int b = static_cast<int>(std::lround(255.0 + t * (107.0 - 255.0)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string fixed(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kMissingCellColor = "#bdbdbd";

/// Self-contained SVG heatmap. Alpha increases upward, tau to the right. The
/// color scale spans [0, max within-variance] (theory and empirical modes share
/// the scale across both columns) or [0, max gap]. Theory mode overlays the
/// collapse boundary alpha_threshold(m, n, tau) for the sweep's base (m, n).
inline std::string render_heatmap_svg(const SweepResult& result, HeatmapMode mode, std::size_t m, std::size_t n) {
  const HeatmapGrid grid = heatmap_grid(result, mode);
  double vmax = 0.0;
  for (const auto& r : result.rows) {
    if (mode == HeatmapMode::kGap) {
      if (std::isfinite(r.abs_gap)) vmax = std::max(vmax, r.abs_gap);
    } else {
      vmax = std::max(vmax, r.theory_within);
      if (std::isfinite(r.empirical_within)) vmax = std::max(vmax, r.empirical_within);
    }
  }
  const double scale = vmax > 0.0 ? vmax : 1.0;
  double vmin_seen = INFINITY, vmax_seen = -INFINITY;
  for (const auto& row : grid.value)
    for (double v : row)
      if (std::isfinite(v)) {
        vmin_seen = std::min(vmin_seen, v);
        vmax_seen = std::max(vmax_seen, v);
      }

  const double cw = 32.0, ch = 22.0, left = 70.0, top = 50.0;
  const std::size_t rows = grid.alphas.size(), cols = grid.taus.size();
  const double plot_w = cw * static_cast<double>(cols), plot_h = ch * static_cast<double>(rows);
  const double legend_x = left + plot_w + 30.0, legend_w = 18.0;
  const double width = legend_x + legend_w + 90.0, height = top + plot_h + 60.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fixed(width, 0) + "\" height=\"" +
         detail::fixed(height, 0) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  const char* title = mode == HeatmapMode::kTheory      ? "Theory within-class variance"
                      : mode == HeatmapMode::kEmpirical ? "Empirical within-class variance"
                                                        : "|theory - empirical| within-class variance";
  svg += "<text x=\"" + detail::fixed(left, 1) + "\" y=\"20\" font-size=\"13\">" + title + "</text>\n";

  auto cell_y = [&](std::size_t ai) { return top + plot_h - ch * static_cast<double>(ai + 1); };
  for (std::size_t ai = 0; ai < rows; ++ai)
    for (std::size_t ti = 0; ti < cols; ++ti) {
      const double v = grid.value[ai][ti];
      const std::string color = std::isfinite(v) ? detail::ramp_color(v / scale) : kMissingCellColor;
      svg += "<rect x=\"" + detail::fixed(left + cw * static_cast<double>(ti), 1) + "\" y=\"" +
             detail::fixed(cell_y(ai), 1) + "\" width=\"" + detail::fixed(cw, 1) + "\" height=\"" +
             detail::fixed(ch, 1) + "\" fill=\"" + color + "\"><title>alpha=" + io::format_real(grid.alphas[ai]) +
             " tau=" + io::format_real(grid.taus[ti]) + " value=" + io::format_real(v) + "</title></rect>\n";
    }

  for (std::size_t ti = 0; ti < cols; ++ti)
    svg += "<text x=\"" + detail::fixed(left + cw * (static_cast<double>(ti) + 0.5), 1) + "\" y=\"" +
           detail::fixed(top + plot_h + 14.0, 1) + "\" text-anchor=\"middle\" font-size=\"8\">" +
           detail::fixed(grid.taus[ti], 2) + "</text>\n";
  for (std::size_t ai = 0; ai < rows; ++ai)
    svg += "<text x=\"" + detail::fixed(left - 5.0, 1) + "\" y=\"" + detail::fixed(cell_y(ai) + ch * 0.5 + 3.0, 1) +
           "\" text-anchor=\"end\" font-size=\"8\">" + detail::fixed(grid.alphas[ai], 2) + "</text>\n";
  svg += "<text x=\"" + detail::fixed(left + plot_w / 2.0, 1) + "\" y=\"" + detail::fixed(top + plot_h + 34.0, 1) +
         "\" text-anchor=\"middle\">temperature tau</text>\n";
  svg += "<text x=\"18\" y=\"" + detail::fixed(top + plot_h / 2.0, 1) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         detail::fixed(top + plot_h / 2.0, 1) + ")\">loss-combining coefficient alpha</text>\n";

  if (mode == HeatmapMode::kTheory) {
    // alpha -> y, piecewise linear through the row centers, extended by half a row at each end.
    auto alpha_to_y = [&](double a) {
      if (rows == 1) return top + plot_h / 2.0;
      const auto& g = grid.alphas;
      std::size_t k = 0;
      while (k + 2 < rows && a > g[k + 1]) ++k;
      const double frac = (a - g[k]) / (g[k + 1] - g[k]);
      const double y = cell_y(k) + ch * 0.5 - frac * ch;
      return std::clamp(y, top, top + plot_h);
    };
    std::string points;
    for (std::size_t ti = 0; ti < cols; ++ti) {
      const double x = left + cw * (static_cast<double>(ti) + 0.5);
      points += (ti ? " " : "") + detail::fixed(x, 2) + "," + detail::fixed(alpha_to_y(alpha_threshold(m, n, grid.taus[ti])), 2);
    }
    svg += "<polyline class=\"collapse-boundary\" points=\"" + points +
           "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"5,3\"/>\n";
  }

  // Legend: vertical ramp over [0, scale].
  const int steps = 50;
  for (int s = 0; s < steps; ++s) {
    const double t0 = static_cast<double>(s) / steps;
    svg += "<rect x=\"" + detail::fixed(legend_x, 1) + "\" y=\"" + detail::fixed(top + plot_h * (1.0 - t0 - 1.0 / steps), 2) +
           "\" width=\"" + detail::fixed(legend_w, 1) + "\" height=\"" + detail::fixed(plot_h / steps + 0.5, 2) +
           "\" fill=\"" + detail::ramp_color(t0 + 0.5 / steps) + "\"/>\n";
  }
  svg += "<text class=\"legend-max\" x=\"" + detail::fixed(legend_x + legend_w + 4.0, 1) + "\" y=\"" +
         detail::fixed(top + 8.0, 1) + "\">" + detail::fixed(scale, 4) + "</text>\n";
  svg += "<text class=\"legend-min\" x=\"" + detail::fixed(legend_x + legend_w + 4.0, 1) + "\" y=\"" +
         detail::fixed(top + plot_h, 1) + "\">0</text>\n";
  svg += "<text x=\"" + detail::fixed(left, 1) + "\" y=\"36\" font-size=\"9\">cell min " +
         (std::isfinite(vmin_seen) ? detail::fixed(vmin_seen, 4) : std::string("n/a")) + ", cell max " +
         (std::isfinite(vmax_seen) ? detail::fixed(vmax_seen, 4) : std::string("n/a")) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

inline void render_heatmap(const SweepResult& result, HeatmapMode mode, const std::filesystem::path& path,
                           std::size_t m = 10, std::size_t n = 10) {
  io::write_file(path, render_heatmap_svg(result, mode, m, n));
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_HEATMAP_HPP_
