#pragma once

// Static SVG output: line plots (optionally log-y) and heatmaps with a
// discrete five-step color scale.

#include <string>
#include <vector>

#include "blockspec/heterogeneity.hpp"

namespace blockspec {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Non-finite points, and non-positive ones on a log axis, are dropped.
std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotOptions& opts);

/// Cells are binned into [0,0.2), [0.2,0.4), [0.4,0.6), [0.6,0.8), [0.8,1].
std::string svg_heatmap(const HeterogeneityReport& r, const std::string& title);

/// Palette used by svg_heatmap, lowest bin first.
const std::vector<std::string>& heatmap_palette();

}  // namespace blockspec
