#pragma once

// Minimal static SVG rendering of result tables.

#include <optional>
#include <string>
#include <vector>

namespace spectral_edge {

struct ResultRow;

struct ChartBar {
  std::string label;
  double value = 0;
  std::optional<double> se;
};

struct BarPanel {
  std::string title;
  std::vector<ChartBar> bars;
  std::optional<double> reference;  // vertical guide, e.g. the nominal level
};

// Stacked horizontal bar panels in one SVG document.
std::string bar_panels_svg(const std::vector<BarPanel>& panels);

// One panel per (experiment, metric, statistic); the "stat=" entry of the
// cell label selects the statistic.
std::string render_result_charts(const std::vector<ResultRow>& rows);

}  // namespace spectral_edge
