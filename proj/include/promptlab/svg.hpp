#pragma once

#include <string>
#include <vector>

#include "promptlab/harness.hpp"

namespace plab {

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

// Accuracy-vs-token style scatter plot.
std::string svg_scatter(const std::vector<ScatterPoint>& points, const std::string& x_label,
                        const std::string& y_label, const std::string& title);

// Per-model heat map of method-over-baseline deltas (methods x benchmarks).
std::string svg_delta_heatmap(const ResultGrid& grid);

}  // namespace plab
