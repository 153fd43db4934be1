#pragma once

// Static SVG line plots of metric-vs-parameter curves.

#include <string>
#include <vector>

namespace motionlm {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log2_x = false;
  std::vector<PlotSeries> series;
  std::string config_digest;  // embedded as metadata
};

std::string render_svg(const LinePlot& plot);
void save_svg(const LinePlot& plot, const std::string& path);

}  // namespace motionlm
