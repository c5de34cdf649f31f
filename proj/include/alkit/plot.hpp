#pragma once

#include <string>
#include <vector>

namespace alkit {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // parallel to x
};

// Minimal line chart as standalone SVG text: axes, tick labels, one polyline
// per series, legend. Output depends only on the arguments, so identical
// inputs give identical bytes.
std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::string& ylabel,
                           const std::vector<PlotSeries>& series,
                           int width = 640, int height = 420);

}  // namespace alkit
