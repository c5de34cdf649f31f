#include "alkit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "alkit/common.hpp"

namespace alkit {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2", "#aec7e8"};
constexpr int kPaletteSize = 11;

// Fixed short form so axis labels do not wobble with value magnitude.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::string& ylabel,
                           const std::vector<PlotSeries>& series, int width,
                           int height) {
  if (series.empty()) throw ConfigError("plot: no series");
  if (width < 160 || height < 120) throw ConfigError("plot: canvas too small");

  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw ConfigError("plot: series '" + s.name + "' x/y length mismatch");
    if (s.x.empty())
      throw ConfigError("plot: series '" + s.name + "' is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw ConfigError("plot: non-finite value in series '" + s.name + "'");
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const double left = 64, right = 16, top = 36, bottom = 48;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const auto px = [&](double v) {
    return left + (v - xmin) / (xmax - xmin) * pw;
  };
  const auto py = [&](double v) {
    return top + ph - (v - ymin) / (ymax - ymin) * ph;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(width / 2.0) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" +
         escape(title) + "</text>\n";

  // Frame and ticks.
  svg += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" +
         num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t < kTicks; ++t) {
    const double f = static_cast<double>(t) / (kTicks - 1);
    const double xv = xmin + f * (xmax - xmin);
    const double yv = ymin + f * (ymax - ymin);
    svg += "<line x1=\"" + num(px(xv)) + "\" y1=\"" + num(top + ph) +
           "\" x2=\"" + num(px(xv)) + "\" y2=\"" + num(top + ph + 4) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(top + ph + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"10\">" +
           num(xv) + "</text>\n";
    svg += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(py(yv)) +
           "\" x2=\"" + num(left) + "\" y2=\"" + num(py(yv)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(yv) + 3) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"10\">" +
           num(yv) + "</text>\n";
  }
  svg += "<text x=\"" + num(left + pw / 2.0) + "\" y=\"" +
         num(height - 12.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" +
         escape(xlabel) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num(top + ph / 2.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 " +
         num(top + ph / 2.0) + ")\">" +
         escape(ylabel) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    std::string pts;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) pts += " ";
      pts += num(px(series[s].x[i])) + "," + num(py(series[s].y[i]));
    }
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.5\"/>\n";
    // Legend swatch and label, stacked in the top-right corner.
    const double ly = top + 10 + 14.0 * static_cast<double>(s);
    svg += "<line x1=\"" + num(left + pw - 90) + "\" y1=\"" + num(ly) +
           "\" x2=\"" + num(left + pw - 74) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + num(left + pw - 70) + "\" y=\"" + num(ly + 3) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" +
           escape(series[s].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace alkit
