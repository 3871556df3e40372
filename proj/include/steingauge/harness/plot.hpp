#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace steingauge {

struct PlotSeries {
  std::string label;
  std::string colour;
  std::vector<std::pair<double, double>> points;  // (n, value), value > 0
};

// Log-log line plot, decades on both axes.
inline std::string loglog_svg(const std::string& title, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 440, left = 70, right = 160, top = 40, bottom = 50;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!(x > 0 && y > 0)) continue;
      xlo = std::min(xlo, std::log10(x));
      xhi = std::max(xhi, std::log10(x));
      ylo = std::min(ylo, std::log10(y));
      yhi = std::max(yhi, std::log10(y));
    }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  xlo = std::floor(xlo), xhi = std::max(std::ceil(xhi), xlo + 1);
  ylo = std::floor(ylo), yhi = std::max(std::ceil(yhi), ylo + 1);
  auto px = [&](double x) { return left + (std::log10(x) - xlo) / (xhi - xlo) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (std::log10(y) - ylo) / (yhi - ylo) * (H - top - bottom); };
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                W, H);
  out += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"24\" font-size=\"14\">", left);
  out += buf + title + "</text>\n";
  for (double e = xlo; e <= xhi + 1e-9; e += 1) {
    const double x = px(std::pow(10.0, e));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"#ddd\"/>"
                  "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">1e%g</text>\n",
                  x, top, x, H - bottom, x, H - bottom + 18, e);
    out += buf;
  }
  for (double e = ylo; e <= yhi + 1e-9; e += 1) {
    const double y = py(std::pow(10.0, e));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                  "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">1e%g</text>\n",
                  left, y, W - right, y, left - 6, y + 4, e);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">n</text>\n", (left + W - right) / 2,
                H - 12);
  out += buf;
  double legend_y = top + 10;
  for (const auto& s : series) {
    std::string path;
    for (const auto& [x, y] : s.points) {
      if (!(x > 0 && y > 0)) continue;
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", path.empty() ? "" : " ", px(x), py(y));
      path += buf;
    }
    out += "<polyline fill=\"none\" stroke=\"" + s.colour + "\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
    for (const auto& [x, y] : s.points) {
      if (!(x > 0 && y > 0)) continue;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", px(x), py(y),
                    s.colour.c_str());
      out += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">",
                  W - right + 12, legend_y, W - right + 36, legend_y, s.colour.c_str(), W - right + 42, legend_y + 4);
    out += buf + s.label + "</text>\n";
    legend_y += 18;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace steingauge
