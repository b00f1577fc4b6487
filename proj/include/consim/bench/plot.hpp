#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "consim/bench/fit.hpp"

namespace consim::bench {

/// Log-log scatter of the worst metric per n, as a standalone SVG document.
inline std::string svg_loglog(std::span<const Row> rows, const std::string& metric, const std::string& title) {
  std::map<std::size_t, double> worst;
  for (const auto& r : rows) {
    if (!r.completed) continue;
    const double y = metric_value(r, metric);
    if (y <= 0) continue;
    worst[r.n] = std::max(worst[r.n], y);
  }
  const double W = 480, H = 360, pad = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad / 2 << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << pad << "\" y2=\"" << pad / 2
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">log2 n</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
     << ")\" text-anchor=\"middle\">log2 " << metric << "</text>\n";
  if (!worst.empty()) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& [n, y] : worst) {
      x0 = std::min(x0, std::log2(static_cast<double>(n)));
      x1 = std::max(x1, std::log2(static_cast<double>(n)));
      y0 = std::min(y0, std::log2(y));
      y1 = std::max(y1, std::log2(y));
    }
    if (x1 - x0 < 1e-9) x1 = x0 + 1;
    if (y1 - y0 < 1e-9) y1 = y0 + 1;
    auto sx = [&](double v) { return pad + (v - x0) / (x1 - x0) * (W - 1.5 * pad - 10) + 5; };
    auto sy = [&](double v) { return H - pad - (v - y0) / (y1 - y0) * (H - 1.5 * pad - 10) - 5; };
    std::string path;
    for (const auto& [n, y] : worst) {
      char buf[160];
      const double px = sx(std::log2(static_cast<double>(n))), py = sy(std::log2(y));
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"steelblue\"/>\n", px, py);
      os << buf;
      std::snprintf(buf, sizeof buf, "%s%.1f,%.1f", path.empty() ? "" : " ", px, py);
      path += buf;
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"middle\">%zu</text>\n", px,
                    H - pad + 14, n);
      os << buf;
    }
    os << "<polyline points=\"" << path << "\" fill=\"none\" stroke=\"steelblue\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace consim::bench
