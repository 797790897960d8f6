#include "forgemorph/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forgemorph/errors.hpp"

namespace forgemorph::report {

namespace {

std::string fmt(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

std::string fmt_sci(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.1e", value);
  return buffer;
}

}  // namespace

std::string render_front_svg(const std::vector<FrontPoint>& points,
                             const std::string& title) {
  if (points.empty()) raise(Errc::invalid_argument, "empty front has nothing to plot");

  constexpr int width = 640;
  constexpr int height = 480;
  constexpr int margin = 64;

  double lat_min = points[0].latency_s;
  double lat_max = points[0].latency_s;
  double dsp_min = points[0].dsp;
  double dsp_max = points[0].dsp;
  for (const FrontPoint& p : points) {
    lat_min = std::min(lat_min, p.latency_s);
    lat_max = std::max(lat_max, p.latency_s);
    dsp_min = std::min(dsp_min, p.dsp);
    dsp_max = std::max(dsp_max, p.dsp);
  }
  // Log-scale latency axis; pad degenerate ranges.
  const double log_min = std::log10(std::max(lat_min, 1e-12)) - 0.1;
  const double log_max = std::log10(std::max(lat_max, 1e-12)) + 0.1;
  const double dsp_lo = dsp_min - std::max(1.0, 0.05 * (dsp_max - dsp_min));
  const double dsp_hi = dsp_max + std::max(1.0, 0.05 * (dsp_max - dsp_min));

  const auto x_of = [&](double latency) {
    const double t = (std::log10(std::max(latency, 1e-12)) - log_min) / (log_max - log_min);
    return margin + t * (width - 2 * margin);
  };
  const auto y_of = [&](double dsp) {
    const double t = (dsp - dsp_lo) / (dsp_hi - dsp_lo);
    return height - margin - t * (height - 2 * margin);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // Axes.
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << "latency (s, log scale)</text>\n";
  svg << "<text x=\"18\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << height / 2 << ")\">DSP slices</text>\n";

  // Tick labels at the extremes.
  svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt_sci(std::pow(10.0, log_min)) << "</text>\n";
  svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt_sci(std::pow(10.0, log_max)) << "</text>\n";
  svg << "<text x=\"" << margin - 8 << "\" y=\"" << y_of(dsp_min)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(dsp_min) << "</text>\n";
  svg << "<text x=\"" << margin - 8 << "\" y=\"" << y_of(dsp_max)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(dsp_max) << "</text>\n";

  for (const FrontPoint& p : points) {
    const char* fill = p.feasible ? "#1f77b4" : "#ff7f0e";
    svg << "<circle cx=\"" << fmt(x_of(p.latency_s)) << "\" cy=\""
        << fmt(y_of(p.dsp)) << "\" r=\"" << (p.feasible ? 5 : 3)
        << "\" fill=\"" << fill << "\" stroke=\"black\" stroke-width=\"0.5\">"
        << "<title>" << p.label << "</title></circle>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<FrontPoint> load_front_csv(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) raise(Errc::io_error, "cannot open front file '" + path + "'");
  std::string line;
  if (!std::getline(stream, line) ||
      line != "allocation,latency_s,dsp,lut,bram,feasible") {
    raise(Errc::malformed_document, "unexpected front CSV header");
  }
  std::vector<FrontPoint> points;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string allocation, latency, dsp, lut, bram, feasible;
    if (!std::getline(row, allocation, ',') || !std::getline(row, latency, ',') ||
        !std::getline(row, dsp, ',') || !std::getline(row, lut, ',') ||
        !std::getline(row, bram, ',') || !std::getline(row, feasible)) {
      raise(Errc::malformed_document, "bad front CSV row: " + line);
    }
    FrontPoint point;
    point.label = allocation;
    point.latency_s = std::stod(latency);
    point.dsp = std::stod(dsp);
    point.feasible = feasible == "1";
    points.push_back(point);
  }
  if (points.empty()) raise(Errc::malformed_document, "front file has no rows");
  return points;
}

}  // namespace forgemorph::report
