#pragma once

#include <string>
#include <vector>

namespace forgemorph::report {

struct FrontPoint {
  double latency_s = 0;
  double dsp = 0;
  bool feasible = true;
  std::string label;
};

/// Scatter of DSP slices against latency (log scale) with Pareto entries
/// highlighted. Plain SVG so reports stay diffable.
std::string render_front_svg(const std::vector<FrontPoint>& points,
                             const std::string& title);

std::vector<FrontPoint> load_front_csv(const std::string& path);

}  // namespace forgemorph::report
