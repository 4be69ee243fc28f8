#pragma once

#include <string>

#include "metrics.hpp"

namespace fpo {

// Static two-panel SVG: success rate and mean return vs env ticks, raw
// series underlaid, trailing moving average (window smooth_window) on top.
// Succeeds for any well-formed metrics, including single-row and empty.
void write_curve_svg(const RunMetrics& m, const std::string& path,
                     int smooth_window);

}  // namespace fpo
