#pragma once

#include <string>
#include <vector>

#include "ink/types.hpp"

namespace ink {

/// Debug rendering: each line is drawn as per-stroke polylines, stacked
/// vertically. Coordinates are y-down already, matching SVG.
std::string render_svg(const std::vector<InkLine>& lines, double scale = 60.0);
void write_svg(const std::vector<InkLine>& lines, const std::string& path, double scale = 60.0);

}  // namespace ink
