#include "ink/svg.hpp"

#include <fstream>
#include <sstream>

#include "ink/error.hpp"
#include "ink/geometry.hpp"

namespace ink {

std::string render_svg(const std::vector<InkLine>& lines, double scale) {
  static const char* palette[] = {"#1f2430", "#c0392b", "#2471a3", "#1e8449", "#9b59b6", "#b7950b"};
  std::ostringstream body;
  double y_off = 0.0;
  double width = 1.0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& line = lines[li];
    if (line.points.empty()) continue;
    const BBox b = bounding_box(line.points);
    const char* color = palette[li % (sizeof(palette) / sizeof(palette[0]))];
    for (const auto& [first, last] : stroke_spans(line.points)) {
      body << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << 0.025 * scale
           << "\" points=\"";
      for (std::size_t i = first; i <= last; ++i) {
        body << (line.points[i].x - b.min_x) * scale << ',' << (line.points[i].y - b.min_y + y_off) * scale << ' ';
      }
      body << "\"/>\n";
    }
    width = std::max(width, b.width());
    y_off += b.height() + 0.4;
  }
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (width + 0.5) * scale << "\" height=\""
      << (y_off + 0.5) * scale << "\">\n"
      << body.str() << "</svg>\n";
  return out.str();
}

void write_svg(const std::vector<InkLine>& lines, const std::string& path, double scale) {
  std::ofstream out(path);
  if (!out) throw UserError("write_svg: cannot open " + path + " for writing");
  out << render_svg(lines, scale);
}

}  // namespace ink
