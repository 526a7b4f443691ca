#include "ink/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "ink/error.hpp"

namespace ink {

BBox bounding_box(std::span<const PenPoint> points) {
  if (points.empty()) throw Error("bounding_box: empty point set");
  BBox b{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

InkLine normalize_line(const InkLine& line) {
  if (line.points.size() < 2) throw UserError("normalize_line: need at least 2 points");
  const BBox b = bounding_box(line.points);
  const double h = b.height();
  if (h <= 1e-12) {
    if (b.width() <= 1e-12) throw UserError("normalize_line: degenerate geometry (all points coincident)");
    throw UserError("normalize_line: degenerate geometry (zero bounding-box height)");
  }
  InkLine out = line;
  const double inv = 1.0 / h;
  for (auto& p : out.points) {
    p.x = (p.x - b.min_x) * inv;
    p.y = (p.y - b.min_y) * inv;
  }
  return out;
}

bool is_normalized(const InkLine& line, double tol) {
  if (line.points.size() < 2) return false;
  const BBox b = bounding_box(line.points);
  return std::abs(b.min_x) <= tol && std::abs(b.min_y) <= tol && std::abs(b.height() - 1.0) <= tol;
}

namespace {

double perpendicular_distance(const PenPoint& p, const PenPoint& a, const PenPoint& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 <= 1e-300) return std::hypot(p.x - a.x, p.y - a.y);
  return std::abs(dx * (a.y - p.y) - dy * (a.x - p.x)) / std::sqrt(len2);
}

void rdp_recurse(std::span<const PenPoint> pts, std::size_t first, std::size_t last, double epsilon,
                 std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double max_d = -1.0;
  std::size_t max_i = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = perpendicular_distance(pts[i], pts[first], pts[last]);
    if (d > max_d) {
      max_d = d;
      max_i = i;
    }
  }
  if (max_d > epsilon) {
    keep[max_i] = true;
    rdp_recurse(pts, first, max_i, epsilon, keep);
    rdp_recurse(pts, max_i, last, epsilon, keep);
  }
}

}  // namespace

std::vector<PenPoint> rdp_simplify(std::span<const PenPoint> stroke, double epsilon) {
  if (stroke.size() <= 2) return {stroke.begin(), stroke.end()};
  std::vector<bool> keep(stroke.size(), false);
  keep.front() = keep.back() = true;
  rdp_recurse(stroke, 0, stroke.size() - 1, epsilon, keep);
  std::vector<PenPoint> out;
  out.reserve(stroke.size());
  for (std::size_t i = 0; i < stroke.size(); ++i)
    if (keep[i]) out.push_back(stroke[i]);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> stroke_spans(std::span<const PenPoint> points) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool ends = points[i].pen != Pen::Down || i + 1 == points.size();
    if (ends) {
      spans.emplace_back(start, i);
      start = i + 1;
    }
  }
  return spans;
}

InkLine simplify_line(const InkLine& line, double epsilon) {
  InkLine out = line;
  out.points.clear();
  for (const auto& [first, last] : stroke_spans(line.points)) {
    const auto sub = std::span<const PenPoint>(line.points).subspan(first, last - first + 1);
    auto kept = rdp_simplify(sub, epsilon);
    out.points.insert(out.points.end(), kept.begin(), kept.end());
  }
  out.rebuild_boundaries();
  return out;
}

std::vector<std::pair<double, double>> resample_polyline(std::span<const std::pair<double, double>> path,
                                                         double points_per_unit) {
  if (path.size() < 2) return {path.begin(), path.end()};
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i)
    total += std::hypot(path[i].first - path[i - 1].first, path[i].second - path[i - 1].second);
  const std::size_t n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(total * points_per_unit)) + 1);
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  const double step = total / static_cast<double>(n - 1);
  std::size_t seg = 1;
  double seg_start = 0.0;
  double seg_len = std::hypot(path[1].first - path[0].first, path[1].second - path[0].second);
  out.push_back(path[0]);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double target = step * static_cast<double>(k);
    while (seg_start + seg_len < target && seg + 1 < path.size()) {
      seg_start += seg_len;
      ++seg;
      seg_len = std::hypot(path[seg].first - path[seg - 1].first, path[seg].second - path[seg - 1].second);
    }
    const double t = seg_len > 1e-300 ? (target - seg_start) / seg_len : 0.0;
    out.emplace_back(path[seg - 1].first + t * (path[seg].first - path[seg - 1].first),
                     path[seg - 1].second + t * (path[seg].second - path[seg - 1].second));
  }
  out.push_back(path.back());
  return out;
}

}  // namespace ink
