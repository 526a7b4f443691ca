#pragma once

#include <span>
#include <vector>

#include "ink/types.hpp"

namespace ink {

struct BBox {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

BBox bounding_box(std::span<const PenPoint> points);

/// Translates so the bounding-box top-left is (0,0) and scales uniformly so
/// the bounding-box height is 1. Pen states untouched, aspect ratio preserved.
/// Throws on degenerate geometry (all points coincident or zero height).
InkLine normalize_line(const InkLine& line);

bool is_normalized(const InkLine& line, double tol = 1e-9);

/// Classic Ramer-Douglas-Peucker on a single stroke (one contiguous pen-down
/// segment). Endpoints and their pen markers are always retained; an interior
/// point survives iff its perpendicular distance to the chord exceeds epsilon
/// at some recursion level. Strokes of <= 2 points are returned unchanged.
std::vector<PenPoint> rdp_simplify(std::span<const PenPoint> stroke, double epsilon);

/// Maximal pen-down runs of a point sequence, as [first, last] index pairs.
/// A stroke ends at its first point whose pen state is Up or EndOfChar (or at
/// the end of the sequence).
std::vector<std::pair<std::size_t, std::size_t>> stroke_spans(std::span<const PenPoint> points);

/// Applies rdp_simplify per stroke across a whole line. EndOfChar counts are
/// preserved (stroke endpoints are never dropped).
InkLine simplify_line(const InkLine& line, double epsilon);

/// Resamples a polyline by arc length at `points_per_unit` density. Both
/// endpoints are always emitted.
std::vector<std::pair<double, double>> resample_polyline(std::span<const std::pair<double, double>> path,
                                                         double points_per_unit);

}  // namespace ink
