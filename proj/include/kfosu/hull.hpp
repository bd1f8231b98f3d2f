#pragma once

#include "kfosu/types.hpp"

#include <vector>

namespace kfosu {

/// Sign of the orientation of (a, b, c): +1 counterclockwise, -1 clockwise,
/// 0 collinear. Exact for all finite double inputs (floating-point filter
/// with an exact rational fallback).
int orient2d(double ax, double ay, double bx, double by, double cx, double cy);

/// Convex hull vertices of the rows of `points` (n x 2), counterclockwise,
/// starting from the lexicographically smallest point. Points lying on a hull
/// edge are excluded. For collinear input the two extremes are returned; for
/// a single distinct point, its index. Among duplicates the lowest row index
/// represents the location. Throws ConfigError for an empty set.
std::vector<Eigen::Index> convex_hull(const Eigen::Ref<const Matrix>& points);

}  // namespace kfosu
