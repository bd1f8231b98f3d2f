#include "kfosu/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>

namespace kfosu {

namespace {

int exact_orient(double ax, double ay, double bx, double by, double cx, double cy) {
  using boost::multiprecision::cpp_rational;
  const cpp_rational det = (cpp_rational(bx) - cpp_rational(ax)) * (cpp_rational(cy) - cpp_rational(ay)) -
                           (cpp_rational(by) - cpp_rational(ay)) * (cpp_rational(cx) - cpp_rational(ax));
  return det > 0 ? 1 : (det < 0 ? -1 : 0);
}

}  // namespace

int orient2d(double ax, double ay, double bx, double by, double cx, double cy) {
  const double l = (bx - ax) * (cy - ay);
  const double r = (by - ay) * (cx - ax);
  const double det = l - r;
  // Error bound of the naive determinant (Shewchuk's ccwerrboundA).
  constexpr double eps = std::numeric_limits<double>::epsilon() / 2.0;
  constexpr double bound = (3.0 + 16.0 * eps) * eps;
  const double tol = bound * (std::abs(l) + std::abs(r));
  if (det > tol) return 1;
  if (-det > tol) return -1;
  return exact_orient(ax, ay, bx, by, cx, cy);
}

std::vector<Eigen::Index> convex_hull(const Eigen::Ref<const Matrix>& points) {
  if (points.cols() != 2) throw ConfigError("convex_hull: points must be n x 2");
  const Eigen::Index n = points.rows();
  if (n < 1) throw ConfigError("convex_hull: need at least one point");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(points(i, 0)) || !std::isfinite(points(i, 1))) {
      throw ConfigError("convex_hull: non-finite coordinate at row " + std::to_string(i));
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
    return points(a, 1) < points(b, 1);
  });
  // Stable sort keeps the lowest index first among duplicates.
  std::vector<Eigen::Index> pts;
  pts.reserve(order.size());
  for (const auto i : order) {
    if (!pts.empty() && points(pts.back(), 0) == points(i, 0) && points(pts.back(), 1) == points(i, 1)) continue;
    pts.push_back(i);
  }
  if (pts.size() <= 2) return pts;

  auto turn = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    return orient2d(points(a, 0), points(a, 1), points(b, 0), points(b, 1), points(c, 0), points(c, 1));
  };

  std::vector<Eigen::Index> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto p : pts) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && turn(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  // Collinear input leaves only the two extremes.
  return hull;
}

}  // namespace kfosu
