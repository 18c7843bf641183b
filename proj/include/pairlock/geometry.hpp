#ifndef PAIRLOCK_GEOMETRY_HPP
#define PAIRLOCK_GEOMETRY_HPP

#include <algorithm>
#include <cmath>

namespace pairlock {

// Axis-aligned box, half-open pixel interval [min, max), origin top-left.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
  }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
};

inline double area(const BoundingBox& b) { return b.width() * b.height(); }

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = area(a) + area(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline BoundingBox union_box(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
          std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

inline bool contains_point(const BoundingBox& b, double x, double y) {
  return b.x_min <= x && x < b.x_max && b.y_min <= y && y < b.y_max;
}

inline BoundingBox intersect_box(const BoundingBox& a, const BoundingBox& b) {
  BoundingBox r{std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min),
                std::min(a.x_max, b.x_max), std::min(a.y_max, b.y_max)};
  if (r.x_min > r.x_max) r.x_max = r.x_min;
  if (r.y_min > r.y_max) r.y_max = r.y_min;
  return r;
}

}  // namespace pairlock

#endif  // PAIRLOCK_GEOMETRY_HPP
