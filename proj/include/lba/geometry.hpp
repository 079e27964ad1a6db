#pragma once

#include <algorithm>

namespace lba {

/// Axis-aligned region in image coordinates; (x, y) is the top-left corner.
struct RegionBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool valid() const { return x >= 0.0 && y >= 0.0 && w > 0.0 && h > 0.0; }
  bool within(double width, double height) const {
    return valid() && x + w <= width && y + h <= height;
  }
  bool operator==(const RegionBox&) const = default;
};

inline double intersection_area(const RegionBox& a, const RegionBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
}

/// Intersection over the target's own area: the share of `target` covered by
/// `predicted`. Not symmetric.
inline double iobb(const RegionBox& predicted, const RegionBox& target) {
  if (!(target.area() > 0.0)) return 0.0;
  return std::clamp(intersection_area(predicted, target) / target.area(), 0.0, 1.0);
}

}  // namespace lba
