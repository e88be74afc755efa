#pragma once

#include <algorithm>
#include <cmath>
#include <string>

namespace lvd {

struct Canvas {
  int width = 512;
  int height = 512;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned box in pixel coordinates, top-left origin, y grows downward.
// The id links the same object across frames.
struct BoundingBox {
  int id = 0;
  std::string name;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

inline bool operator==(const Point& a, const Point& b) {
  return a.x == b.x && a.y == b.y;
}

inline bool operator==(const BoundingBox& a, const BoundingBox& b) {
  return a.id == b.id && a.name == b.name && a.x == b.x && a.y == b.y &&
         a.w == b.w && a.h == b.h;
}

inline Point box_com(const BoundingBox& b) {
  return {b.x + b.w / 2.0, b.y + b.h / 2.0};
}

inline double box_area(const BoundingBox& b) {
  return static_cast<double>(b.w) * static_cast<double>(b.h);
}

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  double ix = std::max(0.0, static_cast<double>(std::min(a.x + a.w, b.x + b.w)) -
                                std::max(a.x, b.x));
  double iy = std::max(0.0, static_cast<double>(std::min(a.y + a.h, b.y + b.h)) -
                                std::max(a.y, b.y));
  return ix * iy;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  double inter = intersection_area(a, b);
  double uni = box_area(a) + box_area(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline bool in_bounds(const BoundingBox& b, const Canvas& c) {
  return b.x >= 0 && b.y >= 0 && b.x + b.w <= c.width && b.y + b.h <= c.height;
}

// Half-up rounding used everywhere coordinates are snapped to integers.
inline int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5));
}

}  // namespace lvd
