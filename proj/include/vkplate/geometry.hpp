#ifndef VKPLATE_GEOMETRY_HPP
#define VKPLATE_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace vkplate {

inline constexpr std::size_t invalid_index = std::numeric_limits<std::size_t>::max();

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline Point midpoint(Point a, Point b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
inline double signed_area2(Point a, Point b, Point c) { return cross(b - a, c - a); }

/// Symmetric 2x2 matrix, stored as its three independent entries.
struct SymMatrix2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  friend SymMatrix2 operator+(SymMatrix2 a, SymMatrix2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy}; }
  friend SymMatrix2 operator-(SymMatrix2 a, SymMatrix2 b) { return {a.xx - b.xx, a.xy - b.xy, a.yy - b.yy}; }
  friend SymMatrix2 operator*(double s, SymMatrix2 a) { return {s * a.xx, s * a.xy, s * a.yy}; }
  SymMatrix2& operator+=(SymMatrix2 b) {
    xx += b.xx;
    xy += b.xy;
    yy += b.yy;
    return *this;
  }
  friend bool operator==(const SymMatrix2&, const SymMatrix2&) = default;

  Point apply(Point v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
};

/// Frobenius product H1 : H2.
inline double double_dot(SymMatrix2 a, SymMatrix2 b) { return a.xx * b.xx + 2.0 * a.xy * b.xy + a.yy * b.yy; }

inline SymMatrix2 cofactor(SymMatrix2 a) { return {a.yy, -a.xy, a.xx}; }

/// Barycentric coordinates of p with respect to the triangle (a, b, c).
inline std::array<double, 3> barycentric(Point a, Point b, Point c, Point p) {
  const double det = signed_area2(a, b, c);
  const double l1 = signed_area2(p, b, c) / det;
  const double l2 = signed_area2(a, p, c) / det;
  return {l1, l2, 1.0 - l1 - l2};
}

}  // namespace vkplate

#endif  // VKPLATE_GEOMETRY_HPP
