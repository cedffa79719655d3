#pragma once

#include <cmath>
#include <compare>

namespace mdfe {

/// Point or vector in the plane, in domain units.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
  friend constexpr auto operator<=>(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }
constexpr Point2 midpoint(Point2 a, Point2 b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

/// Distance from p to the closed segment [a, b].
inline double distance_to_segment(Point2 p, Point2 a, Point2 b)
{
  const Point2 d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0)
    return distance(p, a);
  double t = dot(p - a, d) / len2;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return distance(p, a + t * d);
}

} // namespace mdfe
