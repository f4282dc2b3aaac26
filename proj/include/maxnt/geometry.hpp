#ifndef MAXNT_GEOMETRY_HPP
#define MAXNT_GEOMETRY_HPP

#include <cmath>
#include <complex>
#include <vector>

namespace maxnt {

/// Planar point; all lengths in kilometers.
struct Point {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }

inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

inline std::complex<double> to_complex(Point p) { return {p.x, p.y}; }
inline Point to_point(std::complex<double> z) { return {z.real(), z.imag()}; }

inline Point centroid(const std::vector<Point>& pts) {
  Point c;
  if (pts.empty()) return c;
  for (const auto& p : pts) c = c + p;
  return (1.0 / static_cast<double>(pts.size())) * c;
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Signed angular difference a - b mapped into (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  return d;
}

}  // namespace maxnt

#endif  // MAXNT_GEOMETRY_HPP
