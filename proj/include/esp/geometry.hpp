#pragma once

#include <cmath>

namespace esp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 1.0, b = 0.0;
  double c = 0.0, d = 1.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  Vec2 operator*(const Vec2& v) const {
    return {a * v.x + b * v.y, c * v.x + d * v.y};
  }

  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }

  Mat2 transpose() const { return {a, c, b, d}; }
  double det() const { return a * d - b * c; }

  double max_abs_diff(const Mat2& o) const {
    double m = std::fabs(a - o.a);
    m = std::max(m, std::fabs(b - o.b));
    m = std::max(m, std::fabs(c - o.c));
    m = std::max(m, std::fabs(d - o.d));
    return m;
  }
};

}  // namespace esp
