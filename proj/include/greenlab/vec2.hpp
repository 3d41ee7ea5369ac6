#pragma once

#include <array>
#include <cmath>

namespace greenlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double xx, double yy) : x(xx), y(yy) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  double operator[](int i) const { return i == 0 ? x : y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline Vec2 normalized(Vec2 a) { double n = norm(a); return {a.x / n, a.y / n}; }
inline Vec2 dir(double angle) { return {std::cos(angle), std::sin(angle)}; }
inline double angle_of(Vec2 a) { return std::atan2(a.y, a.x); }
inline Vec2 rotate(Vec2 v, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// 2x2 matrix, row-major.  Used for velocity gradients and Green values.
struct Mat2 {
  std::array<double, 4> a{0, 0, 0, 0};

  double& operator()(int i, int j) { return a[2 * i + j]; }
  double operator()(int i, int j) const { return a[2 * i + j]; }

  Mat2 operator+(const Mat2& o) const {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.a[i] = a[i] + o.a[i];
    return r;
  }
  Mat2 operator-(const Mat2& o) const {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.a[i] = a[i] - o.a[i];
    return r;
  }
  Mat2 operator*(double s) const {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.a[i] = a[i] * s;
    return r;
  }
  double frobenius() const {
    double s = 0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
  }
  double max_abs() const {
    double s = 0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
  }
};

// Distance from p to the segment [a,b].
inline double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double L2 = norm2(ab);
  if (L2 == 0.0) return dist(p, a);
  double t = dot(p - a, ab) / L2;
  t = std::clamp(t, 0.0, 1.0);
  return dist(p, a + ab * t);
}

inline Vec2 closest_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double L2 = norm2(ab);
  if (L2 == 0.0) return a;
  double t = std::clamp(dot(p - a, ab) / L2, 0.0, 1.0);
  return a + ab * t;
}

}  // namespace greenlab
