#pragma once

#include <vector>

#include "greenlab/vec2.hpp"

namespace greenlab {

// Exact area of (closed polygon) intersect (disk of radius r at c).
// Green's theorem edge walk: inside portions contribute center triangles,
// outside portions contribute circle sectors with the same angular sweep.
// Works for any simple polygon, any center.
double polygon_disk_area(const std::vector<Vec2>& poly, Vec2 c, double r);

// Polygon clipped against half-plane {p : dot(p, n) >= off}.
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, Vec2 n, double off);

// Area of a circular segment: disk of radius r cut by a chord at signed
// distance d from the center, keeping the side away from the center.
double segment_area(double r, double d);

// Weighted points integrating over (triangle intersect disk) or
// (triangle minus disk).  Weights are positive; their sum reproduces the
// exact clipped area (each curved piece is rescaled to its closed-form
// area).  `degree` is the polynomial degree the straight-sided parts
// integrate exactly.
struct WeightedPoints {
  std::vector<Vec2> x;
  std::vector<double> w;
  double area = 0.0;
  void append(const WeightedPoints& o);
};

WeightedPoints triangle_disk_quadrature(Vec2 a, Vec2 b, Vec2 c, Vec2 center,
                                        double r, int degree);
WeightedPoints triangle_minus_disk_quadrature(Vec2 a, Vec2 b, Vec2 c, Vec2 center,
                                              double r, int degree);

// Plain triangle rule (degree 2, 4 or 6; positive weights).
WeightedPoints triangle_quadrature(Vec2 a, Vec2 b, Vec2 c, int degree);

// Barycentric rule on the reference triangle; weights sum to 1.
struct TriRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;
};
const TriRule& tri_rule(int degree);

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
  std::vector<double> x, w;
};
const GaussRule& gauss_rule(int npts);

}  // namespace greenlab
