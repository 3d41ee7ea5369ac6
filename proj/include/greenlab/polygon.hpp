#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greenlab/vec2.hpp"

namespace greenlab {

// Reifenberg-style flatness certificate: at every boundary point and every
// scale R <= R0 the boundary fits a gamma-slab sandwich in some frame.
struct FlatnessCert {
  double gamma = 0.0;
  double R0 = 0.0;
};

// Local-graph certificate: at every boundary point and scale R <= R0 the
// boundary is a Lipschitz graph with slope <= L in some frame.
struct LipschitzCert {
  double L = 0.0;
  double R0 = 0.0;
};

enum class Side { inside, boundary, outside };

// Simple polygon, vertices CCW, first vertex not repeated.  Carries the
// declared boundary certificates (checked separately by the certify ops)
// and a bucket grid over the edges for fast point queries.
class PolygonalDomain {
public:
  static PolygonalDomain from_vertices(std::vector<Vec2> vertices);

  PolygonalDomain() = default;

  const std::vector<Vec2>& vertices() const { return v_; }
  int n() const { return static_cast<int>(v_.size()); }
  Vec2 vertex(int i) const { return v_[mod(i)]; }
  // Edge i runs vertex(i) -> vertex(i+1).
  std::pair<Vec2, Vec2> edge(int i) const { return {v_[mod(i)], v_[mod(i + 1)]}; }

  double area() const { return area_; }
  double diameter() const { return diam_; }
  double perimeter() const { return perim_; }
  Vec2 centroid() const { return centroid_; }
  Vec2 bbox_lo() const { return lo_; }
  Vec2 bbox_hi() const { return hi_; }

  Side side(Vec2 p, double tol = -1.0) const;  // tol < 0: 1e-13 * diameter
  bool contains(Vec2 p) const { return side(p) != Side::outside; }      // closure
  bool contains_strict(Vec2 p) const { return side(p) == Side::inside; }

  double distance_to_boundary(Vec2 p) const;
  // Nearest boundary point; ties broken by smallest edge index.
  struct BoundaryHit {
    Vec2 point;
    int edge = -1;
    double distance = 0.0;
  };
  BoundaryHit nearest_boundary(Vec2 p) const;

  // Edge indices whose segment meets the closed disk B_r(c).
  std::vector<int> edges_near(Vec2 c, double r) const;

  // True when [a,b] stays inside the closed polygon (no proper edge
  // crossing and an interior witness).
  bool segment_inside(Vec2 a, Vec2 b) const;

  // Exact area of polygon intersect disk B_r(c).
  double clipped_area(Vec2 c, double r) const;

  std::optional<FlatnessCert> flatness;
  std::optional<LipschitzCert> lipschitz;

  // Scale used by mesh preconditions: the certificate radius.
  double certificate_scale() const;

private:
  int mod(int i) const {
    int n = static_cast<int>(v_.size());
    return ((i % n) + n) % n;
  }
  void build();
  int cell_of(Vec2 p) const;
  void cells_overlapping(Vec2 lo, Vec2 hi, std::vector<int>& out) const;

  std::vector<Vec2> v_;
  double area_ = 0.0, diam_ = 0.0, perim_ = 0.0;
  Vec2 centroid_, lo_, hi_;

  // Edge bucket grid.
  int gx_ = 0, gy_ = 0;
  double cw_ = 0.0, ch_ = 0.0;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<signed char> cell_state_;  // 1 inside, -1 outside, 0 mixed
  mutable std::vector<int> stamp_;
  mutable int stamp_val_ = 0;
};

PolygonalDomain regular_ngon(int n, double radius, Vec2 center = {0, 0});
PolygonalDomain unit_square();
PolygonalDomain rectangle(Vec2 lo, Vec2 hi);
PolygonalDomain polygonized_ellipse(int n, double a, double b, Vec2 center = {0, 0});

}  // namespace greenlab
