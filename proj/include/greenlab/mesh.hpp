#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "greenlab/clip.hpp"
#include "greenlab/polygon.hpp"
#include "greenlab/vec2.hpp"

namespace greenlab {

struct MeshOptions {
  double h = 0.1;               // target edge length away from the pole
  double min_angle_deg = 20.0;  // quality floor, must stay below ~20.7
  bool grade = false;           // refine toward a pole point
  Vec2 pole{0.0, 0.0};
  double grade_ratio = 4.0;   // h(far)/h(near pole), clamped to [1, 10]
  double grade_radius = 0.0;  // 0 = quarter of the domain diameter
  int max_vertices = 200000;
};

struct MeshTri {
  std::array<int, 3> v;   // CCW vertex indices
  std::array<int, 3> e;   // edge k is opposite vertex k
  std::array<int, 3> nb;  // neighbor over edge k, -1 on boundary
};

struct MeshEdge {
  int a = -1, b = -1;  // a < b
  int t0 = -1, t1 = -1;
  bool boundary = false;
};

// Conforming triangulation of a polygonal domain.  Triangle union equals
// the polygon up to rounding: boundary vertices are only ever placed on
// polygon edges.
class Mesh {
public:
  static Mesh build(const PolygonalDomain& dom, const MeshOptions& opt);

  int num_vertices() const { return static_cast<int>(verts_.size()); }
  int num_triangles() const { return static_cast<int>(tris_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Vec2& vertex(int i) const { return verts_[i]; }
  const MeshTri& tri(int t) const { return tris_[t]; }
  const MeshEdge& edge(int e) const { return edges_[e]; }
  bool vertex_on_boundary(int i) const { return vert_boundary_[i] != 0; }

  double tri_area(int t) const;
  Vec2 tri_centroid(int t) const;

  double h_max() const { return h_max_; }
  double h_min() const { return h_min_; }
  double min_angle_deg() const { return min_angle_deg_; }
  double total_area() const { return total_area_; }

  // Containing triangle index, or -1 outside.  Points on shared edges
  // resolve to the lowest-index triangle met by the walk.
  int locate(Vec2 p) const;

  // Triangles whose bounding box meets the disk, sorted.
  std::vector<int> tris_near(Vec2 c, double r) const;

  // Physical quadrature points over one triangle (weights sum to area).
  void tri_quadrature(int t, const TriRule& rule, WeightedPoints& out) const;

  // Throws MeshFailure unless the triangulation covers the polygon (area
  // match, conforming adjacency, positive orientation everywhere).
  void validate_against(const PolygonalDomain& dom) const;

private:
  friend class Mesher;
  std::vector<Vec2> verts_;
  std::vector<MeshTri> tris_;
  std::vector<MeshEdge> edges_;
  std::vector<std::uint8_t> vert_boundary_;
  double h_max_ = 0.0, h_min_ = 0.0, min_angle_deg_ = 0.0, total_area_ = 0.0;

  // locator grid
  Vec2 glo_{0, 0}, ghi_{0, 0};
  int gnx_ = 0, gny_ = 0;
  std::vector<std::vector<int>> gcells_;
  int cell_x(double x) const {
    int i = (int)((x - glo_.x) / (ghi_.x - glo_.x) * gnx_);
    return i < 0 ? 0 : (i >= gnx_ ? gnx_ - 1 : i);
  }
  int cell_y(double y) const {
    int i = (int)((y - glo_.y) / (ghi_.y - glo_.y) * gny_);
    return i < 0 ? 0 : (i >= gny_ ? gny_ - 1 : i);
  }
  void finalize(const PolygonalDomain& dom);
};

}  // namespace greenlab
