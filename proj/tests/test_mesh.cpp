#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "greenlab/errors.hpp"
#include "greenlab/mesh.hpp"
#include "greenlab/polygon.hpp"

using namespace greenlab;

TEST_CASE("square mesh covers exactly and meets quality") {
  auto dom = unit_square();
  MeshOptions opt;
  opt.h = 0.1;
  Mesh m = Mesh::build(dom, opt);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.min_angle_deg() >= 20.0);
  CHECK(m.h_max() < 0.13);
  CHECK(m.num_triangles() > 100);
  CHECK_NOTHROW(m.validate_against(dom));
}

TEST_CASE("polygon mesh covers the polygon") {
  auto dom = regular_ngon(512, 1.0, {0, 0});
  MeshOptions opt;
  opt.h = 0.08;
  Mesh m = Mesh::build(dom, opt);
  CHECK(m.total_area() == doctest::Approx(dom.area()).epsilon(1e-12));
  CHECK(m.min_angle_deg() >= 20.0);
  for (int t = 0; t < m.num_triangles(); ++t) CHECK(m.tri_area(t) > 0.0);
}

TEST_CASE("adjacency is consistent") {
  auto dom = regular_ngon(64, 1.0, {0, 0});
  MeshOptions opt;
  opt.h = 0.2;
  Mesh m = Mesh::build(dom, opt);
  int boundary_edges = 0;
  for (int e = 0; e < m.num_edges(); ++e) {
    const MeshEdge& ed = m.edge(e);
    if (ed.boundary) {
      ++boundary_edges;
      CHECK(ed.t1 < 0);
      CHECK(m.vertex_on_boundary(ed.a));
      CHECK(m.vertex_on_boundary(ed.b));
    } else {
      CHECK(ed.t1 >= 0);
    }
  }
  // Euler: V - E + T = 1 for a disk-like triangulation
  CHECK(m.num_vertices() - m.num_edges() + m.num_triangles() == 1);
  CHECK(boundary_edges >= 64);
  // neighbors agree through shared edges
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) {
      int nb = m.tri(t).nb[k];
      if (nb < 0) continue;
      bool back = false;
      for (int j = 0; j < 3; ++j) back |= m.tri(nb).nb[j] == t;
      CHECK(back);
    }
}

TEST_CASE("point location") {
  auto dom = regular_ngon(128, 1.0, {0.5, 0.5});
  MeshOptions opt;
  opt.h = 0.1;
  Mesh m = Mesh::build(dom, opt);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  int found = 0, tried = 0;
  for (int i = 0; i < 2000; ++i) {
    Vec2 p{0.5 + u(rng), 0.5 + u(rng)};
    if (dom.side(p) != Side::inside) continue;
    ++tried;
    int t = m.locate(p);
    if (t < 0) continue;
    ++found;
    // verify barycentric membership
    Vec2 a = m.vertex(m.tri(t).v[0]), b = m.vertex(m.tri(t).v[1]),
         c = m.vertex(m.tri(t).v[2]);
    double d = cross(b - a, c - a);
    double w0 = cross(b - p, c - p) / d;
    double w1 = cross(c - p, a - p) / d;
    double w2 = cross(a - p, b - p) / d;
    CHECK(std::min({w0, w1, w2}) > -1e-9);
  }
  CHECK(tried > 500);
  CHECK(found == tried);
  CHECK(m.locate({2.0, 2.0}) == -1);
}

TEST_CASE("graded mesh refines toward the pole") {
  auto dom = regular_ngon(512, 1.0, {0, 0});
  MeshOptions opt;
  opt.h = 0.08;
  opt.grade = true;
  opt.pole = {0.3, 0.2};
  opt.grade_ratio = 8.0;
  opt.grade_radius = 0.5;
  Mesh m = Mesh::build(dom, opt);
  CHECK(m.total_area() == doctest::Approx(dom.area()).epsilon(1e-12));
  CHECK(m.min_angle_deg() >= 20.0);
  // triangle containing the pole is much smaller than far triangles
  int tp = m.locate(opt.pole);
  REQUIRE(tp >= 0);
  int tf = m.locate({-0.7, -0.55});
  REQUIRE(tf >= 0);
  CHECK(m.tri_area(tp) * 10.0 < m.tri_area(tf));
  // ratio stays bounded: no collapse below h/ratio scale
  CHECK(m.h_min() > 0.08 / 8.0 / 4.0);
}

TEST_CASE("triangle quadrature sums polynomials exactly") {
  auto dom = unit_square();
  MeshOptions opt;
  opt.h = 0.15;
  Mesh m = Mesh::build(dom, opt);
  const TriRule& rule = tri_rule(2);
  double ix2 = 0, iarea = 0;
  WeightedPoints wp;
  for (int t = 0; t < m.num_triangles(); ++t) {
    wp.x.clear();
    wp.w.clear();
    wp.area = 0;
    m.tri_quadrature(t, rule, wp);
    for (size_t q = 0; q < wp.w.size(); ++q) {
      iarea += wp.w[q];
      ix2 += wp.w[q] * wp.x[q].x * wp.x[q].x;
    }
  }
  CHECK(iarea == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ix2 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("mesh construction is deterministic") {
  auto dom = regular_ngon(256, 1.0, {0, 0});
  MeshOptions opt;
  opt.h = 0.1;
  Mesh m1 = Mesh::build(dom, opt);
  Mesh m2 = Mesh::build(dom, opt);
  REQUIRE(m1.num_vertices() == m2.num_vertices());
  REQUIRE(m1.num_triangles() == m2.num_triangles());
  for (int i = 0; i < m1.num_vertices(); ++i) {
    CHECK(m1.vertex(i).x == m2.vertex(i).x);
    CHECK(m1.vertex(i).y == m2.vertex(i).y);
  }
}

TEST_CASE("invalid options are rejected") {
  auto dom = unit_square();
  MeshOptions opt;
  opt.h = -1.0;
  CHECK_THROWS_AS(Mesh::build(dom, opt), InvalidParameter);
  MeshOptions tiny;
  tiny.h = 1e-4;
  tiny.max_vertices = 500;  // budget far too small for this h
  CHECK_THROWS_AS(Mesh::build(dom, tiny), MeshFailure);
}

TEST_CASE("mesh width must resolve a declared flatness scale") {
  auto dom = unit_square();
  dom.flatness = FlatnessCert{1.0 / 96.0, 0.2};
  MeshOptions coarse;
  coarse.h = 0.1;  // not below R0/4 = 0.05
  CHECK_THROWS_AS(Mesh::build(dom, coarse), OutOfScale);
  MeshOptions fine;
  fine.h = 0.04;
  Mesh m = Mesh::build(dom, fine);
  CHECK(m.num_triangles() > 0);
}
