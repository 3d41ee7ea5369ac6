#include "greenlab/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "greenlab/clip.hpp"
#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

// Proper intersection test for open segments (shared endpoints excluded).
int orient(Vec2 a, Vec2 b, Vec2 c) {
  double s = cross(b - a, c - a);
  if (s > 0) return 1;
  if (s < 0) return -1;
  return 0;
}

bool proper_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

}  // namespace

PolygonalDomain PolygonalDomain::from_vertices(std::vector<Vec2> vertices) {
  PolygonalDomain dom;
  int n = static_cast<int>(vertices.size());
  if (n < 3) throw InvalidDomain("polygon needs at least 3 vertices");
  for (auto& p : vertices)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InvalidDomain("non-finite vertex coordinate");

  double signed_area = 0.0;
  for (int i = 0; i < n; ++i)
    signed_area += 0.5 * cross(vertices[i], vertices[(i + 1) % n]);
  if (signed_area < 0.0) {
    std::reverse(vertices.begin(), vertices.end());
    signed_area = -signed_area;
  }

  double scale = 0.0;
  for (auto& p : vertices) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  if (signed_area <= 1e-14 * scale * scale)
    throw InvalidDomain("degenerate polygon (zero area)");

  for (int i = 0; i < n; ++i)
    if (dist(vertices[i], vertices[(i + 1) % n]) <= 1e-14 * scale)
      throw InvalidDomain("repeated vertex");

  // Simplicity: no proper crossing between non-adjacent edges.
  for (int i = 0; i < n; ++i) {
    Vec2 a = vertices[i], b = vertices[(i + 1) % n];
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (proper_cross(a, b, vertices[j], vertices[(j + 1) % n]))
        throw InvalidDomain("self-intersecting polygon");
    }
  }

  dom.v_ = std::move(vertices);
  dom.build();
  return dom;
}

void PolygonalDomain::build() {
  int n = static_cast<int>(v_.size());
  lo_ = hi_ = v_[0];
  area_ = 0.0;
  perim_ = 0.0;
  Vec2 cmom{0, 0};
  for (int i = 0; i < n; ++i) {
    Vec2 a = v_[i], b = v_[(i + 1) % n];
    lo_.x = std::min(lo_.x, a.x); lo_.y = std::min(lo_.y, a.y);
    hi_.x = std::max(hi_.x, a.x); hi_.y = std::max(hi_.y, a.y);
    double cr = cross(a, b);
    area_ += 0.5 * cr;
    cmom += (a + b) * (cr / 6.0);
    perim_ += dist(a, b);
  }
  centroid_ = cmom / area_;
  diam_ = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      diam_ = std::max(diam_, dist(v_[i], v_[j]));

  // Edge bucket grid.  Sized so cells hold only a few edges each.
  int g = std::clamp(static_cast<int>(std::ceil(std::sqrt(double(n)) * 2.0)), 16, 256);
  gx_ = gy_ = g;
  double pad = 1e-9 * diam_ + 1e-300;
  lo_ -= Vec2{pad, pad};
  hi_ += Vec2{pad, pad};
  cw_ = (hi_.x - lo_.x) / gx_;
  ch_ = (hi_.y - lo_.y) / gy_;
  cell_edges_.assign(gx_ * gy_, {});
  for (int e = 0; e < n; ++e) {
    Vec2 a = v_[e], b = v_[(e + 1) % n];
    int x0 = std::clamp(int((std::min(a.x, b.x) - lo_.x) / cw_), 0, gx_ - 1);
    int x1 = std::clamp(int((std::max(a.x, b.x) - lo_.x) / cw_), 0, gx_ - 1);
    int y0 = std::clamp(int((std::min(a.y, b.y) - lo_.y) / ch_), 0, gy_ - 1);
    int y1 = std::clamp(int((std::max(a.y, b.y) - lo_.y) / ch_), 0, gy_ - 1);
    for (int cy = y0; cy <= y1; ++cy)
      for (int cx = x0; cx <= x1; ++cx)
        cell_edges_[cy * gx_ + cx].push_back(e);
  }
  stamp_.assign(n, -1);
  stamp_val_ = 0;

  // Classify edge-free cells by flood fill; one parity test per component.
  cell_state_.assign(gx_ * gy_, 0);
  std::vector<signed char> seen(gx_ * gy_, 0);
  auto parity = [&](Vec2 p) {
    bool in = false;
    for (int i = 0; i < n; ++i) {
      Vec2 a = v_[i], b = v_[(i + 1) % n];
      if ((a.y > p.y) != (b.y > p.y)) {
        double xx = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (xx > p.x) in = !in;
      }
    }
    return in;
  };
  for (int c = 0; c < gx_ * gy_; ++c) {
    if (!cell_edges_[c].empty() || seen[c]) continue;
    std::vector<int> comp;
    std::queue<int> bfs;
    bfs.push(c);
    seen[c] = 1;
    while (!bfs.empty()) {
      int k = bfs.front();
      bfs.pop();
      comp.push_back(k);
      int cx = k % gx_, cy = k / gx_;
      const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        int nx = cx + dx[d], ny = cy + dy[d];
        if (nx < 0 || ny < 0 || nx >= gx_ || ny >= gy_) continue;
        int nk = ny * gx_ + nx;
        if (seen[nk] || !cell_edges_[nk].empty()) continue;
        seen[nk] = 1;
        bfs.push(nk);
      }
    }
    int k0 = comp[0];
    Vec2 pc{lo_.x + (k0 % gx_ + 0.5) * cw_, lo_.y + (k0 / gx_ + 0.5) * ch_};
    signed char st = parity(pc) ? 1 : -1;
    for (int k : comp) cell_state_[k] = st;
  }
}

int PolygonalDomain::cell_of(Vec2 p) const {
  int cx = std::clamp(int((p.x - lo_.x) / cw_), 0, gx_ - 1);
  int cy = std::clamp(int((p.y - lo_.y) / ch_), 0, gy_ - 1);
  return cy * gx_ + cx;
}

Side PolygonalDomain::side(Vec2 p, double tol) const {
  if (tol < 0.0) tol = 1e-13 * diam_;
  if (p.x < lo_.x - tol || p.x > hi_.x + tol || p.y < lo_.y - tol ||
      p.y > hi_.y + tol)
    return Side::outside;
  if (distance_to_boundary(p) <= tol) return Side::boundary;
  if (p.x < lo_.x || p.x > hi_.x || p.y < lo_.y || p.y > hi_.y)
    return Side::outside;

  int c = cell_of(p);
  if (cell_state_[c] == 1) return Side::inside;
  if (cell_state_[c] == -1) return Side::outside;

  // Mixed cell: parity along the +x ray using edges from this cell row.
  int cy = c / gx_;
  ++stamp_val_;
  bool in = false;
  for (int cx = c % gx_; cx < gx_; ++cx) {
    for (int e : cell_edges_[cy * gx_ + cx]) {
      if (stamp_[e] == stamp_val_) continue;
      stamp_[e] = stamp_val_;
      Vec2 a = v_[e], b = v_[(e + 1) % static_cast<int>(v_.size())];
      if ((a.y > p.y) != (b.y > p.y)) {
        double xx = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (xx > p.x) in = !in;
      }
    }
  }
  return in ? Side::inside : Side::outside;
}

double PolygonalDomain::distance_to_boundary(Vec2 p) const {
  return nearest_boundary(p).distance;
}

PolygonalDomain::BoundaryHit PolygonalDomain::nearest_boundary(Vec2 p) const {
  int n = static_cast<int>(v_.size());
  BoundaryHit best;
  best.distance = std::numeric_limits<double>::infinity();
  double slack = 1e-14 * diam_;
  auto consider = [&](int e) {
    double d = dist_point_segment(p, v_[e], v_[(e + 1) % n]);
    // Strict improvement beyond the slack keeps the smallest edge index
    // among near-equal candidates, provided candidates come in index order.
    if (d < best.distance - slack) {
      best.distance = d;
      best.edge = e;
    }
  };

  int pcx = std::clamp(int((p.x - lo_.x) / cw_), 0, gx_ - 1);
  int pcy = std::clamp(int((p.y - lo_.y) / ch_), 0, gy_ - 1);
  double cmin = std::min(cw_, ch_);
  std::vector<int> cand;
  int max_ring = std::max(gx_, gy_);
  for (int ring = 0; ring <= max_ring; ++ring) {
    if (best.distance < (ring - 1) * cmin) break;
    cand.clear();
    for (int cy = pcy - ring; cy <= pcy + ring; ++cy) {
      if (cy < 0 || cy >= gy_) continue;
      for (int cx = pcx - ring; cx <= pcx + ring; ++cx) {
        if (cx < 0 || cx >= gx_) continue;
        if (std::max(std::abs(cx - pcx), std::abs(cy - pcy)) != ring) continue;
        for (int e : cell_edges_[cy * gx_ + cx]) cand.push_back(e);
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (int e : cand) consider(e);
  }
  if (!std::isfinite(best.distance)) {
    for (int e = 0; e < n; ++e) consider(e);
  }
  best.point = closest_point_segment(p, v_[best.edge], v_[(best.edge + 1) % n]);
  return best;
}

std::vector<int> PolygonalDomain::edges_near(Vec2 c, double r) const {
  int n = static_cast<int>(v_.size());
  int x0 = std::clamp(int((c.x - r - lo_.x) / cw_), 0, gx_ - 1);
  int x1 = std::clamp(int((c.x + r - lo_.x) / cw_), 0, gx_ - 1);
  int y0 = std::clamp(int((c.y - r - lo_.y) / ch_), 0, gy_ - 1);
  int y1 = std::clamp(int((c.y + r - lo_.y) / ch_), 0, gy_ - 1);
  std::vector<int> out;
  ++stamp_val_;
  for (int cy = y0; cy <= y1; ++cy)
    for (int cx = x0; cx <= x1; ++cx)
      for (int e : cell_edges_[cy * gx_ + cx]) {
        if (stamp_[e] == stamp_val_) continue;
        stamp_[e] = stamp_val_;
        if (dist_point_segment(c, v_[e], v_[(e + 1) % n]) <= r) out.push_back(e);
      }
  std::sort(out.begin(), out.end());
  return out;
}

bool PolygonalDomain::segment_inside(Vec2 a, Vec2 b) const {
  if (side(a) == Side::outside || side(b) == Side::outside) return false;
  int n = static_cast<int>(v_.size());
  Vec2 mid = (a + b) * 0.5;
  double r = 0.5 * dist(a, b) + 1e-12 * diam_;
  for (int e : edges_near(mid, r)) {
    if (proper_cross(a, b, v_[e], v_[(e + 1) % n])) return false;
  }
  // Midpoint witness guards the both-endpoints-on-boundary case.
  return side(mid) != Side::outside;
}

double PolygonalDomain::clipped_area(Vec2 c, double r) const {
  if (r <= 0.0) throw InvalidParameter("clipped_area needs r > 0");
  return polygon_disk_area(v_, c, r);
}

double PolygonalDomain::certificate_scale() const {
  if (lipschitz) return lipschitz->R0;
  if (flatness) return flatness->R0;
  return 0.0;
}

PolygonalDomain regular_ngon(int n, double radius, Vec2 center) {
  if (n < 3 || radius <= 0.0) throw InvalidParameter("regular_ngon: bad n or radius");
  std::vector<Vec2> v(n);
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * 3.14159265358979323846 * k / n;
    v[k] = center + radius * dir(t);
  }
  return PolygonalDomain::from_vertices(std::move(v));
}

PolygonalDomain unit_square() { return rectangle({0, 0}, {1, 1}); }

PolygonalDomain rectangle(Vec2 lo, Vec2 hi) {
  if (!(hi.x > lo.x) || !(hi.y > lo.y)) throw InvalidParameter("rectangle: empty");
  return PolygonalDomain::from_vertices(
      {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}});
}

PolygonalDomain polygonized_ellipse(int n, double a, double b, Vec2 center) {
  if (n < 3 || a <= 0.0 || b <= 0.0)
    throw InvalidParameter("polygonized_ellipse: bad parameters");
  std::vector<Vec2> v(n);
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * 3.14159265358979323846 * k / n;
    v[k] = center + Vec2{a * std::cos(t), b * std::sin(t)};
  }
  return PolygonalDomain::from_vertices(std::move(v));
}

}  // namespace greenlab
