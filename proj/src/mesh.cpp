#include "greenlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <unordered_map>

#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

// Signed doubled area of (a, b, c) in extended precision.  |result| at or
// below the guard is treated as degenerate by callers.
long double orient2d(Vec2 a, Vec2 b, Vec2 c) {
  long double ax = a.x, ay = a.y, bx = b.x, by = b.y, cx = c.x, cy = c.y;
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

long double orient_guard(Vec2 a, Vec2 b, Vec2 c) {
  long double s = std::max({std::fabs(b.x - a.x), std::fabs(b.y - a.y),
                            std::fabs(c.x - a.x), std::fabs(c.y - a.y)});
  return 1e-17L * s * s;
}

// Positive when p is strictly inside the circumcircle of CCW (a, b, c).
// Ties (cocircular up to the guard) count as outside so degenerate point
// sets triangulate without flips.
bool in_circle(Vec2 a, Vec2 b, Vec2 c, Vec2 p) {
  long double adx = (long double)a.x - p.x, ady = (long double)a.y - p.y;
  long double bdx = (long double)b.x - p.x, bdy = (long double)b.y - p.y;
  long double cdx = (long double)c.x - p.x, cdy = (long double)c.y - p.y;
  long double ad = adx * adx + ady * ady;
  long double bd = bdx * bdx + bdy * bdy;
  long double cd = cdx * cdx + cdy * cdy;
  long double det = adx * (bdy * cd - cdy * bd) - ady * (bdx * cd - cdx * bd) +
                    ad * (bdx * cdy - cdx * bdy);
  long double s = std::max({std::fabs(adx), std::fabs(ady), std::fabs(bdx),
                            std::fabs(bdy), std::fabs(cdx), std::fabs(cdy)});
  long double guard = 1e-16L * s * s * s * s;
  return det > guard;
}

struct BTri {
  int v[3];
  int nb[3];  // neighbor opposite v[k], -1 = none
  std::uint32_t stamp = 0;
  bool alive = false;
};

// Incremental Delaunay triangulation with a super-triangle.
class Delaunay {
public:
  std::vector<Vec2> pts;
  std::vector<BTri> tris;
  int hint = 0;

  void init_super(Vec2 lo, Vec2 hi) {
    Vec2 c = (lo + hi) * 0.5;
    double r = std::max(hi.x - lo.x, hi.y - lo.y) * 4.0 + 1.0;
    pts = {Vec2{c.x - 2.2 * r, c.y - r}, Vec2{c.x + 2.2 * r, c.y - r},
           Vec2{c.x, c.y + 2.2 * r}};
    dedup_tol = 1e-13 * r;
    BTri t;
    t.v[0] = 0;
    t.v[1] = 1;
    t.v[2] = 2;
    t.nb[0] = t.nb[1] = t.nb[2] = -1;
    t.alive = true;
    tris.push_back(t);
    hint = 0;
  }

  int locate(Vec2 p) const {
    int t = hint;
    if (t < 0 || t >= (int)tris.size() || !tris[t].alive) t = first_alive();
    int steps = 0, cap = (int)tris.size() + 16;
    while (steps++ < cap) {
      const BTri& tr = tris[t];
      int next = -1;
      for (int k = 0; k < 3; ++k) {
        Vec2 a = pts[tr.v[(k + 1) % 3]], b = pts[tr.v[(k + 2) % 3]];
        if (orient2d(a, b, p) < -orient_guard(a, b, p)) {
          next = tr.nb[k];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    // walk cycled on a degeneracy: brute-force scan
    for (int i = 0; i < (int)tris.size(); ++i) {
      if (!tris[i].alive) continue;
      bool ok = true;
      for (int k = 0; k < 3 && ok; ++k) {
        Vec2 a = pts[tris[i].v[(k + 1) % 3]], b = pts[tris[i].v[(k + 2) % 3]];
        if (orient2d(a, b, p) < -orient_guard(a, b, p)) ok = false;
      }
      if (ok) return i;
    }
    throw MeshFailure("point location failed");
  }

  double dedup_tol = 0.0;

  // Inserts p, returns indices of the new triangles.  A point coinciding
  // with an existing vertex of its containing triangle is skipped.
  std::vector<int> insert(Vec2 p) {
    int seed = locate(p);
    for (int k = 0; k < 3; ++k)
      if (dist(pts[tris[seed].v[k]], p) <= dedup_tol) return {};
    // cavity = connected triangles whose circumcircle strictly contains p
    std::vector<int> cavity;
    std::vector<int> stack{seed};
    ++visit_stamp_;
    visit_.resize(tris.size(), 0);
    visit_[seed] = visit_stamp_;
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      const BTri& tr = tris[t];
      bool in = t == seed || in_circle(pts[tr.v[0]], pts[tr.v[1]], pts[tr.v[2]], p);
      if (!in) continue;
      cavity.push_back(t);
      for (int k = 0; k < 3; ++k) {
        int nb = tr.nb[k];
        if (nb >= 0 && visit_[nb] != visit_stamp_) {
          visit_[nb] = visit_stamp_;
          stack.push_back(nb);
        }
      }
    }
    std::sort(cavity.begin(), cavity.end());
    in_cavity_.resize(tris.size(), 0);
    ++cav_stamp_;
    for (int t : cavity) in_cavity_[t] = cav_stamp_;

    // grow the cavity until every boundary edge sees p strictly on its left
    for (bool grew = true; grew;) {
      grew = false;
      for (size_t ci = 0; ci < cavity.size() && !grew; ++ci) {
        const BTri& tr = tris[cavity[ci]];
        for (int k = 0; k < 3; ++k) {
          int nb = tr.nb[k];
          if (nb >= 0 && in_cavity_[nb] == cav_stamp_) continue;
          Vec2 a = pts[tr.v[(k + 1) % 3]], b = pts[tr.v[(k + 2) % 3]];
          if (orient2d(a, b, p) <= orient_guard(a, b, p)) {
            if (nb < 0) throw MeshFailure("insertion outside hull");
            in_cavity_.resize(tris.size(), 0);
            in_cavity_[nb] = cav_stamp_;
            cavity.push_back(nb);
            grew = true;
            break;
          }
        }
      }
    }

    int pid = (int)pts.size();
    pts.push_back(p);

    struct BEdge {
      int a, b, outside;
    };
    std::vector<BEdge> ring;
    for (int t : cavity) {
      const BTri& tr = tris[t];
      for (int k = 0; k < 3; ++k) {
        int nb = tr.nb[k];
        if (nb >= 0 && in_cavity_[nb] == cav_stamp_) continue;
        ring.push_back({tr.v[(k + 1) % 3], tr.v[(k + 2) % 3], nb});
      }
    }
    std::unordered_map<int, int> start_of;  // ring vertex a -> new tri
    std::vector<int> fresh;
    size_t reuse = 0;
    for (const BEdge& e : ring) {
      int t;
      if (reuse < cavity.size()) {
        t = cavity[reuse++];
      } else {
        t = (int)tris.size();
        tris.push_back(BTri{});
      }
      BTri& nt = tris[t];
      nt.v[0] = e.a;
      nt.v[1] = e.b;
      nt.v[2] = pid;
      nt.nb[2] = e.outside;
      nt.nb[0] = nt.nb[1] = -1;
      nt.alive = true;
      ++nt.stamp;
      if (e.outside >= 0) {
        // the shared edge (a, b) sits opposite the outside apex
        BTri& ot = tris[e.outside];
        for (int k = 0; k < 3; ++k)
          if (ot.v[k] != e.a && ot.v[k] != e.b) {
            ot.nb[k] = t;
            break;
          }
      }
      start_of[e.a] = t;
      fresh.push_back(t);
    }
    // retire unused cavity slots
    for (size_t i = reuse; i < cavity.size(); ++i) {
      tris[cavity[i]].alive = false;
      ++tris[cavity[i]].stamp;
    }
    // stitch new triangles around p
    for (int t : fresh) {
      BTri& nt = tris[t];
      auto it = start_of.find(nt.v[1]);
      if (it == start_of.end()) throw MeshFailure("cavity ring not closed");
      nt.nb[0] = it->second;              // across edge (v1, p)
      tris[it->second].nb[1] = t;         // that tri's edge (p, v0=v1_here)
    }
    visit_.resize(tris.size(), 0);
    in_cavity_.resize(tris.size(), 0);
    hint = fresh.empty() ? hint : fresh.back();
    return fresh;
  }

private:
  int first_alive() const {
    for (int i = 0; i < (int)tris.size(); ++i)
      if (tris[i].alive) return i;
    throw MeshFailure("empty triangulation");
  }
  mutable std::vector<std::uint32_t> visit_, in_cavity_;
  std::uint32_t visit_stamp_ = 0, cav_stamp_ = 0;
};

double circumradius(Vec2 a, Vec2 b, Vec2 c, Vec2* center) {
  double d = 2.0 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  if (std::fabs(d) < 1e-300) return std::numeric_limits<double>::infinity();
  double b2 = norm2(b - a), c2 = norm2(c - a);
  double ux = ((c.y - a.y) * b2 - (b.y - a.y) * c2) / d;
  double uy = ((b.x - a.x) * c2 - (c.x - a.x) * b2) / d;
  if (center) *center = Vec2{a.x + ux, a.y + uy};
  return std::sqrt(ux * ux + uy * uy);
}

}  // namespace

// Builder wrapper with friend access to Mesh internals.
class Mesher {
public:
  static Mesh run(const PolygonalDomain& dom, const MeshOptions& opt);
};

namespace {

struct SizeField {
  double h;
  bool grade;
  Vec2 pole;
  double ratio;
  double radius;
  double operator()(Vec2 x) const {
    if (!grade) return h;
    double f = std::clamp(dist(x, pole) / radius, 1.0 / ratio, 1.0);
    return h * f;
  }
};

// Subsegment bookkeeping: each polygon edge carries a sorted list of split
// parameters with their vertex ids.
struct EdgeSubs {
  std::vector<double> t;
  std::vector<int> vid;
};

}  // namespace

Mesh Mesher::run(const PolygonalDomain& dom, const MeshOptions& opt) {
  if (!(opt.h > 0.0)) throw InvalidParameter("mesh: h must be positive");
  if (dom.flatness && !(opt.h < dom.flatness->R0 / 4.0))
    throw OutOfScale(
        "mesh: h must stay below a quarter of the declared flatness scale");
  double min_angle = std::clamp(opt.min_angle_deg, 1.0, 20.7);
  double B = 1.0 / (2.0 * std::sin(min_angle * M_PI / 180.0));
  SizeField size{opt.h, opt.grade, opt.pole,
                 std::clamp(opt.grade_ratio, 1.0, 10.0),
                 opt.grade_radius > 0.0 ? opt.grade_radius : dom.diameter() / 4.0};

  const int n = dom.n();
  Delaunay dt;
  Vec2 blo = dom.bbox_lo(), bhi = dom.bbox_hi();
  dt.init_super(blo, bhi);

  // boundary vertices: polygon corners first, then recursive midpoint
  // splits of each edge down to the local target length
  std::vector<EdgeSubs> subs(n);
  std::vector<int> corner_vid(n);
  for (int i = 0; i < n; ++i) corner_vid[i] = (int)dt.pts.size() + i;
  auto edge_pos = [&](int e, double t) {
    auto [a, b] = dom.edge(e);
    return a + (b - a) * t;
  };
  double max_sub_len = 0.0;
  {
    std::vector<std::vector<double>> params(n);
    for (int e = 0; e < n; ++e) {
      params[e] = {0.0, 1.0};
      std::deque<std::pair<double, double>> work{{0.0, 1.0}};
      auto [a, b] = dom.edge(e);
      double len = dist(a, b);
      while (!work.empty()) {
        auto [ta, tb] = work.front();
        work.pop_front();
        double mid = 0.5 * (ta + tb);
        if (len * (tb - ta) > size(edge_pos(e, mid))) {
          params[e].push_back(mid);
          work.push_back({ta, mid});
          work.push_back({mid, tb});
        }
      }
      std::sort(params[e].begin(), params[e].end());
      for (size_t k = 0; k + 1 < params[e].size(); ++k)
        max_sub_len = std::max(max_sub_len, len * (params[e][k + 1] - params[e][k]));
    }
    // corner vertices shared between adjacent edges get one id
    for (int i = 0; i < n; ++i) dt.insert(dom.vertex(i));
    for (int e = 0; e < n; ++e) {
      subs[e].t.push_back(0.0);
      subs[e].vid.push_back(corner_vid[e]);
      for (double t : params[e]) {
        if (t <= 0.0 || t >= 1.0) continue;
        int vid = (int)dt.pts.size();
        dt.insert(edge_pos(e, t));
        subs[e].t.push_back(t);
        subs[e].vid.push_back(vid);
      }
      subs[e].t.push_back(1.0);
      subs[e].vid.push_back(corner_vid[(e + 1) % n]);
      // params were appended in split order; restore sorted order
      std::vector<size_t> idx(subs[e].t.size());
      for (size_t k = 0; k < idx.size(); ++k) idx[k] = k;
      std::sort(idx.begin(), idx.end(),
                [&](size_t x, size_t y) { return subs[e].t[x] < subs[e].t[y]; });
      EdgeSubs sorted;
      for (size_t k : idx) {
        sorted.t.push_back(subs[e].t[k]);
        sorted.vid.push_back(subs[e].vid[k]);
      }
      subs[e] = std::move(sorted);
    }
  }

  auto sub_encroached_by = [&](int e, size_t k, Vec2 p, int pid) -> bool {
    Vec2 a = dt.pts[subs[e].vid[k]], b = dt.pts[subs[e].vid[k + 1]];
    if (pid == subs[e].vid[k] || pid == subs[e].vid[k + 1]) return false;
    Vec2 mid = (a + b) * 0.5;
    double half = 0.5 * dist(a, b);
    return dist(p, mid) < half * (1.0 - 1e-12);
  };

  std::deque<std::array<double, 3>> seg_q;  // {edge, ta, tb}
  auto queue_seg = [&](int e, double ta, double tb) {
    seg_q.push_back({(double)e, ta, tb});
  };
  std::deque<std::pair<int, std::uint32_t>> tri_q;
  auto queue_tri = [&](int t) {
    if (t >= 0 && dt.tris[t].alive) tri_q.push_back({t, dt.tris[t].stamp});
  };

  auto tri_is_real = [&](const BTri& tr) {
    return tr.v[0] >= 3 && tr.v[1] >= 3 && tr.v[2] >= 3;
  };
  auto tri_inside = [&](const BTri& tr) {
    Vec2 c = (dt.pts[tr.v[0]] + dt.pts[tr.v[1]] + dt.pts[tr.v[2]]) / 3.0;
    return dom.side(c) == Side::inside;
  };

  // encroachment scan around a point; radius bound = longest current
  // subsegment half-length (splits only shrink it)
  auto find_encroached = [&](Vec2 p, int pid, bool queue_all) -> bool {
    bool found = false;
    for (int e : dom.edges_near(p, 0.5 * max_sub_len * 1.0001)) {
      for (size_t k = 0; k + 1 < subs[e].t.size(); ++k) {
        if (sub_encroached_by(e, k, p, pid)) {
          queue_seg(e, subs[e].t[k], subs[e].t[k + 1]);
          found = true;
          if (!queue_all) return true;
        }
      }
    }
    return found;
  };

  // initial badness scan happens after all boundary points are in
  for (int t = 0; t < (int)dt.tris.size(); ++t)
    if (dt.tris[t].alive && tri_is_real(dt.tris[t])) queue_tri(t);
  // initial encroachment: test each subsegment against the apexes of its
  // adjacent triangles (the Delaunay property makes apexes the witnesses)
  for (int e = 0; e < n; ++e)
    for (size_t k = 0; k + 1 < subs[e].t.size(); ++k) {
      int va = subs[e].vid[k], vb = subs[e].vid[k + 1];
      for (int t = 0; t < (int)dt.tris.size(); ++t) {
        const BTri& tr = dt.tris[t];
        if (!tr.alive) continue;
        int hit = 0, apex = -1;
        for (int j = 0; j < 3; ++j) {
          if (tr.v[j] == va || tr.v[j] == vb)
            ++hit;
          else
            apex = tr.v[j];
        }
        if (hit == 2 && apex >= 3 &&
            sub_encroached_by(e, k, dt.pts[apex], apex))
          queue_seg(e, subs[e].t[k], subs[e].t[k + 1]);
      }
    }

  auto split_sub = [&](int e, double ta, double tb) {
    // stale check: the pair must still be adjacent in the split list
    auto& S = subs[e];
    auto it = std::lower_bound(S.t.begin(), S.t.end(), ta - 1e-15);
    size_t k = (size_t)(it - S.t.begin());
    if (k + 1 >= S.t.size() || std::fabs(S.t[k] - ta) > 1e-14 ||
        std::fabs(S.t[k + 1] - tb) > 1e-14)
      return;
    double tm = 0.5 * (ta + tb);
    Vec2 p = edge_pos(e, tm);
    int pid = (int)dt.pts.size();
    auto fresh = dt.insert(p);
    if (fresh.empty()) return;  // midpoint coincided with an existing vertex
    S.t.insert(S.t.begin() + k + 1, tm);
    S.vid.insert(S.vid.begin() + k + 1, pid);
    for (int t : fresh)
      if (dt.tris[t].alive && tri_is_real(dt.tris[t])) queue_tri(t);
    // the halves may be encroached by existing nearby vertices
    for (int t : fresh) {
      for (int j = 0; j < 3; ++j) {
        int v = dt.tris[t].v[j];
        if (v < 3 || v == pid) continue;
        for (size_t kk : {k, k + 1})
          if (kk + 1 < S.t.size() && sub_encroached_by(e, kk, dt.pts[v], v))
            queue_seg(e, S.t[kk], S.t[kk + 1]);
      }
    }
  };

  long steps = 0;
  const long step_cap = 80L * opt.max_vertices;
  while (true) {
    if (++steps > step_cap) throw MeshFailure("refinement did not terminate");
    if ((int)dt.pts.size() > opt.max_vertices + 3)
      throw MeshFailure("refinement exceeded the vertex budget");
    if (!seg_q.empty()) {
      auto [e, ta, tb] = seg_q.front();
      seg_q.pop_front();
      split_sub((int)e, ta, tb);
      continue;
    }
    if (tri_q.empty()) break;
    auto [t, stamp] = tri_q.front();
    tri_q.pop_front();
    const BTri& tr = dt.tris[t];
    if (!tr.alive || tr.stamp != stamp || !tri_is_real(tr)) continue;
    if (!tri_inside(tr)) continue;
    Vec2 a = dt.pts[tr.v[0]], b = dt.pts[tr.v[1]], c = dt.pts[tr.v[2]];
    Vec2 cc{0, 0};
    double R = circumradius(a, b, c, &cc);
    if (!std::isfinite(R)) cc = (a + b + c) / 3.0;  // collinear: split inside
    double smin = std::min({dist(a, b), dist(b, c), dist(c, a)});
    bool bad_quality = R / smin > B;
    bool bad_size = R > 0.58 * size(cc);
    if (!bad_quality && !bad_size) continue;
    if (dom.side(cc) != Side::inside) {
      // convex domain: the center escaped across the boundary; split the
      // nearest subsegment instead
      auto hit = dom.nearest_boundary(cc);
      auto& S = subs[hit.edge];
      auto [ea, eb] = dom.edge(hit.edge);
      double tt = std::clamp(dot(hit.point - ea, eb - ea) / norm2(eb - ea), 0.0, 1.0);
      size_t k = 0;
      while (k + 2 < S.t.size() && S.t[k + 1] <= tt) ++k;
      queue_seg(hit.edge, S.t[k], S.t[k + 1]);
      queue_tri(t);
      continue;
    }
    if (find_encroached(cc, -1, true)) {
      queue_tri(t);
      continue;
    }
    auto fresh = dt.insert(cc);
    for (int nt : fresh)
      if (dt.tris[nt].alive && tri_is_real(dt.tris[nt])) queue_tri(nt);
  }

  // extract: drop super-vertex triangles, keep interior ones
  Mesh mesh;
  std::vector<int> vmap(dt.pts.size(), -1);
  for (int t = 0; t < (int)dt.tris.size(); ++t) {
    const BTri& tr = dt.tris[t];
    if (!tr.alive || !tri_is_real(tr)) continue;
    if (!tri_inside(tr)) continue;
    MeshTri mt{};
    for (int k = 0; k < 3; ++k) {
      int v = tr.v[k];
      if (vmap[v] < 0) {
        vmap[v] = (int)mesh.verts_.size();
        mesh.verts_.push_back(dt.pts[v]);
      }
      mt.v[k] = vmap[v];
    }
    Vec2 a = mesh.verts_[mt.v[0]], b = mesh.verts_[mt.v[1]], c = mesh.verts_[mt.v[2]];
    if (orient2d(a, b, c) <= 0.0) std::swap(mt.v[1], mt.v[2]);
    mt.e = {-1, -1, -1};
    mt.nb = {-1, -1, -1};
    mesh.tris_.push_back(mt);
  }
  if (mesh.tris_.empty()) throw MeshFailure("no interior triangles");
  mesh.finalize(dom);
  mesh.validate_against(dom);
  return mesh;
}

Mesh Mesh::build(const PolygonalDomain& dom, const MeshOptions& opt) {
  return Mesher::run(dom, opt);
}

void Mesh::finalize(const PolygonalDomain& dom) {
  // edges + adjacency
  std::map<std::pair<int, int>, int> edge_id;
  for (int t = 0; t < (int)tris_.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int a = tris_[t].v[(k + 1) % 3], b = tris_[t].v[(k + 2) % 3];
      auto key = std::minmax(a, b);
      auto it = edge_id.find(key);
      if (it == edge_id.end()) {
        MeshEdge e;
        e.a = key.first;
        e.b = key.second;
        e.t0 = t;
        edge_id.emplace(key, (int)edges_.size());
        tris_[t].e[k] = (int)edges_.size();
        edges_.push_back(e);
      } else {
        MeshEdge& e = edges_[it->second];
        if (e.t1 >= 0) throw MeshFailure("edge shared by three triangles");
        e.t1 = t;
        tris_[t].e[k] = it->second;
      }
    }
  }
  vert_boundary_.assign(verts_.size(), 0);
  for (auto& e : edges_) {
    e.boundary = e.t1 < 0;
    if (e.boundary) {
      vert_boundary_[e.a] = 1;
      vert_boundary_[e.b] = 1;
    }
  }
  for (auto& t : tris_)
    for (int k = 0; k < 3; ++k) {
      const MeshEdge& e = edges_[t.e[k]];
      int self = (int)(&t - tris_.data());
      t.nb[k] = e.boundary ? -1 : (e.t0 == self ? e.t1 : e.t0);
    }

  h_max_ = 0.0;
  h_min_ = std::numeric_limits<double>::max();
  min_angle_deg_ = 180.0;
  total_area_ = 0.0;
  for (int t = 0; t < (int)tris_.size(); ++t) {
    Vec2 a = verts_[tris_[t].v[0]], b = verts_[tris_[t].v[1]], c = verts_[tris_[t].v[2]];
    double l0 = dist(b, c), l1 = dist(c, a), l2 = dist(a, b);
    h_max_ = std::max({h_max_, l0, l1, l2});
    h_min_ = std::min({h_min_, l0, l1, l2});
    total_area_ += tri_area(t);
    auto ang = [](double opp, double s1, double s2) {
      double v = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2), -1.0, 1.0);
      return std::acos(v) * 180.0 / M_PI;
    };
    min_angle_deg_ = std::min({min_angle_deg_, ang(l0, l1, l2), ang(l1, l2, l0),
                               ang(l2, l0, l1)});
  }

  // locator grid, about two triangles per cell
  Vec2 lo = dom.bbox_lo(), hi = dom.bbox_hi();
  double pad = 1e-9 * dom.diameter();
  glo_ = Vec2{lo.x - pad, lo.y - pad};
  ghi_ = Vec2{hi.x + pad, hi.y + pad};
  int target = std::max(1, (int)std::lround(std::sqrt(tris_.size() / 2.0)));
  gnx_ = gny_ = std::clamp(target, 1, 512);
  gcells_.assign((size_t)gnx_ * gny_, {});
  for (int t = 0; t < (int)tris_.size(); ++t) {
    Vec2 a = verts_[tris_[t].v[0]], b = verts_[tris_[t].v[1]], c = verts_[tris_[t].v[2]];
    Vec2 tl{std::min({a.x, b.x, c.x}), std::min({a.y, b.y, c.y})};
    Vec2 th{std::max({a.x, b.x, c.x}), std::max({a.y, b.y, c.y})};
    int ix0 = cell_x(tl.x), ix1 = cell_x(th.x);
    int iy0 = cell_y(tl.y), iy1 = cell_y(th.y);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix)
        gcells_[(size_t)iy * gnx_ + ix].push_back(t);
  }
}

double Mesh::tri_area(int t) const {
  Vec2 a = verts_[tris_[t].v[0]], b = verts_[tris_[t].v[1]], c = verts_[tris_[t].v[2]];
  return 0.5 * cross(b - a, c - a);
}

Vec2 Mesh::tri_centroid(int t) const {
  return (verts_[tris_[t].v[0]] + verts_[tris_[t].v[1]] + verts_[tris_[t].v[2]]) / 3.0;
}

int Mesh::locate(Vec2 p) const {
  if (p.x < glo_.x || p.x > ghi_.x || p.y < glo_.y || p.y > ghi_.y) return -1;
  const auto& cell = gcells_[(size_t)cell_y(p.y) * gnx_ + cell_x(p.x)];
  double tol = -1e-12 * norm(ghi_ - glo_);
  for (int t : cell) {
    Vec2 a = verts_[tris_[t].v[0]], b = verts_[tris_[t].v[1]], c = verts_[tris_[t].v[2]];
    double d = cross(b - a, c - a);
    double w0 = cross(b - p, c - p) / d;
    double w1 = cross(c - p, a - p) / d;
    double w2 = cross(a - p, b - p) / d;
    if (w0 >= tol && w1 >= tol && w2 >= tol) return t;
  }
  return -1;
}

std::vector<int> Mesh::tris_near(Vec2 c, double r) const {
  std::vector<int> out;
  int ix0 = cell_x(c.x - r), ix1 = cell_x(c.x + r);
  int iy0 = cell_y(c.y - r), iy1 = cell_y(c.y + r);
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix)
      for (int t : gcells_[(size_t)iy * gnx_ + ix]) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Mesh::tri_quadrature(int t, const TriRule& rule, WeightedPoints& out) const {
  Vec2 a = verts_[tris_[t].v[0]], b = verts_[tris_[t].v[1]], c = verts_[tris_[t].v[2]];
  double A = tri_area(t);
  for (size_t q = 0; q < rule.w.size(); ++q) {
    const auto& bc = rule.bary[q];
    out.x.push_back(a * bc[0] + b * bc[1] + c * bc[2]);
    out.w.push_back(rule.w[q] * A);
    out.area += rule.w[q] * A;
  }
}

void Mesh::validate_against(const PolygonalDomain& dom) const {
  double darea = dom.area();
  if (std::fabs(total_area_ - darea) > 1e-9 * darea)
    throw MeshFailure("triangulation area does not match the polygon");
  for (int t = 0; t < (int)tris_.size(); ++t)
    if (tri_area(t) <= 0.0) throw MeshFailure("non-positive triangle");
  double tol = 1e-9 * dom.diameter();
  for (const auto& e : edges_) {
    if (!e.boundary) continue;
    auto ha = dom.nearest_boundary(verts_[e.a]);
    auto hb = dom.nearest_boundary(verts_[e.b]);
    Vec2 mid = (verts_[e.a] + verts_[e.b]) * 0.5;
    auto hm = dom.nearest_boundary(mid);
    if (ha.distance > tol || hb.distance > tol || hm.distance > tol)
      throw MeshFailure("boundary edge strays off the polygon");
  }
}

}  // namespace greenlab
