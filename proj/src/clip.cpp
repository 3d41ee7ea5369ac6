#include "greenlab/clip.hpp"

#include <algorithm>
#include <cmath>

#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Signed angle from u to v, in (-pi, pi].
double signed_angle(Vec2 u, Vec2 v) { return std::atan2(cross(u, v), dot(u, v)); }

// Intersection parameters of segment a + t (b - a), t in [0,1], with the
// circle |x| = r.  Returns the sub-interval of [0,1] lying inside.
struct InsideInterval {
  bool any = false;
  double t0 = 0.0, t1 = 0.0;
};

InsideInterval inside_interval(Vec2 a, Vec2 b, double r) {
  Vec2 d = b - a;
  double A = norm2(d);
  InsideInterval iv;
  if (A == 0.0) {
    if (norm(a) <= r) { iv.any = true; iv.t0 = 0.0; iv.t1 = 1.0; }
    return iv;
  }
  double B = 2.0 * dot(a, d);
  double C = norm2(a) - r * r;
  double disc = B * B - 4.0 * A * C;
  if (disc <= 0.0) {
    // No transversal crossing; classify by midpoint.
    if (norm(a + d * 0.5) <= r) { iv.any = true; iv.t0 = 0.0; iv.t1 = 1.0; }
    return iv;
  }
  double sq = std::sqrt(disc);
  double lo = (-B - sq) / (2.0 * A);
  double hi = (-B + sq) / (2.0 * A);
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (lo < hi) { iv.any = true; iv.t0 = lo; iv.t1 = hi; }
  return iv;
}

}  // namespace

double polygon_disk_area(const std::vector<Vec2>& poly, Vec2 c, double r) {
  if (r <= 0.0) return 0.0;
  double tri = 0.0;    // center-triangle contributions (inside pieces)
  double sweep = 0.0;  // total angular sweep of outside pieces
  int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    Vec2 a = poly[i] - c;
    Vec2 b = poly[(i + 1) % n] - c;
    InsideInterval iv = inside_interval(a, b, r);
    Vec2 d = b - a;
    if (!iv.any) {
      sweep += signed_angle(a, b);
      continue;
    }
    Vec2 u = a + d * iv.t0;
    Vec2 v = a + d * iv.t1;
    if (iv.t0 > 0.0) sweep += signed_angle(a, u);
    tri += 0.5 * cross(u, v);
    if (iv.t1 < 1.0) sweep += signed_angle(v, b);
  }
  return tri + 0.5 * r * r * sweep;
}

std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, Vec2 nrm, double off) {
  std::vector<Vec2> out;
  int n = static_cast<int>(poly.size());
  if (n == 0) return out;
  out.reserve(n + 4);
  for (int i = 0; i < n; ++i) {
    Vec2 a = poly[i];
    Vec2 b = poly[(i + 1) % n];
    double da = dot(a, nrm) - off;
    double db = dot(b, nrm) - off;
    if (da >= 0.0) out.push_back(a);
    if ((da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0)) {
      double t = da / (da - db);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

double segment_area(double r, double d) {
  if (d >= r) return 0.0;
  if (d <= -r) return kPi * r * r;
  return r * r * std::acos(d / r) - d * std::sqrt(r * r - d * d);
}

void WeightedPoints::append(const WeightedPoints& o) {
  x.insert(x.end(), o.x.begin(), o.x.end());
  w.insert(w.end(), o.w.begin(), o.w.end());
  area += o.area;
}

const TriRule& tri_rule(int degree) {
  static const TriRule deg2 = [] {
    TriRule r;
    const double a = 2.0 / 3.0, b = 1.0 / 6.0;
    r.bary = {{a, b, b}, {b, a, b}, {b, b, a}};
    r.w = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return r;
  }();
  static const TriRule deg4 = [] {
    TriRule r;
    const double a1 = 0.108103018168070, b1 = 0.445948490915965;
    const double a2 = 0.816847572980459, b2 = 0.091576213509771;
    const double w1 = 0.223381589678011, w2 = 0.109951743655322;
    r.bary = {{a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
              {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
    r.w = {w1, w1, w1, w2, w2, w2};
    return r;
  }();
  static const TriRule deg6 = [] {
    TriRule r;
    const double a1 = 0.501426509658179, b1 = 0.249286745170910;
    const double a2 = 0.873821971016996, b2 = 0.063089014491502;
    const double a3 = 0.053145049844816, b3 = 0.310352451033785,
                 c3 = 0.636502499121399;
    const double w1 = 0.116786275726379, w2 = 0.050844906370207,
                 w3 = 0.082851075618374;
    r.bary = {{a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
              {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2},
              {a3, b3, c3}, {a3, c3, b3}, {b3, a3, c3},
              {b3, c3, a3}, {c3, a3, b3}, {c3, b3, a3}};
    r.w = {w1, w1, w1, w2, w2, w2, w3, w3, w3, w3, w3, w3};
    return r;
  }();
  if (degree <= 2) return deg2;
  if (degree <= 4) return deg4;
  return deg6;
}

const GaussRule& gauss_rule(int npts) {
  static const GaussRule g4 = [] {
    GaussRule g;
    g.x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
           0.8611363115940526};
    g.w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
           0.3478548451374538};
    return g;
  }();
  static const GaussRule g8 = [] {
    GaussRule g;
    g.x = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
           -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
           0.7966664774136267, 0.9602898564975363};
    g.w = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
           0.2223810344533745, 0.1012285362903763};
    return g;
  }();
  return npts <= 4 ? g4 : g8;
}

WeightedPoints triangle_quadrature(Vec2 a, Vec2 b, Vec2 c, int degree) {
  const TriRule& rule = tri_rule(degree);
  WeightedPoints out;
  double A = 0.5 * std::abs(cross(b - a, c - a));
  out.area = A;
  size_t m = rule.w.size();
  out.x.reserve(m);
  out.w.reserve(m);
  for (size_t q = 0; q < m; ++q) {
    auto& L = rule.bary[q];
    out.x.push_back(a * L[0] + b * L[1] + c * L[2]);
    out.w.push_back(rule.w[q] * A);
  }
  return out;
}

namespace {

// Quadrature for the bulge between a chord and its arc, angles [al, be]
// around the origin, radius r, sweep <= pi/2 assumed.  Points produced in
// origin-centered coordinates; weights rescaled to the closed-form area.
void bulge_quadrature(double al, double be, double r, WeightedPoints& out) {
  double delta = be - al;
  if (delta <= 1e-14) return;
  double exact = 0.5 * r * r * (delta - std::sin(delta));
  if (exact <= 0.0) return;
  double thm = 0.5 * (al + be);
  double d = r * std::cos(0.5 * delta);  // chord distance from center
  const GaussRule& gt = gauss_rule(8);
  const GaussRule& gr = gauss_rule(4);
  size_t base = out.w.size();
  double wsum = 0.0;
  for (size_t i = 0; i < gt.x.size(); ++i) {
    double th = thm + 0.5 * delta * gt.x[i];
    double rc = d / std::cos(th - thm);
    for (size_t j = 0; j < gr.x.size(); ++j) {
      double rho = 0.5 * (rc + r) + 0.5 * (r - rc) * gr.x[j];
      double w = gt.w[i] * 0.5 * delta * gr.w[j] * 0.5 * (r - rc) * rho;
      out.x.push_back({rho * std::cos(th), rho * std::sin(th)});
      out.w.push_back(w);
      wsum += w;
    }
  }
  double scale = exact / wsum;
  for (size_t k = base; k < out.w.size(); ++k) out.w[k] *= scale;
  out.area += exact;
}

// Full-disk rule around the origin (used when the disk sits inside the
// triangle).  12 sectors, polar Gauss, exact sector areas.
void full_disk_quadrature(double r, WeightedPoints& out) {
  const int ns = 12;
  const GaussRule& gt = gauss_rule(8);
  const GaussRule& gr = gauss_rule(8);
  for (int s = 0; s < ns; ++s) {
    double al = 2.0 * kPi * s / ns;
    double delta = 2.0 * kPi / ns;
    double exact = 0.5 * r * r * delta;
    size_t base = out.w.size();
    double wsum = 0.0;
    for (size_t i = 0; i < gt.x.size(); ++i) {
      double th = al + 0.5 * delta * (gt.x[i] + 1.0);
      for (size_t j = 0; j < gr.x.size(); ++j) {
        double rho = 0.5 * r * (gr.x[j] + 1.0);
        double w = gt.w[i] * 0.5 * delta * gr.w[j] * 0.5 * r * rho;
        out.x.push_back({rho * std::cos(th), rho * std::sin(th)});
        out.w.push_back(w);
        wsum += w;
      }
    }
    double scale = exact / wsum;
    for (size_t k = base; k < out.w.size(); ++k) out.w[k] *= scale;
    out.area += exact;
  }
}

}  // namespace

WeightedPoints triangle_disk_quadrature(Vec2 a, Vec2 b, Vec2 c, Vec2 center,
                                        double r, int degree) {
  WeightedPoints out;
  if (r <= 0.0) return out;
  // Work in center-origin coordinates.
  Vec2 t[3] = {a - center, b - center, c - center};
  if (cross(t[1] - t[0], t[2] - t[0]) < 0.0) std::swap(t[1], t[2]);

  // Straight pieces: inside portions of the triangle edges, in CCW order.
  struct Piece { Vec2 u, v; };
  std::vector<Piece> pieces;
  bool all_inside = true;
  for (int i = 0; i < 3; ++i) {
    Vec2 u = t[i], v = t[(i + 1) % 3];
    InsideInterval iv = inside_interval(u, v, r);
    if (!iv.any || iv.t0 > 0.0 || iv.t1 < 1.0) all_inside = false;
    if (iv.any) {
      Vec2 d = v - u;
      pieces.push_back({u + d * iv.t0, u + d * iv.t1});
    }
  }

  if (all_inside) {
    // Triangle fully inside the disk.
    WeightedPoints tq = triangle_quadrature(t[0], t[1], t[2], degree);
    for (auto& p : tq.x) p += center;
    return tq;
  }

  if (pieces.empty()) {
    // No edge touches the disk: either disjoint or the disk sits inside.
    double s01 = cross(t[1] - t[0], Vec2{0, 0} - t[0]);
    double s12 = cross(t[2] - t[1], Vec2{0, 0} - t[1]);
    double s20 = cross(t[0] - t[2], Vec2{0, 0} - t[2]);
    bool center_in = s01 >= 0.0 && s12 >= 0.0 && s20 >= 0.0;
    if (center_in &&
        dist_point_segment({0, 0}, t[0], t[1]) >= r &&
        dist_point_segment({0, 0}, t[1], t[2]) >= r &&
        dist_point_segment({0, 0}, t[2], t[0]) >= r) {
      full_disk_quadrature(r, out);
      for (auto& p : out.x) p += center;
    }
    return out;
  }

  // Assemble the convex region boundary: straight pieces joined by arcs.
  // Drop zero-length pieces first.
  std::vector<Piece> kept;
  for (auto& pc : pieces)
    if (dist(pc.u, pc.v) > 1e-15 * r) kept.push_back(pc);
  if (kept.empty()) return out;

  Vec2 z0{0, 0};
  for (auto& pc : kept) { z0 += pc.u; z0 += pc.v; }
  z0 = z0 / (2.0 * kept.size());

  auto fan = [&](Vec2 u, Vec2 v) {
    double s = cross(u - z0, v - z0);
    if (std::abs(s) < 1e-30) return;
    WeightedPoints tq = triangle_quadrature(z0, u, v, degree);
    out.append(tq);
  };

  int m = static_cast<int>(kept.size());
  for (int i = 0; i < m; ++i) {
    fan(kept[i].u, kept[i].v);
    // Arc gap from end of piece i to start of piece i+1.
    Vec2 ve = kept[i].v;
    Vec2 us = kept[(i + 1) % m].u;
    if (dist(ve, us) <= 1e-14 * r) continue;
    // Both gap endpoints lie on the circle.  Chunk the arc to <= pi/6
    // sweeps; each chunk contributes a fan triangle plus its bulge.
    double al = angle_of(ve);
    double be = angle_of(us);
    while (be <= al) be += 2.0 * kPi;
    int chunks = std::max(1, static_cast<int>(std::ceil((be - al) / (kPi / 6.0))));
    Vec2 prev = ve;
    for (int k = 0; k < chunks; ++k) {
      double c0 = al + (be - al) * k / chunks;
      double c1 = al + (be - al) * (k + 1) / chunks;
      Vec2 next = (k + 1 == chunks) ? us : r * dir(c1);
      fan(prev, next);
      bulge_quadrature(c0, c1, r, out);
      prev = next;
    }
  }
  // Total area is the weight sum: exact for straight-sided fans,
  // normalized closed forms for the bulges.
  double s = 0.0;
  for (double w : out.w) s += w;
  out.area = s;
  for (auto& p : out.x) p += center;
  return out;
}

WeightedPoints triangle_minus_disk_quadrature(Vec2 a, Vec2 b, Vec2 c, Vec2 center,
                                              double r, int degree) {
  // Signed representation: full triangle plus negated intersection points.
  // Exact for integrals; callers that need positive weights (weak-type
  // norms) must not use complement regions.
  WeightedPoints out = triangle_quadrature(a, b, c, degree);
  WeightedPoints cut = triangle_disk_quadrature(a, b, c, center, r, degree);
  for (auto& w : cut.w) w = -w;
  cut.area = -cut.area;
  out.append(cut);
  return out;
}

}  // namespace greenlab
