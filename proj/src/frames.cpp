#include "greenlab/frames.hpp"

#include <algorithm>
#include <cmath>

#include "greenlab/clip.hpp"
#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGoldenTol = 1e-9;  // radians

// Endpoints of each boundary edge clipped to the closed ball, relative to
// x0.  The slab halfwidth for any axis is attained on these points.
std::vector<Vec2> slab_candidates(const PolygonalDomain& dom, Vec2 x0, double R) {
  std::vector<Vec2> pts;
  int n = dom.n();
  for (int e : dom.edges_near(x0, R)) {
    Vec2 a = dom.vertex(e) - x0;
    Vec2 b = dom.vertex((e + 1) % n) - x0;
    Vec2 d = b - a;
    double A = norm2(d);
    if (A == 0.0) continue;
    double B = 2.0 * dot(a, d), C = norm2(a) - R * R;
    double t0 = 0.0, t1 = 1.0;
    if (C > 0.0 || norm2(b) > R * R) {
      double disc = B * B - 4.0 * A * C;
      if (disc <= 0.0) continue;
      double sq = std::sqrt(disc);
      t0 = std::max((-B - sq) / (2.0 * A), 0.0);
      t1 = std::min((-B + sq) / (2.0 * A), 1.0);
      if (t0 >= t1) continue;
    }
    pts.push_back(a + d * t0);
    pts.push_back(a + d * t1);
  }
  return pts;
}

double halfwidth_of(const std::vector<Vec2>& pts, double angle) {
  Vec2 e = dir(angle);
  double w = 0.0;
  for (Vec2 p : pts) w = std::max(w, std::abs(dot(p, e)));
  return w;
}

}  // namespace

double boundary_slab_halfwidth(const PolygonalDomain& dom, Vec2 x0, double R,
                               double angle) {
  return halfwidth_of(slab_candidates(dom, x0, R), angle);
}

CoordinateFrame best_frame(const PolygonalDomain& dom, Vec2 x0, double R) {
  if (R <= 0.0) throw InvalidParameter("best_frame: R must be positive");
  std::vector<Vec2> pts = slab_candidates(dom, x0, R);
  CoordinateFrame fr;
  fr.origin = x0;
  if (pts.empty()) {
    // No boundary in the ball; any frame works.  Point axis 1 from the
    // nearest boundary toward x0.
    auto hit = dom.nearest_boundary(x0);
    fr.angle = angle_of(x0 - hit.point);
    return fr;
  }

  // Reference: inward normal of the nearest edge (tie-break target).
  auto hit = dom.nearest_boundary(x0);
  auto [ea, eb] = dom.edge(hit.edge);
  double ref = angle_of(perp(eb - ea));  // CCW polygon: left normal points in

  const int M = 128;
  std::vector<double> vals(M);
  double vmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < M; ++i) {
    vals[i] = halfwidth_of(pts, kPi * i / M);
    vmin = std::min(vmin, vals[i]);
  }
  // Near-ties resolved toward the inward reference normal.
  double best_th = 0.0, best_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < M; ++i) {
    if (vals[i] > vmin * (1.0 + 1e-9) + 1e-15) continue;
    double th = kPi * i / M;
    double gap = std::abs(std::remainder(th - ref, kPi));
    if (gap < best_gap) { best_gap = gap; best_th = th; }
  }

  // Golden-section refinement on the bracket around the scan minimum.
  double a = best_th - kPi / M, b = best_th + kPi / M;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = halfwidth_of(pts, c), fd = halfwidth_of(pts, d);
  while (b - a > kGoldenTol) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a);
      fc = halfwidth_of(pts, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a);
      fd = halfwidth_of(pts, d);
    }
  }
  double th = 0.5 * (a + b);

  // Keep the orientation whose axis 1 points into the domain.
  fr.angle = th;
  Vec2 probe = x0 + (0.5 * R) * fr.e1();
  if (dom.side(probe) != Side::inside) {
    fr.angle = th + kPi;
    Vec2 probe2 = x0 + (0.5 * R) * fr.e1();
    if (dom.side(probe2) != Side::inside) {
      // Ambiguous (thin domain); fall back to the reference normal side.
      fr.angle = std::abs(std::remainder(th - ref, 2 * kPi)) <
                         std::abs(std::remainder(th + kPi - ref, 2 * kPi))
                     ? th
                     : th + kPi;
    }
  }
  return fr;
}

SandwichCheck check_sandwich(const PolygonalDomain& dom, Vec2 x0, double R,
                             const CoordinateFrame& frame, double gamma) {
  if (R <= 0.0) throw InvalidParameter("check_sandwich: R must be positive");
  if (gamma < 0.0 || gamma >= 0.25)
    throw InvalidParameter("check_sandwich: gamma must lie in [0, 1/4)");
  SandwichCheck out;
  out.halfwidth = boundary_slab_halfwidth(dom, x0, R, frame.angle);
  out.dev_ratio = gamma > 0.0 ? out.halfwidth / (gamma * R) : out.halfwidth / R;

  Vec2 e1 = frame.e1();
  double tol = 1e-11 * R * R;

  // Inner inclusion: {c1 > gamma R} cap B_R(x0) inside the domain.
  double target = segment_area(R, gamma * R);
  auto upper = clip_halfplane(dom.vertices(), e1, dot(x0, e1) + gamma * R);
  double got = upper.empty() ? 0.0 : polygon_disk_area(upper, x0, R);
  out.inner_defect = std::max(0.0, target - got);

  // Outer inclusion: domain cap B_R(x0) inside {c1 > -gamma R}.
  double inside = polygon_disk_area(dom.vertices(), x0, R);
  auto above = clip_halfplane(dom.vertices(), e1, dot(x0, e1) - gamma * R);
  double above_area = above.empty() ? 0.0 : polygon_disk_area(above, x0, R);
  out.outer_defect = std::max(0.0, inside - above_area);

  bool slab_ok = out.halfwidth <= gamma * R * (1.0 + 1e-9) + 1e-13 * R;
  out.pass = slab_ok && out.inner_defect <= tol && out.outer_defect <= tol;
  return out;
}

CoordinateFrame associated_frame(const PolygonalDomain& dom, Vec2 x0, double R) {
  if (!dom.flatness) throw InvalidParameter("domain has no flatness certificate");
  if (R <= 0.0 || R > dom.flatness->R0 * (1.0 + 1e-12))
    throw OutOfScale("associated_frame: R must lie in (0, R0]");
  CoordinateFrame fr = best_frame(dom, x0, R);
  SandwichCheck chk = check_sandwich(dom, x0, R, fr, dom.flatness->gamma);
  if (!chk.pass)
    throw FlatnessViolation("sandwich fails at the requested point/scale");
  return fr;
}

FlatnessReport certify_flatness(const PolygonalDomain& dom, double gamma,
                                double R0, int density, int scales) {
  if (density < 8) throw InvalidParameter("certify_flatness: density must be >= 8");
  if (R0 <= 0.0) throw InvalidParameter("certify_flatness: R0 must be positive");
  if (gamma < 0.0 || gamma >= 0.25)
    throw InvalidParameter("certify_flatness: gamma must lie in [0, 1/4)");
  FlatnessReport rep;
  rep.gamma = gamma;
  rep.R0 = R0;
  int n = dom.n();
  for (int e = 0; e < n; ++e) {
    auto [a, b] = dom.edge(e);
    for (int i = 0; i < density; ++i) {
      Vec2 x0 = a + (b - a) * (double(i) / density);
      for (int k = 0; k < scales; ++k) {
        double R = R0 * std::pow(0.5, k);
        CoordinateFrame fr = best_frame(dom, x0, R);
        SandwichCheck chk = check_sandwich(dom, x0, R, fr, gamma);
        ++rep.samples;
        FlatnessSample smp{x0, R, chk.dev_ratio, chk.pass};
        if (chk.dev_ratio > rep.worst_ratio) {
          rep.worst_ratio = chk.dev_ratio;
          rep.worst = smp;
        }
        if (!chk.pass) {
          ++rep.violations;
          if (rep.failed.size() < 64) rep.failed.push_back(smp);
        }
      }
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

namespace {

// Max slope of the boundary near x0 at scale R as a graph in the frame
// with axis-1 direction `angle`; infinity when not a monotone graph.
double graph_slope(const PolygonalDomain& dom, Vec2 x0, double R, double angle) {
  Vec2 e1 = dir(angle), e2 = perp(e1);
  int n = dom.n();
  auto edges = dom.edges_near(x0, R);
  double worst = 0.0;
  int sgn = 0;
  for (int e : edges) {
    Vec2 a = dom.vertex(e) - x0;
    Vec2 b = dom.vertex((e + 1) % n) - x0;
    Vec2 d = b - a;
    // Clip to the ball; edges that only graze it contribute nothing.
    double A = norm2(d);
    if (A == 0.0) continue;
    if (norm2(a) > R * R || norm2(b) > R * R) {
      double B = 2.0 * dot(a, d), C = norm2(a) - R * R;
      double disc = B * B - 4.0 * A * C;
      if (disc <= 0.0) continue;
      double sq = std::sqrt(disc);
      double t0 = std::max((-B - sq) / (2.0 * A), 0.0);
      double t1 = std::min((-B + sq) / (2.0 * A), 1.0);
      if (t1 - t0 <= 1e-12) continue;
    }
    double du = dot(d, e1), dv = dot(d, e2);
    if (std::abs(dv) <= 1e-15 * (std::abs(du) + std::abs(dv)))
      return std::numeric_limits<double>::infinity();
    int s = dv > 0 ? 1 : -1;
    if (sgn == 0) sgn = s;
    if (s != sgn) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(du / dv));
  }
  return worst;
}

}  // namespace

LipschitzReport certify_lipschitz(const PolygonalDomain& dom, double L,
                                  double R0, int scales) {
  if (L < 0.0 || R0 <= 0.0)
    throw InvalidParameter("certify_lipschitz: need L >= 0 and R0 > 0");
  LipschitzReport rep;
  rep.L = L;
  rep.R0 = R0;
  int n = dom.n();
  std::vector<Vec2> sites;
  sites.reserve(2 * n);
  for (int e = 0; e < n; ++e) {
    auto [a, b] = dom.edge(e);
    sites.push_back(a);
    sites.push_back((a + b) * 0.5);
  }
  const int M = 256;
  for (Vec2 x0 : sites) {
    for (int k = 0; k < scales; ++k) {
      double R = R0 * std::pow(0.5, k);
      double best = std::numeric_limits<double>::infinity();
      double best_th = 0.0;
      for (int i = 0; i < M; ++i) {
        double th = kPi * i / M;
        double v = graph_slope(dom, x0, R, th);
        if (v < best) { best = v; best_th = th; }
      }
      // Local golden refinement.
      double a = best_th - kPi / M, b = best_th + kPi / M;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = graph_slope(dom, x0, R, c), fd = graph_slope(dom, x0, R, d);
      while (b - a > 1e-7) {
        if (fc < fd) {
          b = d; d = c; fd = fc; c = b - g * (b - a);
          fc = graph_slope(dom, x0, R, c);
        } else {
          a = c; c = d; fc = fd; d = a + g * (b - a);
          fd = graph_slope(dom, x0, R, d);
        }
      }
      best = std::min(best, std::min(fc, fd));
      ++rep.samples;
      if (best > rep.max_slope) {
        rep.max_slope = best;
        rep.worst = x0;
        rep.worst_R = R;
      }
      if (!(best <= L * (1.0 + 1e-9))) ++rep.violations;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

double frame_tilt_bound(double gamma) {
  if (gamma < 0.0 || gamma >= 0.45)
    throw InvalidParameter("frame_tilt_bound: gamma out of range");
  double s1 = std::sqrt(1.0 - gamma * gamma);
  double s2 = std::sqrt(1.0 - 4.0 * gamma * gamma);
  double den = s1 * s2 - 2.0 * gamma * gamma;
  if (den <= 0.0) throw InvalidParameter("frame_tilt_bound: formula degenerates");
  return gamma * (2.0 * s1 + s2) / den;
}

}  // namespace greenlab
