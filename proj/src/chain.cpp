#include "greenlab/chain.hpp"

#include <algorithm>
#include <cmath>

#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

void require_flat(const PolygonalDomain& dom) {
  if (!dom.flatness)
    throw InvalidParameter("operation requires a flatness certificate");
  if (dom.flatness->gamma > 1.0 / 96.0 + 1e-15)
    throw InvalidParameter("flatness certificate needs gamma <= 1/96");
}

}  // namespace

TwoScalePoints two_scale_points(const PolygonalDomain& dom, Vec2 x0, double R) {
  require_flat(dom);
  double R0 = dom.flatness->R0;
  if (R <= 0.0 || 2.0 * R > R0 * (1.0 + 1e-12))
    throw OutOfScale("two_scale_points: need 0 < R <= R0/2");

  TwoScalePoints ts;
  ts.f1 = associated_frame(dom, x0, R);
  ts.f2 = associated_frame(dom, x0, 2.0 * R);
  ts.z1 = x0 + R * ts.f1.e1();
  ts.z2 = x0 + 2.0 * R * ts.f2.e1();
  ts.separation = dist(ts.z1, ts.z2);
  ts.tilt = std::abs(wrap_pi(ts.f2.angle - ts.f1.angle));

  double gamma = dom.flatness->gamma;
  double tan_bound = frame_tilt_bound(std::max(gamma, 1e-300));
  if (gamma > 0.0 && std::tan(ts.tilt) > tan_bound * (1.0 + 1e-9))
    throw GeometryContractViolation("two_scale_points: frame tilt exceeds bound");
  if (ts.separation < R * (1.0 - 1e-12) || ts.separation > 1.001 * R * (1.0 + 1e-12))
    throw GeometryContractViolation("two_scale_points: separation out of [R, 1.001R]");
  if (dom.side(ts.z1) != Side::inside || dom.side(ts.z2) != Side::inside)
    throw GeometryContractViolation("two_scale_points: endpoint not interior");
  if (!dom.segment_inside(ts.z1, ts.z2))
    throw GeometryContractViolation("two_scale_points: segment leaves the domain");
  if (dist_point_segment(x0, ts.z1, ts.z2) < R * (1.0 - 1e-12))
    throw GeometryContractViolation("two_scale_points: segment enters B_R(x0)");
  double far = std::max(dist(ts.z1, x0), dist(ts.z2, x0));
  if (far > 2.0 * R * (1.0 + 1e-12))
    throw GeometryContractViolation("two_scale_points: segment leaves B_2R(x0)");
  return ts;
}

EscapeSegment escape_segment(const PolygonalDomain& dom, Vec2 y, double rho) {
  require_flat(dom);
  double R0 = dom.flatness->R0;
  if (rho <= 0.0) throw InvalidParameter("escape_segment: rho must be positive");
  if (dom.side(y) != Side::inside)
    throw InvalidParameter("escape_segment: y must be interior");

  EscapeSegment es;
  auto hit = dom.nearest_boundary(y);
  es.rhat = hit.distance;
  es.ytilde = hit.point;

  if (rho < es.rhat) {
    if (!(es.rhat < R0 / 4.0))
      throw OutOfScale("escape_segment: case a needs rhat < R0/4");
    es.case_tag = 'a';
    es.scale = 2.0 * es.rhat;
    CoordinateFrame fr = associated_frame(dom, es.ytilde, es.scale);
    es.z1 = y + rho * fr.e1();
    es.z2 = es.ytilde + es.scale * fr.e1();
    double d = dist(es.z1, es.z2);
    if (d < (es.rhat - rho) * (1.0 - 1e-9) - 1e-15 * R0 ||
        d > std::sqrt(5.0) * es.rhat * (1.0 + 1e-12))
      throw GeometryContractViolation("escape_segment: case a length bound fails");
  } else {
    if (!(rho < R0 / 4.0))
      throw OutOfScale("escape_segment: case b needs rho < R0/4");
    es.case_tag = 'b';
    es.scale = 4.0 * rho;
    CoordinateFrame fr = associated_frame(dom, es.ytilde, es.scale);
    es.z1 = y + rho * fr.e1();
    es.z2 = es.ytilde + es.scale * fr.e1();
    double d = dist(es.z1, es.z2);
    if (d < 2.0 * rho * (1.0 - 1e-9) ||
        d > std::sqrt(17.0) * rho * (1.0 + 1e-12))
      throw GeometryContractViolation("escape_segment: case b length bound fails");
  }

  if (dom.side(es.z1) != Side::inside || dom.side(es.z2) != Side::inside)
    throw GeometryContractViolation("escape_segment: endpoint not interior");
  if (!dom.segment_inside(es.z1, es.z2))
    throw GeometryContractViolation("escape_segment: segment leaves the domain");
  if (dist_point_segment(y, es.z1, es.z2) < rho * (1.0 - 1e-12))
    throw GeometryContractViolation("escape_segment: segment enters B_rho(y)");
  double cap = es.scale * (1.0 + 1e-12);
  if (dist(es.z1, es.ytilde) > cap || dist(es.z2, es.ytilde) > cap)
    throw GeometryContractViolation("escape_segment: segment leaves the cap ball");
  return es;
}

namespace {

// Walking cover of a segment [a, b] with balls keeping |center - y| >= 16r.
// Radius rule: r = (exact distance from y to the step sub-segment) / 16;
// the step never exceeds that radius, so consecutive balls overlap and the
// step midpoint witnesses the overlap.
struct ChainBuilder {
  const PolygonalDomain& dom;
  Vec2 y;
  BallChain& chain;

  void push_ball(Vec2 c, double r, bool with_witness, Vec2 witness) {
    if (with_witness && !chain.balls.empty()) chain.witnesses.push_back(witness);
    chain.balls.push_back({c, r});
  }

  Vec2 interior_witness(Vec2 w, Vec2 za, double ra, Vec2 zb, double rb) const {
    if (dom.side(w) == Side::inside) return w;
    // Nudge toward the deeper ball center.
    for (double t : {0.25, 0.5, 0.75}) {
      for (Vec2 target : {za, zb}) {
        Vec2 cand = w + (target - w) * t;
        if (dist(cand, za) < ra && dist(cand, zb) < rb &&
            dom.side(cand) == Side::inside)
          return cand;
      }
    }
    throw GeometryContractViolation("chain: no interior witness for overlap");
  }

  // skip_first: the segment start already carries the previous ball.
  void cover_segment(Vec2 a, Vec2 b, bool skip_first) {
    double len = dist(a, b);
    Vec2 u = len > 0 ? (b - a) / len : Vec2{0, 0};
    double s = 0.0;
    Vec2 prev_center = a;
    double prev_radius = chain.balls.empty() ? 0.0 : chain.balls.back().radius;
    if (!skip_first) {
      double r0 = dist(a, y) / 16.0;
      push_ball(a, r0, false, {});
      prev_radius = r0;
    }
    while (s < len * (1.0 - 1e-15)) {
      Vec2 here = a + s * u;
      double step = std::min(len - s, dist(here, y) / 17.0);
      Vec2 next = a + (s + step) * u;
      double lb = dist_point_segment(y, here, next);
      double r = lb / 16.0;
      Vec2 mid = (here + next) * 0.5;
      Vec2 w = interior_witness(mid, prev_center, prev_radius, next, r);
      push_ball(next, r, true, w);
      prev_center = next;
      prev_radius = r;
      s += step;
    }
  }

  // Arc of the circle |p - y| = r from angle a0 sweeping `sweep` radians.
  void cover_arc(double r, double a0, double sweep, bool skip_first) {
    double max_step = 2.0 * std::asin(1.0 / 32.0) * 0.999;
    int m = std::max(0, static_cast<int>(std::ceil(std::abs(sweep) / max_step)));
    double radius = r / 16.0;
    Vec2 prev_center = y + r * dir(a0);
    double prev_radius = chain.balls.empty() ? radius : chain.balls.back().radius;
    if (!skip_first) {
      push_ball(prev_center, radius, false, {});
      prev_radius = radius;
    }
    for (int i = 1; i <= m; ++i) {
      double phi = a0 + sweep * i / m;
      Vec2 c = y + r * dir(phi);
      Vec2 mid = (prev_center + c) * 0.5;
      Vec2 w = interior_witness(mid, prev_center, prev_radius, c, radius);
      push_ball(c, radius, true, w);
      prev_center = c;
      prev_radius = radius;
    }
  }
};

}  // namespace

BallChain chain_of_balls(const PolygonalDomain& dom, Vec2 x, Vec2 y) {
  require_flat(dom);
  double R0 = dom.flatness->R0;
  double gamma = dom.flatness->gamma;
  double K = dom.diameter();

  BallChain chain;
  chain.x = x;
  chain.y = y;
  chain.rho = dist(x, y);
  if (chain.rho < 1e-9 * K)
    throw TooClose("chain_of_balls: |x - y| below 1e-9 * diameter");
  if (!(chain.rho < R0 / 8.0))
    throw OutOfScale("chain_of_balls: need 0 < rho := |x - y| < R0/8");
  if (dom.side(x) != Side::inside || dom.side(y) != Side::inside)
    throw InvalidParameter("chain_of_balls: x and y must be interior points");

  double rho = chain.rho;
  ChainBuilder bld{dom, y, chain};
  auto hit = dom.nearest_boundary(y);
  double rhat = hit.distance;

  if (rhat > (R0 / 8.0) * (1.0 + 1e-12)) {
    // Interior case: walk radially from x out to distance R0/8.
    chain.boundary_case = false;
    Vec2 u = (x - y) / rho;
    Vec2 y0 = y + (R0 / 8.0) * u;
    bld.cover_segment(x, y0, false);
    chain.terminal = y0;
  } else {
    chain.boundary_case = true;
    Vec2 yt = hit.point;

    EscapeSegment esc = escape_segment(dom, y, rho);
    Vec2 w0 = esc.z1, w1 = esc.z2;

    if (esc.case_tag == 'a') {
      // Pole ball is interior; walk the shorter arc from x to w0.
      double sweep = wrap_pi(angle_of(w0 - y) - angle_of(x - y));
      bld.cover_arc(rho, angle_of(x - y), sweep, false);
    } else {
      CoordinateFrame f3 = associated_frame(dom, yt, 3.0 * rho);
      double c1x = f3.coord1(x);
      double phi_e1 = angle_of(f3.e1());
      Vec2 arc_from = x;
      double arc_r = rho;
      if (c1x <= 3.0 * gamma * rho) {
        // Detour: shift x inward before circling toward w0.
        chain.detour = true;
        Vec2 xbar = x + (6.0 * gamma * rho) * f3.e1();
        double rho_bar = dist(xbar, y);
        double r_x = rho / 16.0;
        double r_xbar = std::min(rho, rho_bar) / 16.0;
        bld.push_ball(x, r_x, false, {});
        // Witness on the inward segment, in the guaranteed band.
        double tstar = (3.0 * gamma * rho - c1x) / (6.0 * gamma * rho);
        double t = 0.5 * (std::max(tstar, 1.0 / 16.0) + 1.0);
        Vec2 w = x + t * (6.0 * gamma * rho) * f3.e1();
        w = bld.interior_witness(w, x, r_x, xbar, r_xbar);
        bld.push_ball(xbar, r_xbar, true, w);
        arc_from = xbar;
        arc_r = rho_bar;
      }
      // Arc from arc_from to the radial projection of w0, inside the band
      // {coord1 > 3 gamma rho} where the sandwich guarantees interior.
      double a_from = wrap_pi(angle_of(arc_from - y) - phi_e1);
      Vec2 z0 = y + arc_r * normalized(w0 - y);
      double a_to = wrap_pi(angle_of(z0 - y) - phi_e1);
      double sweep = a_to - a_from;  // stays within the allowed band
      bld.cover_arc(arc_r, a_from + phi_e1, sweep, true);
      if (std::abs(arc_r - rho) > 1e-15 * rho) {
        bld.cover_segment(z0, w0, true);
      }
    }

    bld.cover_segment(w0, w1, true);

    // Dyadic two-scale legs out to the certificate scale.
    double R = esc.scale;
    Vec2 end = w1;
    while (2.0 * R <= R0 * (1.0 - 1e-12)) {
      TwoScalePoints ts = two_scale_points(dom, yt, R);
      bld.cover_segment(ts.z1, ts.z2, true);
      end = ts.z2;
      R *= 2.0;
    }
    chain.terminal = end;
  }

  // Terminal ball must not fall below the frozen terminal radius; the
  // cover rule already yields |terminal - y|/16 >= (3 R0/8)/16 here.
  if (chain.balls.empty())
    throw GeometryContractViolation("chain_of_balls: empty chain");
  return chain;
}

double chain_count_constant() { return 160.0; }

ChainCheck validate_chain(const PolygonalDomain& dom, const BallChain& chain) {
  ChainCheck c;
  if (!dom.flatness) throw InvalidParameter("validate_chain: no flatness certificate");
  double R0 = dom.flatness->R0;
  int k = static_cast<int>(chain.balls.size());
  c.k = k;
  if (k == 0 || chain.witnesses.size() + 1 != chain.balls.size()) return c;

  double tol = 1e-12;
  c.start_in_first = dist(chain.x, chain.balls.front().center) <=
                     chain.balls.front().radius * (1.0 + tol);
  c.terminal_in_last = dist(chain.terminal, chain.balls.back().center) <=
                       chain.balls.back().radius * (1.0 + tol);

  c.radii_lower = true;
  c.radii_upper = true;
  for (const Ball& b : chain.balls) {
    if (dist(b.center, chain.y) < 16.0 * b.radius * (1.0 - tol))
      c.radii_lower = false;
    if (b.radius > R0 * (1.0 + tol)) c.radii_upper = false;
  }
  c.terminal_radius = chain.balls.back().radius >= (R0 / 136.0) * (1.0 - tol);

  c.overlaps = true;
  for (int j = 0; j + 1 < k; ++j) {
    Vec2 w = chain.witnesses[j];
    bool ok = dist(w, chain.balls[j].center) < chain.balls[j].radius &&
              dist(w, chain.balls[j + 1].center) < chain.balls[j + 1].radius &&
              dom.side(w) == Side::inside;
    if (!ok) c.overlaps = false;
  }

  c.terminal_far = dist(chain.terminal, chain.y) >= (R0 / 8.0) * (1.0 - tol);
  c.log_ratio = k / std::log(R0 / chain.rho);
  c.count_bound = c.log_ratio <= chain_count_constant();

  c.pass = c.start_in_first && c.terminal_in_last && c.radii_lower &&
           c.radii_upper && c.overlaps && c.terminal_far &&
           c.terminal_radius && c.count_bound;
  return c;
}

}  // namespace greenlab
