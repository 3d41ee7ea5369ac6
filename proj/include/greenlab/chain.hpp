#pragma once

#include <vector>

#include "greenlab/frames.hpp"
#include "greenlab/polygon.hpp"

namespace greenlab {

// Two interior points produced from the frames at scales R and 2R over a
// common boundary-adjacent origin; the connecting segment avoids B_R(x0)
// while staying in the closure of the domain cap at scale 2R.
struct TwoScalePoints {
  Vec2 z1, z2;
  CoordinateFrame f1, f2;
  double separation = 0.0;
  double tilt = 0.0;  // angle between the two frames' first axes
};

TwoScalePoints two_scale_points(const PolygonalDomain& dom, Vec2 x0, double R);

// Segment escaping the pole ball B_rho(y) out to the scale of the nearest
// boundary point.  Case a: rho < rhat (pole ball interior); case b:
// rhat <= rho.
struct EscapeSegment {
  Vec2 z1, z2;
  char case_tag = 'a';
  double rhat = 0.0;   // dist(y, boundary)
  Vec2 ytilde;         // nearest boundary point
  double scale = 0.0;  // 2*rhat (case a) or 4*rho (case b)
};

EscapeSegment escape_segment(const PolygonalDomain& dom, Vec2 y, double rho);

struct Ball {
  Vec2 center;
  double radius = 0.0;
};

// Chain of balls certifying the pointwise telescoping step: consecutive
// balls overlap inside the domain, every ball keeps |center - y| >= 16 r,
// the first ball holds x, the last holds a terminal point far from y.
struct BallChain {
  Vec2 x, y;
  Vec2 terminal;
  double rho = 0.0;
  bool boundary_case = false;
  bool detour = false;
  std::vector<Ball> balls;
  std::vector<Vec2> witnesses;  // size balls.size() - 1
};

BallChain chain_of_balls(const PolygonalDomain& dom, Vec2 x, Vec2 y);

struct ChainCheck {
  bool pass = false;
  bool start_in_first = false;
  bool terminal_in_last = false;
  bool radii_lower = false;    // |z_j - y| >= 16 rho_j
  bool radii_upper = false;    // rho_j <= R0
  bool overlaps = false;       // witnesses inside both balls and the domain
  bool terminal_far = false;   // |y - terminal| >= R0 / 8
  bool terminal_radius = false;  // rho_k >= R0 / 136
  bool count_bound = false;    // k <= C log(R0 / rho)
  int k = 0;
  double log_ratio = 0.0;      // k / log(R0 / rho)
};

ChainCheck validate_chain(const PolygonalDomain& dom, const BallChain& chain);

// Frozen bound used by the count invariant (natural log).
double chain_count_constant();

}  // namespace greenlab
