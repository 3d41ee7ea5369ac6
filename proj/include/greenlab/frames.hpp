#pragma once

#include <string>
#include <vector>

#include "greenlab/polygon.hpp"

namespace greenlab {

// Local boundary frame at x0.  Axis 1 points into the domain; the
// boundary near x0 lives in a thin slab around the axis-2 line.
struct CoordinateFrame {
  Vec2 origin;
  double angle = 0.0;  // direction of axis 1

  Vec2 e1() const { return dir(angle); }
  Vec2 e2() const { return perp(dir(angle)); }
  double coord1(Vec2 p) const { return dot(p - origin, e1()); }
  double coord2(Vec2 p) const { return dot(p - origin, e2()); }
  Vec2 at(double c1, double c2) const { return origin + c1 * e1() + c2 * e2(); }
};

// Exact max |coord-1| of the boundary polyline inside the closed ball
// B_R(x0) for axis direction `angle` (extremes of a linear function on
// clipped segments sit at the clipped endpoints).
double boundary_slab_halfwidth(const PolygonalDomain& dom, Vec2 x0, double R,
                               double angle);

// Slab-minimizing frame: coarse scan plus golden-section refinement to
// 1e-9 rad; near-ties resolved toward the inward normal of the edge
// nearest x0; axis 1 oriented into the domain.
CoordinateFrame best_frame(const PolygonalDomain& dom, Vec2 x0, double R);

struct SandwichCheck {
  bool pass = false;
  double halfwidth = 0.0;   // measured boundary slab halfwidth
  double dev_ratio = 0.0;   // halfwidth / (gamma R), or /R when gamma == 0
  double inner_defect = 0.0;  // area missing from {c1 > gamma R} side
  double outer_defect = 0.0;  // area of domain below {c1 = -gamma R}
};

// Both sandwich inclusions verified by exact polygon-halfplane-disk
// clipping, plus the slab bound on the boundary itself.
SandwichCheck check_sandwich(const PolygonalDomain& dom, Vec2 x0, double R,
                             const CoordinateFrame& frame, double gamma);

// best_frame + check against the domain's declared flatness certificate.
// Throws FlatnessViolation when the sandwich fails.
CoordinateFrame associated_frame(const PolygonalDomain& dom, Vec2 x0, double R);

struct FlatnessSample {
  Vec2 x0;
  double R = 0.0;
  double dev_ratio = 0.0;
  bool pass = false;
};

struct FlatnessReport {
  bool pass = false;
  double gamma = 0.0, R0 = 0.0;
  int samples = 0, violations = 0;
  double worst_ratio = 0.0;
  FlatnessSample worst;
  std::vector<FlatnessSample> failed;
};

// Samples >= `density` points per boundary edge at each dyadic scale
// R0 * 2^-k, k = 0..scales-1, finds the best frame per sample and checks
// the sandwich.  density must be >= 8.
FlatnessReport certify_flatness(const PolygonalDomain& dom, double gamma,
                                double R0, int density = 8, int scales = 6);

struct LipschitzReport {
  bool pass = false;
  double L = 0.0, R0 = 0.0;
  int samples = 0, violations = 0;
  double max_slope = 0.0;
  Vec2 worst;
  double worst_R = 0.0;
};

// Graph certificate: at polygon vertices and edge midpoints, for each
// dyadic scale, some frame renders the local boundary a monotone graph
// with slope <= L.
LipschitzReport certify_lipschitz(const PolygonalDomain& dom, double L,
                                  double R0, int scales = 6);

// Closed-form bound on the tangent of the tilt between the frames at
// scales R and 2R sharing a boundary origin, as a function of gamma.
double frame_tilt_bound(double gamma);

}  // namespace greenlab
