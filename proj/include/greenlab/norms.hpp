#pragma once

#include <functional>
#include <string>
#include <vector>

#include "greenlab/mesh.hpp"
#include "greenlab/vec2.hpp"

namespace greenlab {

// Measurement region inside the meshed domain: everything, the part of a
// disk that lies in the domain, or the part outside a closed disk.
struct Region {
  enum class Kind { whole, ball, complement };
  Kind kind = Kind::whole;
  Vec2 center{0.0, 0.0};
  double radius = 0.0;

  static Region whole() { return Region{}; }
  static Region ball(Vec2 x, double R) {
    return Region{Kind::ball, x, R};
  }
  static Region complement(Vec2 y, double R) {
    return Region{Kind::complement, y, R};
  }

  bool contains(Vec2 p) const;
};

// Quadrature decomposition of a region.  Triangles straddling the disk
// boundary are clipped exactly, so the weights reproduce the region area
// to rounding and integrals of smooth fields converge at the rule's rate.
WeightedPoints region_quadrature(const Mesh& mesh, const Region& region,
                                 int degree = 6);

using ScalarField = std::function<double(Vec2)>;
using GradField = std::function<Vec2(Vec2)>;

struct NormReport {
  std::string kind;  // weak_l2 | lq_ball | lq_annulus | holder | log_fit | ratio
  double q = 0.0;
  double R = 0.0;
  double mu = 0.0;
  Vec2 x{0.0, 0.0};
  Vec2 y{0.0, 0.0};
  double value = 0.0;
  int samples = 0;
  double residual = 0.0;
};

// One-line JSON rendering with a fixed key order.
std::string to_json(const NormReport& r);

// sup over sampled values t of t * measure{|u| > t}^(1/2).  The map is
// piecewise monotone between sampled values, so restricting the sup to
// the sample set loses nothing.
NormReport weak_l2(const Mesh& mesh, const Region& region,
                   const ScalarField& magnitude);

// Quadrature Lq norm, 1 <= q < infinity.
NormReport lq_norm(const Mesh& mesh, const Region& region, double q,
                   const ScalarField& magnitude);

// Deterministic low-discrepancy evaluation points inside the region.
// Point sets are nested as the budget grows (first-n of one sequence).
std::vector<Vec2> holder_sample_points(const Mesh& mesh, const Region& region,
                                       int pair_budget);

// max |u(a) - u(b)| / |a - b|^mu over sampled pairs: a lower bound on the
// seminorm, monotone nondecreasing in the pair budget.
NormReport holder_seminorm(const Mesh& mesh, const Region& region, double mu,
                           int pair_budget, const ScalarField& field);

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square misfit
  int samples = 0;
};

// Least-squares fit of values against log(K / r).
LogFit log_slope_fit(const std::vector<double>& radii,
                     const std::vector<double>& values, double K, double eps);

enum class RatioKind {
  sobolev_poincare_local,
  sobolev_poincare_global,
  morrey,
  reverse_holder,
};

// LHS / RHS of the named embedding inequality, measured by quadrature.
//   sobolev_poincare_local:  |u - mean| over the R/8 ball in L_{2q/(2-q)}
//                            against |du| over the R ball in L_q, 1<q<2
//   sobolev_poincare_global: the same pair over the whole domain
//   morrey:                  Holder seminorm (exponent 1-2/q) over the R/8
//                            ball against |du| in L_q over the R ball plus
//                            R^{-2} |u| in L_1 over the R/8 ball, q>2
//   reverse_holder:          area-normalized L_q mean of |du| on the R/2
//                            ball against its L_2 mean on the R ball, q>2
// A vanishing left side gives ratio 0 regardless of the right side.
NormReport inequality_ratio(const Mesh& mesh, RatioKind kind, double q,
                            Vec2 x0, double R, const ScalarField& u,
                            const GradField& du, int pair_budget = 4096);

}  // namespace greenlab
