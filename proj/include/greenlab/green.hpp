#pragma once

#include <string>
#include <utility>
#include <vector>

#include "greenlab/fem.hpp"
#include "greenlab/norms.hpp"

namespace greenlab {

// One column of the approximated fundamental pair: the velocity/pressure
// response to the mean-zero averaging bump at (y, eps), source slot k.
struct GreenColumn {
  Vec2 y;
  double eps = 0.0;
  int k = 0;
  bool adjoint = false;
  StokesSystem::Solution sol;
  Eigen::VectorXd load;  // the averaging load that produced the column

  Vec2 velocity_mean;          // velocity column average (held to zero)
  double divergence = 0.0;     // largest weak-divergence row
  double pressure_mean = 0.0;  // recorded, never normalized away
  // (|Du|_q + |p|_q) * eps^{1 - 2/q} at the probe exponents
  std::vector<std::pair<double, double>> apriori;
};

// Both columns at one pole, plus the system they were solved on.
struct GreenPair {
  GreenColumn col[2];
  const StokesSystem* sys = nullptr;

  Vec2 pole() const { return col[0].y; }
  double eps() const { return col[0].eps; }
  bool adjoint() const { return col[0].adjoint; }
  // (l, k) = velocity component l of column k
  Mat2 velocity(Vec2 x) const;
  Vec2 pressure(Vec2 x) const;
};

// Solves both columns.  Requires eps in (0, certificate scale] and at
// least 8 mesh elements overlapping B_eps(y); an under-resolved radius
// raises ResolutionError rather than solving on too-coarse data.
GreenPair approx_green(const StokesSystem& sys, Vec2 y, double eps,
                       bool adjoint,
                       const std::vector<double>& apriori_q = {2.2, 2.5});

// Point-sampled view of a column pair.
struct GreenTable {
  Vec2 y;
  double eps = 0.0;
  std::vector<Vec2> x;
  std::vector<Mat2> G;
  std::vector<Vec2> Pi;
};

// Rejects evaluation points closer than eps/2 to the pole.
GreenTable sample_table(const GreenPair& pair, const std::vector<Vec2>& probes);

// Header x1,x2,y1,y2,eps,G11,G12,G21,G22,Pi1,Pi2 and one row per point.
std::string to_csv(const GreenTable& table);

// Log-spaced radii 2 eps, 4 eps, ... up to K/4 along 8 directions,
// keeping the points that land inside the domain.
std::vector<Vec2> probe_points(const PolygonalDomain& dom, Vec2 y, double eps,
                               double K);

// Defect of testing each column against the other orientation's bump:
// entry (l, k) pairs the adjoint column l load with direct column k and
// subtracts the mirrored pairing.  Exact for matched discrete systems.
struct DualityCheck {
  Mat2 defect;
  double scale = 0.0;  // largest ball-average magnitude involved
};
DualityCheck duality_identity(const GreenPair& direct,
                              const GreenPair& adjoint_pair);

// Both sides of the averaged reproduction identity: the adjoint solution
// for data (f, f_alpha, g) ball-averaged at the pole against the data
// paired with the columns.  Same-system checks use the assembled vectors
// (exact); a pair from a different system is integrated pointwise over
// its own mesh.
struct RepCheck {
  Vec2 lhs;
  Vec2 rhs;
  Vec2 defect;  // |lhs-rhs| / (|lhs|+|rhs|+scale), per component
  double scale = 0.0;
};
RepCheck representation_check(const StokesSystem& sys, const GreenPair& greens,
                              const StokesSystem::VecField& f,
                              const StokesSystem::MatField& f_alpha,
                              const StokesSystem::ScalField& g);

// Norm table along the dyadic radius ladder eps_j = eps0 * 2^{-j}.
struct EpsStudyOptions {
  int J = 5;              // ladder runs j = 0..J, J <= 6
  double eps0 = 0.0;      // 0: the domain certificate scale
  Vec2 probe;             // fixed evaluation point away from the pole
  double ball_R = 0.0;    // 0: eps0 (region scale for local/annulus norms)
  double s_local = 1.5;   // exponent below 2, measured on the probe ball
  double s_annulus = 3.0; // exponent above 2, measured off the pole ball
};

struct EpsStudyRow {
  double eps = 0.0;
  double weak_dg = 0.0;     // worst column, whole domain
  double weak_pi = 0.0;
  double local_ls = 0.0;    // |DG| on the ball at the probe
  double annulus_ls = 0.0;  // |DG| outside the closed pole ball
  Mat2 G_probe;
  Vec2 Pi_probe;
  Vec2 pressure_mean;
};

std::vector<EpsStudyRow> eps_sequence_study(const StokesSystem& sys, Vec2 y,
                                            const EpsStudyOptions& opt);

}  // namespace greenlab
