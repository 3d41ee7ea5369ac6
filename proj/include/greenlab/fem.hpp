#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <vector>

#include "greenlab/coefficients.hpp"
#include "greenlab/mesh.hpp"
#include "greenlab/polygon.hpp"
#include "greenlab/vec2.hpp"

namespace greenlab {

// Mean-zero averaging bump: -(1/|W|) on W = B_eps(y) ∩ Ω plus 1/|Ω|
// everywhere, so it integrates to zero by construction.
struct MollifiedDelta {
  Vec2 y;
  double eps = 0.0;
  double clipped_area = 0.0;  // |W|, exact polygon-disk value
  double domain_area = 0.0;
  int elements = 0;  // mesh triangles with positive-area overlap with W
};

// Quadratic velocity / linear pressure saddle-point discretization of the
// divergence-form Stokes system with natural (conormal) boundary
// conditions.
//
// Unknowns: z = (u, p, s) where u has two components per scalar node
// (vertices then edge midpoints), p is one per vertex, and s is the pair
// of multipliers removing the only kernel (constant velocities) by fixing
// the velocity integral.
//
// Rows: velocity tests phi get
//   sum_ab int A_ab D_b u . D_a phi + int p div(phi) + s-coupling,
// pressure tests q get int q div(u), and the last two rows prescribe
// int u.  The pressure carries no constraint: with natural boundary
// conditions constants do not pair to zero against div(phi), so the
// pressure is already unique.
class StokesSystem {
public:
  StokesSystem(const Mesh& mesh, const PolygonalDomain& dom,
               const CoefficientField& coeff, int quad_degree = 4);

  int n_scalar() const { return n_scalar_; }  // scalar quadratic nodes
  int n_velocity() const { return 2 * n_scalar_; }
  int n_pressure() const { return mesh_->num_vertices(); }
  int dim() const { return n_velocity() + n_pressure() + 2; }
  const Mesh& mesh() const { return *mesh_; }
  const PolygonalDomain& domain() const { return *dom_; }
  const CoefficientField& coefficients() const { return coeff_; }
  const Eigen::SparseMatrix<double>& matrix() const { return M_; }
  double domain_area() const { return domain_area_; }
  Vec2 node_pos(int n) const;

  using VecField = std::function<Vec2(Vec2)>;
  using MatField = std::function<Mat2(Vec2)>;  // row a = the a-th flux slot
  using ScalField = std::function<double(Vec2)>;

  // Right-hand side for data (f, f_a, g) and prescribed velocity integral.
  // Null fields are treated as zero.
  Eigen::VectorXd assemble_load(const VecField& f, const MatField& f_alpha,
                                const ScalField& g, Vec2 mean_integral) const;

  // Column load of the approximated Green function: velocity tests get the
  // mean over B_eps(y) ∩ Ω of component k minus the global mean.  Each
  // overlapped triangle is clipped exactly against the disk, so arbitrarily
  // small eps never undersamples; the load annihilates constants to
  // rounding.  Requires y in the closed domain and, when the domain
  // carries a certificate, eps within its scale.
  Eigen::VectorXd mollified_load(Vec2 y, double eps, int k) const;
  MollifiedDelta mollified_info(Vec2 y, double eps) const;
  // Triangles with positive-area overlap with B_eps(y) ∩ Ω.
  int resolution_count(Vec2 y, double eps) const;

  struct Solution {
    Eigen::VectorXd z;
    const StokesSystem* sys = nullptr;
    double residual = 0.0;         // relative algebraic residual
    double energy_constant = 0.0;  // (|Du|+|p|)/(data norms), solve_conormal only
    Vec2 multiplier() const;
    Vec2 velocity(Vec2 x) const;
    Mat2 velocity_gradient(Vec2 x) const;  // (i, j) = d_j u^i
    double pressure(Vec2 x) const;
  };

  // Factorizes once; both orientations reuse the factorization.  Throws
  // SolveFailure when the relative residual stays above 1e-9 and
  // CompatibilityError when the load pairs with constant velocities
  // (relative defect above 1e-8: such data is rejected, not projected).
  Solution solve(const Eigen::VectorXd& load) const;
  Solution solve_adjoint(const Eigen::VectorXd& load) const;

  // Data-level entry point: mean-zero velocity enforced, energy constant
  // (|Du|_2 + |p|_2) / (|f|_2 + |f_a|_2 + |g|_2) recorded on the result.
  Solution solve_conormal(const VecField& f, const MatField& f_alpha,
                          const ScalField& g) const;

  // Exact integral of the velocity components of a coefficient vector.
  Vec2 velocity_integral(const Solution& sol) const;

  // Largest singular value estimate of the system matrix (power iteration,
  // fixed seed) - a conditioning diagnostic, not a solvability constant.
  double matrix_norm_probe(int iters = 30) const;
  // Discrete pressure stability: smallest generalized singular value of
  // the divergence coupling against the pressure mass, via inverse power
  // iteration through full saddle solves.
  double inf_sup_probe(int iters = 40) const;

private:
  const Mesh* mesh_;
  const PolygonalDomain* dom_;
  CoefficientField coeff_;
  int quad_degree_;
  int n_scalar_;
  Eigen::SparseMatrix<double> M_;
  Eigen::VectorXd p2_integrals_;  // integral of each scalar basis function
  double domain_area_ = 0.0;

  struct Factor;
  mutable std::shared_ptr<Factor> factor_;
  void assemble();
  void ensure_factorized() const;
  Solution run_solve(const Eigen::VectorXd& load, bool adjoint) const;
};

// Whole-domain norms of solution fields, integrated element-wise with a
// degree-6 rule (gradients come from the exact quadratic basis gradient).
double solution_grad_lq(const StokesSystem::Solution& sol, double q);
double solution_pressure_lq(const StokesSystem::Solution& sol, double q);
double solution_velocity_l2(const StokesSystem::Solution& sol);
double solution_div_l2(const StokesSystem::Solution& sol);

// Errors against a reference field (for convergence studies).
double velocity_l2_error(const StokesSystem::Solution& sol,
                         const StokesSystem::VecField& exact);
double pressure_l2_error(const StokesSystem::Solution& sol,
                         const StokesSystem::ScalField& exact);

// Measured solvability constant sup (|Du|_q + |p|_q)/(|f_a|_q + |g|_q)
// over a seeded ensemble of smooth random data, one entry per mesh size.
// The interesting property is stability under refinement, not the value.
struct SolvabilityPoint {
  double h = 0.0;
  double constant = 0.0;
};
std::vector<SolvabilityPoint> operator_norm_probe(
    const PolygonalDomain& dom, const CoefficientField& coeff,
    const std::vector<double>& hs, double q, int ensemble, unsigned seed);

}  // namespace greenlab
