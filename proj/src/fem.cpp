#include "greenlab/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

// Scalar quadratic element on one triangle: vertex nodes carry
// l(2l - 1), midpoint nodes 4 l_i l_j.  Local nodes 0..2 are vertices,
// 3+k sits on the edge opposite vertex k.
struct P2Shape {
  double N[6];
  Vec2 G[6];
};

P2Shape p2_shape(const std::array<double, 3>& bary, const Vec2 gl[3]) {
  P2Shape s;
  for (int i = 0; i < 3; ++i) {
    s.N[i] = bary[i] * (2.0 * bary[i] - 1.0);
    s.G[i] = gl[i] * (4.0 * bary[i] - 1.0);
  }
  for (int k = 0; k < 3; ++k) {
    int i = (k + 1) % 3, j = (k + 2) % 3;
    s.N[3 + k] = 4.0 * bary[i] * bary[j];
    s.G[3 + k] = (gl[j] * bary[i] + gl[i] * bary[j]) * 4.0;
  }
  return s;
}

// Barycentric gradients, constant over the triangle.
void bary_gradients(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 gl[3], double& area) {
  double t = cross(p1 - p0, p2 - p0);
  area = 0.5 * t;
  gl[0] = perp(p2 - p1) / t;
  gl[1] = perp(p0 - p2) / t;
  gl[2] = perp(p1 - p0) / t;
}

std::array<double, 3> bary_coords(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 x) {
  double t = cross(p1 - p0, p2 - p0);
  double l1 = cross(x - p0, p2 - p0) / t;
  double l2 = cross(p1 - p0, x - p0) / t;
  return {1.0 - l1 - l2, l1, l2};
}

void local_nodes(const Mesh& mesh, int t, int out[6]) {
  const MeshTri& tr = mesh.tri(t);
  int nv = mesh.num_vertices();
  for (int k = 0; k < 3; ++k) {
    out[k] = tr.v[k];
    out[3 + k] = nv + tr.e[k];
  }
}

}  // namespace

// The two velocity-integral constraint columns touch every velocity dof,
// and factoring them along with the rest causes catastrophic fill-in
// (minutes instead of seconds at 30k unknowns).  So the factorization
// covers only the leading block K with two pinned dofs added to remove
// the constant-velocity kernel; the dense border is reduced exactly to a
// 4x4 system through cached border solves.
struct StokesSystem::Factor {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool ok = false;
  int n = 0;            // size of the factored block
  double sigma = 1.0;   // pin strength
  int pin[2] = {0, 1};  // pinned velocity dofs (both components, one node)
  Eigen::MatrixXd C;    // border columns, (n x 2)
  Eigen::MatrixXd Yw, Yc, Ywt, Yct;          // cached border solves
  Eigen::PartialPivLU<Eigen::Matrix4d> g4, g4t;  // reduced border systems

  // Solves [[K, C],[C^T, 0]] z = b (or its transpose) given that
  // lu factors Khat = K + sigma * sum e_pin e_pin^T.  Writing
  // u = Khat^{-1}(b1 + sigma W t - C s) with t = W^T u and closing the
  // system over (t, s) gives the cached 4x4.
  Eigen::VectorXd solve_bordered(const Eigen::VectorXd& b, bool adjoint) {
    const Eigen::MatrixXd& YW = adjoint ? Ywt : Yw;
    const Eigen::MatrixXd& YC = adjoint ? Yct : Yc;
    Eigen::VectorXd b1 = b.head(n);
    Eigen::Vector2d b2{b[n], b[n + 1]};
    Eigen::VectorXd u0 =
        adjoint ? Eigen::VectorXd(lu.transpose().solve(b1))
                : Eigen::VectorXd(lu.solve(b1));
    Eigen::Vector2d cu0 = C.transpose() * u0;
    Eigen::Vector2d wu0{u0[pin[0]], u0[pin[1]]};
    Eigen::Vector4d rhs;
    rhs << b2 - cu0, wu0;
    Eigen::Vector4d ts = adjoint ? g4t.solve(rhs) : g4.solve(rhs);
    Eigen::VectorXd z(b.size());
    z.head(n) = u0 + sigma * (YW * ts.head<2>()) - YC * ts.tail<2>();
    z[n] = ts[2];
    z[n + 1] = ts[3];
    return z;
  }
};

StokesSystem::StokesSystem(const Mesh& mesh, const PolygonalDomain& dom,
                           const CoefficientField& coeff, int quad_degree)
    : mesh_(&mesh), dom_(&dom), coeff_(coeff), quad_degree_(quad_degree) {
  if (quad_degree_ != 4 && quad_degree_ != 6)
    throw InvalidParameter("quadrature degree must be 4 or 6");
  n_scalar_ = mesh.num_vertices() + mesh.num_edges();
  assemble();
}

Vec2 StokesSystem::node_pos(int n) const {
  int nv = mesh_->num_vertices();
  if (n < nv) return mesh_->vertex(n);
  const MeshEdge& e = mesh_->edge(n - nv);
  return (mesh_->vertex(e.a) + mesh_->vertex(e.b)) * 0.5;
}

void StokesSystem::assemble() {
  const Mesh& mesh = *mesh_;
  int nu = n_velocity(), N = dim();
  const TriRule& rule = tri_rule(quad_degree_);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.num_triangles()) * rule.bary.size() *
               190);
  p2_integrals_ = Eigen::VectorXd::Zero(n_scalar_);

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const MeshTri& tr = mesh.tri(t);
    Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
         p2 = mesh.vertex(tr.v[2]);
    Vec2 gl[3];
    double area;
    bary_gradients(p0, p1, p2, gl, area);
    int g[6];
    local_nodes(mesh, t, g);

    for (size_t q = 0; q < rule.bary.size(); ++q) {
      const auto& b = rule.bary[q];
      double wq = rule.w[q] * area;
      Vec2 xq = p0 * b[0] + p1 * b[1] + p2 * b[2];
      P2Shape sh = p2_shape(b, gl);
      CoeffTensor A = coeff_.eval(xq);

      for (int m = 0; m < 6; ++m) {
        for (int i = 0; i < 2; ++i) {
          int row = 2 * g[m] + i;
          // coefficient block
          for (int n = 0; n < 6; ++n) {
            for (int j = 0; j < 2; ++j) {
              double v = 0.0;
              for (int a = 0; a < 2; ++a)
                for (int bb = 0; bb < 2; ++bb)
                  v += A(a, bb, i, j) * sh.G[m][a] * sh.G[n][bb];
              trip.emplace_back(row, 2 * g[n] + j, wq * v);
            }
          }
          // pressure coupling, mirrored so the saddle blocks are exact
          // transposes of each other
          for (int l = 0; l < 3; ++l) {
            double v = wq * b[l] * sh.G[m][i];
            trip.emplace_back(row, nu + tr.v[l], v);
            trip.emplace_back(nu + tr.v[l], row, v);
          }
          // velocity-integral multiplier columns
          double cv = wq * sh.N[m];
          trip.emplace_back(row, N - 2 + i, cv);
          trip.emplace_back(N - 2 + i, row, cv);
        }
        p2_integrals_[g[m]] += wq * sh.N[m];
      }
    }
  }

  M_.resize(N, N);
  M_.setFromTriplets(trip.begin(), trip.end());
  M_.makeCompressed();
  domain_area_ = p2_integrals_.sum();
}

Eigen::VectorXd StokesSystem::assemble_load(const VecField& f,
                                            const MatField& f_alpha,
                                            const ScalField& g,
                                            Vec2 mean_integral) const {
  const Mesh& mesh = *mesh_;
  int nu = n_velocity(), N = dim();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(N);
  const TriRule& rule = tri_rule(6);  // data fields may be smooth

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const MeshTri& tr = mesh.tri(t);
    Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
         p2 = mesh.vertex(tr.v[2]);
    Vec2 gl[3];
    double area;
    bary_gradients(p0, p1, p2, gl, area);
    int gd[6];
    local_nodes(mesh, t, gd);

    for (size_t q = 0; q < rule.bary.size(); ++q) {
      const auto& b = rule.bary[q];
      double wq = rule.w[q] * area;
      Vec2 xq = p0 * b[0] + p1 * b[1] + p2 * b[2];
      P2Shape sh = p2_shape(b, gl);

      Vec2 fv = f ? f(xq) : Vec2{0, 0};
      Mat2 fa = f_alpha ? f_alpha(xq) : Mat2{};
      double gv = g ? g(xq) : 0.0;

      for (int m = 0; m < 6; ++m)
        for (int i = 0; i < 2; ++i) {
          double v = -fv[i] * sh.N[m];
          for (int a = 0; a < 2; ++a) v += fa(a, i) * sh.G[m][a];
          F[2 * gd[m] + i] += wq * v;
        }
      if (g)
        for (int l = 0; l < 3; ++l) F[nu + tr.v[l]] += wq * gv * b[l];
    }
  }
  F[N - 2] = mean_integral.x;
  F[N - 1] = mean_integral.y;
  return F;
}

MollifiedDelta StokesSystem::mollified_info(Vec2 y, double eps) const {
  if (eps <= 0.0) throw InvalidParameter("averaging radius must be positive");
  if (!dom_->contains(y))
    throw InvalidParameter("averaging pole outside the closed domain");
  double cs = dom_->certificate_scale();
  if (cs > 0.0 && eps > cs)
    throw OutOfScale("averaging radius exceeds the certified scale");
  MollifiedDelta md;
  md.y = y;
  md.eps = eps;
  md.clipped_area = dom_->clipped_area(y, eps);
  md.domain_area = dom_->area();
  md.elements = resolution_count(y, eps);
  return md;
}

int StokesSystem::resolution_count(Vec2 y, double eps) const {
  if (eps <= 0.0) throw InvalidParameter("averaging radius must be positive");
  int count = 0;
  for (int t : mesh_->tris_near(y, eps)) {
    const MeshTri& tr = mesh_->tri(t);
    WeightedPoints wp =
        triangle_disk_quadrature(mesh_->vertex(tr.v[0]), mesh_->vertex(tr.v[1]),
                                 mesh_->vertex(tr.v[2]), y, eps, 2);
    if (wp.area > 1e-14 * eps * eps) ++count;
  }
  return count;
}

Eigen::VectorXd StokesSystem::mollified_load(Vec2 y, double eps, int k) const {
  if (k != 0 && k != 1) throw InvalidParameter("component must be 0 or 1");
  mollified_info(y, eps);  // runs the precondition checks

  Eigen::VectorXd raw = Eigen::VectorXd::Zero(n_scalar_);
  double local_area = 0.0;
  for (int t : mesh_->tris_near(y, eps)) {
    const MeshTri& tr = mesh_->tri(t);
    Vec2 p0 = mesh_->vertex(tr.v[0]), p1 = mesh_->vertex(tr.v[1]),
         p2 = mesh_->vertex(tr.v[2]);
    WeightedPoints wp = triangle_disk_quadrature(p0, p1, p2, y, eps, 4);
    if (wp.area <= 1e-14 * eps * eps) continue;
    Vec2 gl[3];
    double area;
    bary_gradients(p0, p1, p2, gl, area);
    int gd[6];
    local_nodes(*mesh_, t, gd);
    for (size_t q = 0; q < wp.x.size(); ++q) {
      auto b = bary_coords(p0, p1, p2, wp.x[q]);
      P2Shape sh = p2_shape(b, gl);
      for (int m = 0; m < 6; ++m) raw[gd[m]] += wp.w[q] * sh.N[m];
      local_area += wp.w[q];
    }
  }
  if (local_area <= 0.0)
    throw InvalidParameter("averaging region has no overlap with the mesh");

  Eigen::VectorXd F = Eigen::VectorXd::Zero(dim());
  for (int n = 0; n < n_scalar_; ++n)
    F[2 * n + k] = raw[n] / local_area - p2_integrals_[n] / domain_area_;
  return F;
}

void StokesSystem::ensure_factorized() const {
  if (factor_) return;
  auto f = std::make_shared<Factor>();
  int n = dim() - 2;
  f->n = n;

  Eigen::SparseMatrix<double> K = M_.topLeftCorner(n, n);
  f->C = Eigen::MatrixXd::Zero(n, 2);
  for (int j = 0; j < 2; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M_, n + j); it; ++it)
      if (it.row() < n) f->C(it.row(), j) = it.value();

  Eigen::VectorXd kd = K.diagonal();
  double base = kd.head(n_velocity()).cwiseAbs().mean();
  if (!(base > 0.0)) base = 1.0;

  // Pin one node's two velocity components; if the pinned block still
  // fails to factor, move the pin and stiffen it.
  int nodes[3] = {0, n_scalar_ / 3, (2 * n_scalar_) / 3};
  for (int attempt = 0; attempt < 3 && !f->ok; ++attempt) {
    f->sigma = base * (1 << attempt);
    f->pin[0] = 2 * nodes[attempt];
    f->pin[1] = 2 * nodes[attempt] + 1;
    Eigen::SparseMatrix<double> P(n, n);
    P.insert(f->pin[0], f->pin[0]) = f->sigma;
    P.insert(f->pin[1], f->pin[1]) = f->sigma;
    P.makeCompressed();
    Eigen::SparseMatrix<double> Khat = K + P;
    f->lu.analyzePattern(Khat);
    f->lu.factorize(Khat);
    f->ok = (f->lu.info() == Eigen::Success);
  }

  if (f->ok) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, 2);
    W(f->pin[0], 0) = 1.0;
    W(f->pin[1], 1) = 1.0;
    f->Yw = f->lu.solve(W);
    f->Yc = f->lu.solve(f->C);
    f->Ywt = f->lu.transpose().solve(W);
    f->Yct = f->lu.transpose().solve(f->C);
    auto reduce = [&](const Eigen::MatrixXd& YW, const Eigen::MatrixXd& YC) {
      Eigen::Matrix2d cyw = f->C.transpose() * YW;
      Eigen::Matrix2d cyc = f->C.transpose() * YC;
      Eigen::Matrix2d wyw, wyc;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          wyw(r, c) = YW(f->pin[r], c);
          wyc(r, c) = YC(f->pin[r], c);
        }
      Eigen::Matrix4d G;
      G.topLeftCorner<2, 2>() = f->sigma * cyw;
      G.topRightCorner<2, 2>() = -cyc;
      G.bottomLeftCorner<2, 2>() =
          Eigen::Matrix2d::Identity() - f->sigma * wyw;
      G.bottomRightCorner<2, 2>() = wyc;
      return G;
    };
    f->g4 = Eigen::PartialPivLU<Eigen::Matrix4d>(reduce(f->Yw, f->Yc));
    f->g4t = Eigen::PartialPivLU<Eigen::Matrix4d>(reduce(f->Ywt, f->Yct));
  }
  factor_ = f;
}

StokesSystem::Solution StokesSystem::run_solve(const Eigen::VectorXd& load,
                                               bool adjoint) const {
  if (load.size() != dim()) throw InvalidParameter("load size mismatch");

  int nu = n_velocity();
  // Constant velocities are in the kernel of every operator row, so a
  // solvable load must annihilate them.
  double scale = load.head(nu).cwiseAbs().sum();
  if (scale > 0.0) {
    for (int c = 0; c < 2; ++c) {
      double defect = 0.0;
      for (int n = 0; n < n_scalar_; ++n) defect += load[2 * n + c];
      if (std::abs(defect) > 1e-8 * scale)
        throw CompatibilityError(
            "load does not annihilate constant velocities (relative defect " +
            std::to_string(std::abs(defect) / scale) + ")");
    }
  }

  ensure_factorized();
  double lnorm = load.norm();
  if (lnorm == 0.0) return Solution{Eigen::VectorXd::Zero(dim()), this, 0.0, 0.0};

  auto residual = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(
        (adjoint ? Eigen::VectorXd(M_.transpose() * v)
                 : Eigen::VectorXd(M_ * v)) -
        load);
  };
  Eigen::VectorXd z;
  double rel = std::numeric_limits<double>::infinity();
  if (factor_->ok) {
    z = factor_->solve_bordered(load, adjoint);
    rel = residual(z).norm() / lnorm;
    if (rel > 1e-12 && z.allFinite()) {
      Eigen::VectorXd dz = factor_->solve_bordered(-residual(z), adjoint);
      Eigen::VectorXd z2 = z + dz;
      double rel2 = residual(z2).norm() / lnorm;
      if (rel2 < rel) {
        z = std::move(z2);
        rel = rel2;
      }
    }
  }
  if (!(rel <= 1e-9)) {
    Eigen::SparseMatrix<double> Muse =
        adjoint ? Eigen::SparseMatrix<double>(M_.transpose()) : M_;
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>
        it;
    it.setTolerance(1e-13);
    it.setMaxIterations(20000);
    it.compute(Muse);
    if (factor_->ok && z.size() == load.size() && z.allFinite())
      z = it.solveWithGuess(load, z);
    else
      z = it.solve(load);
    rel = (Muse * z - load).norm() / lnorm;
    if (!(rel <= 1e-9))
      throw SolveFailure("relative residual " + std::to_string(rel) +
                         " exceeds 1e-9 after direct and iterative attempts");
  }
  return Solution{std::move(z), this, rel, 0.0};
}

StokesSystem::Solution StokesSystem::solve(const Eigen::VectorXd& load) const {
  return run_solve(load, false);
}

StokesSystem::Solution StokesSystem::solve_adjoint(
    const Eigen::VectorXd& load) const {
  return run_solve(load, true);
}

StokesSystem::Solution StokesSystem::solve_conormal(const VecField& f,
                                                    const MatField& f_alpha,
                                                    const ScalField& g) const {
  Solution sol = solve(assemble_load(f, f_alpha, g, {0.0, 0.0}));

  // data norms for the logged energy ratio
  const Mesh& mesh = *mesh_;
  const TriRule& rule = tri_rule(6);
  double nf2 = 0.0, nfa2 = 0.0, ng2 = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const MeshTri& tr = mesh.tri(t);
    Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
         p2 = mesh.vertex(tr.v[2]);
    double area = mesh.tri_area(t);
    for (size_t q = 0; q < rule.bary.size(); ++q) {
      const auto& b = rule.bary[q];
      double wq = rule.w[q] * area;
      Vec2 xq = p0 * b[0] + p1 * b[1] + p2 * b[2];
      if (f) nf2 += wq * norm2(f(xq));
      if (f_alpha) {
        double fr = f_alpha(xq).frobenius();
        nfa2 += wq * fr * fr;
      }
      if (g) ng2 += wq * g(xq) * g(xq);
    }
  }
  double data = std::sqrt(nf2) + std::sqrt(nfa2) + std::sqrt(ng2);
  if (data > 0.0)
    sol.energy_constant =
        (solution_grad_lq(sol, 2.0) + solution_pressure_lq(sol, 2.0)) / data;
  return sol;
}

Vec2 StokesSystem::velocity_integral(const Solution& sol) const {
  Vec2 m{0, 0};
  for (int n = 0; n < n_scalar_; ++n) {
    m.x += p2_integrals_[n] * sol.z[2 * n];
    m.y += p2_integrals_[n] * sol.z[2 * n + 1];
  }
  return m;
}

Vec2 StokesSystem::Solution::multiplier() const {
  return {z[z.size() - 2], z[z.size() - 1]};
}

Vec2 StokesSystem::Solution::velocity(Vec2 x) const {
  const Mesh& mesh = sys->mesh();
  int t = mesh.locate(x);
  if (t < 0) throw InvalidParameter("evaluation point outside the mesh");
  const MeshTri& tr = mesh.tri(t);
  Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
       p2 = mesh.vertex(tr.v[2]);
  Vec2 gl[3];
  double area;
  bary_gradients(p0, p1, p2, gl, area);
  P2Shape sh = p2_shape(bary_coords(p0, p1, p2, x), gl);
  int gd[6];
  local_nodes(mesh, t, gd);
  Vec2 u{0, 0};
  for (int m = 0; m < 6; ++m) {
    u.x += z[2 * gd[m]] * sh.N[m];
    u.y += z[2 * gd[m] + 1] * sh.N[m];
  }
  return u;
}

Mat2 StokesSystem::Solution::velocity_gradient(Vec2 x) const {
  const Mesh& mesh = sys->mesh();
  int t = mesh.locate(x);
  if (t < 0) throw InvalidParameter("evaluation point outside the mesh");
  const MeshTri& tr = mesh.tri(t);
  Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
       p2 = mesh.vertex(tr.v[2]);
  Vec2 gl[3];
  double area;
  bary_gradients(p0, p1, p2, gl, area);
  P2Shape sh = p2_shape(bary_coords(p0, p1, p2, x), gl);
  int gd[6];
  local_nodes(mesh, t, gd);
  Mat2 g;
  for (int m = 0; m < 6; ++m)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) g(i, j) += z[2 * gd[m] + i] * sh.G[m][j];
  return g;
}

double StokesSystem::Solution::pressure(Vec2 x) const {
  const Mesh& mesh = sys->mesh();
  int t = mesh.locate(x);
  if (t < 0) throw InvalidParameter("evaluation point outside the mesh");
  const MeshTri& tr = mesh.tri(t);
  auto b = bary_coords(mesh.vertex(tr.v[0]), mesh.vertex(tr.v[1]),
                       mesh.vertex(tr.v[2]), x);
  int nu = sys->n_velocity();
  return z[nu + tr.v[0]] * b[0] + z[nu + tr.v[1]] * b[1] +
         z[nu + tr.v[2]] * b[2];
}

double StokesSystem::matrix_norm_probe(int iters) const {
  std::mt19937 rng(4321);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = nd(rng);
  v.normalize();
  double s = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd w = M_ * v;
    s = w.norm();
    v = M_.transpose() * w;
    v.normalize();
  }
  return s;
}

double StokesSystem::inf_sup_probe(int iters) const {
  const Mesh& mesh = *mesh_;
  int nu = n_velocity(), np = n_pressure();

  // linear pressure mass matrix
  std::vector<Eigen::Triplet<double>> trip;
  const TriRule& rule = tri_rule(2);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const MeshTri& tr = mesh.tri(t);
    double area = mesh.tri_area(t);
    for (size_t q = 0; q < rule.bary.size(); ++q) {
      double wq = rule.w[q] * area;
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m)
          trip.emplace_back(tr.v[l], tr.v[m],
                            wq * rule.bary[q][l] * rule.bary[q][m]);
    }
  }
  Eigen::SparseMatrix<double> Mp(np, np);
  Mp.setFromTriplets(trip.begin(), trip.end());

  std::mt19937 rng(97531);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(np);
  for (int i = 0; i < np; ++i) q[i] = nd(rng);
  q /= std::sqrt(q.dot(Mp * q));

  // Inverse iteration on the pressure Schur complement: the dominant
  // eigenvalue of q -> -(pressure part of M^{-1} [0, Mp q, 0]) in the mass
  // inner product is 1/beta^2.
  double mu = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(dim());
    load.segment(nu, np) = Mp * q;
    Solution sol = run_solve(load, false);
    Eigen::VectorXd pn = -sol.z.segment(nu, np);
    mu = std::sqrt(std::abs(pn.dot(Mp * pn)));
    if (mu <= 0.0) throw SolveFailure("stability probe collapsed");
    q = pn / mu;
  }
  return 1.0 / std::sqrt(mu);
}

namespace {

// Shared element sweep for the field norms below.
template <typename F>
void sweep_quadrature(const Mesh& mesh, const TriRule& rule, F&& per_point) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const MeshTri& tr = mesh.tri(t);
    Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
         p2 = mesh.vertex(tr.v[2]);
    Vec2 gl[3];
    double area;
    bary_gradients(p0, p1, p2, gl, area);
    int gd[6];
    local_nodes(mesh, t, gd);
    for (size_t q = 0; q < rule.bary.size(); ++q) {
      const auto& b = rule.bary[q];
      Vec2 xq = p0 * b[0] + p1 * b[1] + p2 * b[2];
      P2Shape sh = p2_shape(b, gl);
      per_point(t, tr, gd, sh, xq, rule.w[q] * area, b);
    }
  }
}

}  // namespace

double solution_grad_lq(const StokesSystem::Solution& sol, double q) {
  if (q < 1.0) throw InvalidParameter("exponent must be >= 1");
  double acc = 0.0;
  sweep_quadrature(sol.sys->mesh(), tri_rule(6),
                   [&](int, const MeshTri&, const int gd[6], const P2Shape& sh,
                       Vec2, double wq, const std::array<double, 3>&) {
                     Mat2 g;
                     for (int m = 0; m < 6; ++m)
                       for (int i = 0; i < 2; ++i)
                         for (int j = 0; j < 2; ++j)
                           g(i, j) += sol.z[2 * gd[m] + i] * sh.G[m][j];
                     acc += wq * std::pow(g.frobenius(), q);
                   });
  return std::pow(acc, 1.0 / q);
}

double solution_pressure_lq(const StokesSystem::Solution& sol, double q) {
  if (q < 1.0) throw InvalidParameter("exponent must be >= 1");
  int nu = sol.sys->n_velocity();
  double acc = 0.0;
  sweep_quadrature(sol.sys->mesh(), tri_rule(6),
                   [&](int, const MeshTri& tr, const int[6], const P2Shape&,
                       Vec2, double wq, const std::array<double, 3>& b) {
                     double ph = sol.z[nu + tr.v[0]] * b[0] +
                                 sol.z[nu + tr.v[1]] * b[1] +
                                 sol.z[nu + tr.v[2]] * b[2];
                     acc += wq * std::pow(std::abs(ph), q);
                   });
  return std::pow(acc, 1.0 / q);
}

double solution_velocity_l2(const StokesSystem::Solution& sol) {
  double acc = 0.0;
  sweep_quadrature(sol.sys->mesh(), tri_rule(6),
                   [&](int, const MeshTri&, const int gd[6], const P2Shape& sh,
                       Vec2, double wq, const std::array<double, 3>&) {
                     Vec2 u{0, 0};
                     for (int m = 0; m < 6; ++m) {
                       u.x += sol.z[2 * gd[m]] * sh.N[m];
                       u.y += sol.z[2 * gd[m] + 1] * sh.N[m];
                     }
                     acc += wq * norm2(u);
                   });
  return std::sqrt(acc);
}

double solution_div_l2(const StokesSystem::Solution& sol) {
  double acc = 0.0;
  sweep_quadrature(sol.sys->mesh(), tri_rule(6),
                   [&](int, const MeshTri&, const int gd[6], const P2Shape& sh,
                       Vec2, double wq, const std::array<double, 3>&) {
                     double d = 0.0;
                     for (int m = 0; m < 6; ++m) {
                       d += sol.z[2 * gd[m]] * sh.G[m][0];
                       d += sol.z[2 * gd[m] + 1] * sh.G[m][1];
                     }
                     acc += wq * d * d;
                   });
  return std::sqrt(acc);
}

double velocity_l2_error(const StokesSystem::Solution& sol,
                         const StokesSystem::VecField& exact) {
  double acc = 0.0;
  sweep_quadrature(sol.sys->mesh(), tri_rule(6),
                   [&](int, const MeshTri&, const int gd[6], const P2Shape& sh,
                       Vec2 xq, double wq, const std::array<double, 3>&) {
                     Vec2 u{0, 0};
                     for (int m = 0; m < 6; ++m) {
                       u.x += sol.z[2 * gd[m]] * sh.N[m];
                       u.y += sol.z[2 * gd[m] + 1] * sh.N[m];
                     }
                     acc += wq * norm2(u - exact(xq));
                   });
  return std::sqrt(acc);
}

double pressure_l2_error(const StokesSystem::Solution& sol,
                         const StokesSystem::ScalField& exact) {
  int nu = sol.sys->n_velocity();
  double acc = 0.0;
  sweep_quadrature(sol.sys->mesh(), tri_rule(6),
                   [&](int, const MeshTri& tr, const int[6], const P2Shape&,
                       Vec2 xq, double wq, const std::array<double, 3>& b) {
                     double ph = sol.z[nu + tr.v[0]] * b[0] +
                                 sol.z[nu + tr.v[1]] * b[1] +
                                 sol.z[nu + tr.v[2]] * b[2];
                     double e = ph - exact(xq);
                     acc += wq * e * e;
                   });
  return std::sqrt(acc);
}

std::vector<SolvabilityPoint> operator_norm_probe(
    const PolygonalDomain& dom, const CoefficientField& coeff,
    const std::vector<double>& hs, double q, int ensemble, unsigned seed) {
  if (q < 1.0) throw InvalidParameter("exponent must be >= 1");
  if (ensemble < 1) throw InvalidParameter("ensemble must be positive");

  std::vector<SolvabilityPoint> out;
  for (double h : hs) {
    MeshOptions opt;
    opt.h = h;
    Mesh mesh = Mesh::build(dom, opt);
    StokesSystem sys(mesh, dom, coeff);

    // same seed per mesh size: identical data across the refinement study
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int e = 0; e < ensemble; ++e) {
      double c[2][2][4], cg[4];
      for (auto& row : c)
        for (auto& cell : row)
          for (double& v : cell) v = nd(rng);
      for (double& v : cg) v = nd(rng);

      auto basis = [](Vec2 x, int m) {
        switch (m) {
          case 0: return 1.0;
          case 1: return std::sin(M_PI * x.x) * std::cos(M_PI * x.y);
          case 2: return std::cos(M_PI * x.x) * std::sin(M_PI * x.y);
          default: return std::sin(2 * M_PI * x.x) * std::sin(2 * M_PI * x.y);
        }
      };
      StokesSystem::MatField fa = [&, c](Vec2 x) {
        Mat2 m;
        for (int a = 0; a < 2; ++a)
          for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 4; ++k) m(a, i) += c[a][i][k] * basis(x, k);
        return m;
      };
      StokesSystem::ScalField g = [&, cg](Vec2 x) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += cg[k] * basis(x, k);
        return v;
      };

      StokesSystem::Solution sol = sys.solve(sys.assemble_load(nullptr, fa, g, {0, 0}));

      double nfa = 0.0, ng = 0.0;
      const TriRule& rule = tri_rule(6);
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        const MeshTri& tr = mesh.tri(t);
        double area = mesh.tri_area(t);
        Vec2 p0 = mesh.vertex(tr.v[0]), p1 = mesh.vertex(tr.v[1]),
             p2 = mesh.vertex(tr.v[2]);
        for (size_t qq = 0; qq < rule.bary.size(); ++qq) {
          const auto& b = rule.bary[qq];
          double wq = rule.w[qq] * area;
          Vec2 xq = p0 * b[0] + p1 * b[1] + p2 * b[2];
          nfa += wq * std::pow(fa(xq).frobenius(), q);
          ng += wq * std::pow(std::abs(g(xq)), q);
        }
      }
      double data = std::pow(nfa, 1.0 / q) + std::pow(ng, 1.0 / q);
      double lhs = solution_grad_lq(sol, q) + solution_pressure_lq(sol, q);
      if (data > 0.0) worst = std::max(worst, lhs / data);
    }
    out.push_back({h, worst});
  }
  return out;
}

}  // namespace greenlab
