#include "greenlab/green.hpp"

#include <cmath>
#include <cstdio>

#include "greenlab/errors.hpp"

namespace greenlab {

Mat2 GreenPair::velocity(Vec2 x) const {
  Mat2 v;
  for (int k = 0; k < 2; ++k) {
    Vec2 u = col[k].sol.velocity(x);
    v(0, k) = u.x;
    v(1, k) = u.y;
  }
  return v;
}

Vec2 GreenPair::pressure(Vec2 x) const {
  return {col[0].sol.pressure(x), col[1].sol.pressure(x)};
}

namespace {

// Integral of each linear vertex basis function: area/3 per incident
// triangle.
Eigen::VectorXd p1_integrals(const Mesh& mesh) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double third = mesh.tri_area(t) / 3.0;
    for (int i = 0; i < 3; ++i) v[mesh.tri(t).v[i]] += third;
  }
  return v;
}

}  // namespace

GreenPair approx_green(const StokesSystem& sys, Vec2 y, double eps,
                       bool adjoint, const std::vector<double>& apriori_q) {
  int overlap = sys.resolution_count(y, eps);
  if (overlap < 8)
    throw ResolutionError("approx_green: only " + std::to_string(overlap) +
                          " elements overlap the averaging ball; need 8");

  Eigen::VectorXd p1 = p1_integrals(sys.mesh());
  int nu = sys.n_velocity(), np = sys.n_pressure();

  GreenPair pair;
  pair.sys = &sys;
  for (int k = 0; k < 2; ++k) {
    GreenColumn& c = pair.col[k];
    c.y = y;
    c.eps = eps;
    c.k = k;
    c.adjoint = adjoint;
    c.load = sys.mollified_load(y, eps, k);
    c.sol = adjoint ? sys.solve_adjoint(c.load) : sys.solve(c.load);

    c.velocity_mean = sys.velocity_integral(c.sol) / sys.domain_area();
    const Eigen::SparseMatrix<double>& M = sys.matrix();
    Eigen::VectorXd r = adjoint ? Eigen::VectorXd(M.transpose() * c.sol.z)
                                : Eigen::VectorXd(M * c.sol.z);
    c.divergence = r.segment(nu, np).lpNorm<Eigen::Infinity>();
    c.pressure_mean =
        p1.dot(c.sol.z.segment(nu, np)) / sys.domain_area();

    for (double q : apriori_q) {
      double v = solution_grad_lq(c.sol, q) + solution_pressure_lq(c.sol, q);
      c.apriori.emplace_back(q, v * std::pow(eps, 1.0 - 2.0 / q));
    }
  }
  return pair;
}

GreenTable sample_table(const GreenPair& pair, const std::vector<Vec2>& probes) {
  GreenTable t;
  t.y = pair.pole();
  t.eps = pair.eps();
  for (Vec2 p : probes) {
    if (dist(p, t.y) < 0.5 * t.eps)
      throw InvalidParameter(
          "sample_table: evaluation point closer than eps/2 to the pole");
    t.x.push_back(p);
    t.G.push_back(pair.velocity(p));
    t.Pi.push_back(pair.pressure(p));
  }
  return t;
}

std::string to_csv(const GreenTable& table) {
  std::string out = "x1,x2,y1,y2,eps,G11,G12,G21,G22,Pi1,Pi2\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    out += buf;
  };
  for (std::size_t i = 0; i < table.x.size(); ++i) {
    put(table.x[i].x, ',');
    put(table.x[i].y, ',');
    put(table.y.x, ',');
    put(table.y.y, ',');
    put(table.eps, ',');
    const Mat2& G = table.G[i];
    put(G(0, 0), ',');
    put(G(0, 1), ',');
    put(G(1, 0), ',');
    put(G(1, 1), ',');
    put(table.Pi[i].x, ',');
    put(table.Pi[i].y, '\n');
  }
  return out;
}

std::vector<Vec2> probe_points(const PolygonalDomain& dom, Vec2 y, double eps,
                               double K) {
  if (!(eps > 0.0) || !(K > 0.0))
    throw InvalidParameter("probe_points: eps and K must be positive");
  std::vector<Vec2> pts;
  for (double r = 2.0 * eps; r <= K / 4.0; r *= 2.0)
    for (int d = 0; d < 8; ++d) {
      Vec2 p = y + r * dir(2.0 * M_PI * d / 8.0);
      if (dom.contains_strict(p)) pts.push_back(p);
    }
  return pts;
}

DualityCheck duality_identity(const GreenPair& direct,
                              const GreenPair& adjoint_pair) {
  if (direct.adjoint() || !adjoint_pair.adjoint())
    throw InvalidPairing("duality_identity: need one column pair per orientation");
  if (!direct.sys || !adjoint_pair.sys ||
      &direct.sys->mesh() != &adjoint_pair.sys->mesh())
    throw InvalidPairing("duality_identity: column pairs live on different meshes");
  if (!(dist(direct.pole(), adjoint_pair.pole()) > 0.0))
    throw InvalidPairing("duality_identity: poles coincide");

  DualityCheck out;
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) {
      double a = adjoint_pair.col[l].load.dot(direct.col[k].sol.z);
      double b = direct.col[k].load.dot(adjoint_pair.col[l].sol.z);
      out.defect(l, k) = a - b;
      out.scale = std::max({out.scale, std::abs(a), std::abs(b)});
    }
  return out;
}

RepCheck representation_check(const StokesSystem& sys, const GreenPair& greens,
                              const StokesSystem::VecField& f,
                              const StokesSystem::MatField& f_alpha,
                              const StokesSystem::ScalField& g) {
  Eigen::VectorXd data = sys.assemble_load(f, f_alpha, g, {0.0, 0.0});
  StokesSystem::Solution u = sys.solve_adjoint(data);

  RepCheck out;
  out.scale =
      solution_velocity_l2(u) / std::sqrt(sys.domain_area());

  for (int k = 0; k < 2; ++k) {
    double lhs, rhs;
    if (greens.sys == &sys) {
      lhs = greens.col[k].load.dot(u.z);
      rhs = data.dot(greens.col[k].sol.z);
    } else {
      // averaged left side on the solution's own mesh
      Region ball = Region::ball(greens.pole(), greens.eps());
      WeightedPoints bp = region_quadrature(sys.mesh(), ball);
      double acc = 0.0;
      for (std::size_t i = 0; i < bp.x.size(); ++i)
        acc += bp.w[i] * u.velocity(bp.x[i])[k];
      lhs = acc / bp.area;

      // data paired with the columns on the columns' mesh
      WeightedPoints wp =
          region_quadrature(greens.sys->mesh(), Region::whole());
      double s = 0.0;
      for (std::size_t i = 0; i < wp.x.size(); ++i) {
        Vec2 p = wp.x[i];
        Vec2 gv = greens.col[k].sol.velocity(p);
        Mat2 gd = greens.col[k].sol.velocity_gradient(p);
        double term = 0.0;
        if (f) {
          Vec2 fv = f(p);
          term -= fv.x * gv.x + fv.y * gv.y;
        }
        if (f_alpha) {
          Mat2 fa = f_alpha(p);
          for (int a = 0; a < 2; ++a)
            for (int l = 0; l < 2; ++l) term += fa(a, l) * gd(l, a);
        }
        if (g) term += g(p) * greens.col[k].sol.pressure(p);
        s += wp.w[i] * term;
      }
      rhs = s;
    }
    (k == 0 ? out.lhs.x : out.lhs.y) = lhs;
    (k == 0 ? out.rhs.x : out.rhs.y) = rhs;
    double num = std::abs(lhs - rhs);
    double den = std::abs(lhs) + std::abs(rhs) + out.scale;
    (k == 0 ? out.defect.x : out.defect.y) = num == 0.0 ? 0.0 : num / den;
  }
  return out;
}

std::vector<EpsStudyRow> eps_sequence_study(const StokesSystem& sys, Vec2 y,
                                            const EpsStudyOptions& opt) {
  if (opt.J < 0 || opt.J > 6)
    throw InvalidParameter("eps_sequence_study: ladder depth must lie in 0..6");
  double eps0 = opt.eps0 > 0.0 ? opt.eps0
                               : sys.domain().certificate_scale();
  if (!(eps0 > 0.0))
    throw InvalidParameter("eps_sequence_study: no base radius available");
  double R = opt.ball_R > 0.0 ? opt.ball_R : eps0;

  std::vector<EpsStudyRow> rows;
  for (int j = 0; j <= opt.J; ++j) {
    double eps = eps0 * std::pow(2.0, -j);
    GreenPair pair = approx_green(sys, y, eps, false);

    EpsStudyRow row;
    row.eps = eps;
    for (int k = 0; k < 2; ++k) {
      const StokesSystem::Solution& sol = pair.col[k].sol;
      auto dg = [&](Vec2 p) { return sol.velocity_gradient(p).frobenius(); };
      auto pi = [&](Vec2 p) { return sol.pressure(p); };
      row.weak_dg =
          std::max(row.weak_dg, weak_l2(sys.mesh(), Region::whole(), dg).value);
      row.weak_pi =
          std::max(row.weak_pi, weak_l2(sys.mesh(), Region::whole(), pi).value);
      row.local_ls = std::max(
          row.local_ls,
          lq_norm(sys.mesh(), Region::ball(opt.probe, R), opt.s_local, dg)
              .value);
      row.annulus_ls = std::max(
          row.annulus_ls,
          lq_norm(sys.mesh(), Region::complement(y, R), opt.s_annulus, dg)
              .value);
      (k == 0 ? row.pressure_mean.x : row.pressure_mean.y) =
          pair.col[k].pressure_mean;
    }
    row.G_probe = pair.velocity(opt.probe);
    row.Pi_probe = pair.pressure(opt.probe);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace greenlab
