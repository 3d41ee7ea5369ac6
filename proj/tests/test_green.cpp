#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "greenlab/errors.hpp"
#include "greenlab/green.hpp"
#include "greenlab/mesh.hpp"
#include "greenlab/norms.hpp"
#include "greenlab/polygon.hpp"

using namespace greenlab;

namespace {

PolygonalDomain certified_square() {
  PolygonalDomain dom = unit_square();
  dom.lipschitz = LipschitzCert{1.01, 0.5};
  return dom;
}

Mesh square_mesh(const PolygonalDomain& dom, double h) {
  MeshOptions opt;
  opt.h = h;
  return Mesh::build(dom, opt);
}

Mesh graded_mesh(const PolygonalDomain& dom, double h, Vec2 pole,
                 double ratio) {
  MeshOptions opt;
  opt.h = h;
  opt.grade = true;
  opt.pole = pole;
  opt.grade_ratio = ratio;
  return Mesh::build(dom, opt);
}

}  // namespace

TEST_CASE("column pair satisfies its invariants") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.06);
  CoefficientField coeff = CoefficientField::checkerboard(4.0, 8, 0.25, 0.2);
  StokesSystem sys(mesh, dom, coeff);

  Vec2 y{0.47, 0.53};
  GreenPair pair = approx_green(sys, y, 0.1, false);

  for (int k = 0; k < 2; ++k) {
    const GreenColumn& c = pair.col[k];
    CHECK(c.k == k);
    CHECK(std::abs(c.velocity_mean.x) <= 1e-10);
    CHECK(std::abs(c.velocity_mean.y) <= 1e-10);
    CHECK(c.divergence <= 1e-9);
    CHECK(c.sol.residual <= 1e-9);
    CHECK(std::isfinite(c.pressure_mean));
    REQUIRE(c.apriori.size() == 2);
    for (auto [q, ratio] : c.apriori) {
      CHECK(q > 2.0);
      CHECK(ratio > 0.0);
      CHECK(std::isfinite(ratio));
    }
    // the averaging load pairs to zero with constant velocities
    double s0 = 0.0, s1 = 0.0, a = 0.0;
    for (int n = 0; n < sys.n_scalar(); ++n) {
      s0 += c.load[2 * n];
      s1 += c.load[2 * n + 1];
      a += std::abs(c.load[2 * n]) + std::abs(c.load[2 * n + 1]);
    }
    CHECK(std::abs(s0) <= 1e-12 * a);
    CHECK(std::abs(s1) <= 1e-12 * a);
  }
}

TEST_CASE("under-resolved averaging radius is rejected") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.1);
  StokesSystem sys(mesh, dom, CoefficientField::identity());
  CHECK(sys.resolution_count({0.52, 0.48}, 0.004) < 8);
  CHECK_THROWS_AS(approx_green(sys, {0.52, 0.48}, 0.004, false),
                  ResolutionError);
  // comfortable radius on the same mesh goes through
  GreenPair ok = approx_green(sys, {0.52, 0.48}, 0.12, false);
  CHECK(ok.col[0].sol.residual <= 1e-9);
}

TEST_CASE("identity coefficients reproduce the free-space log slope") {
  PolygonalDomain dom = regular_ngon(128, 1.0);
  Mesh mesh = graded_mesh(dom, 0.07, {0.0, 0.0}, 6.0);
  StokesSystem sys(mesh, dom, CoefficientField::identity());

  Vec2 y{0.0, 0.0};
  double eps = 0.012;
  GreenPair pair = approx_green(sys, y, eps, false);

  double K = 2.0;
  std::vector<Vec2> probes = probe_points(dom, y, eps, K);
  REQUIRE(probes.size() >= 6);

  std::vector<double> radii, g11, g22;
  for (Vec2 p : probes) {
    Mat2 G = pair.velocity(p);
    radii.push_back(dist(p, y));
    g11.push_back(G(0, 0));
    g22.push_back(G(1, 1));
  }
  double stokeslet = 1.0 / (4.0 * M_PI);
  LogFit f11 = log_slope_fit(radii, g11, K, eps);
  LogFit f22 = log_slope_fit(radii, g22, K, eps);
  CHECK(std::abs(f11.slope - stokeslet) <= 0.2 * stokeslet);
  CHECK(std::abs(f22.slope - stokeslet) <= 0.2 * stokeslet);
}

TEST_CASE("columns scale inversely with the coefficient scale") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.07);
  CoefficientField base = CoefficientField::checkerboard(3.0, 4, 0.3, 0.25);
  StokesSystem sys1(mesh, dom, base);
  StokesSystem sys3(mesh, dom, base.scaled(3.0));

  Vec2 y{0.5, 0.5};
  GreenPair g1 = approx_green(sys1, y, 0.1, false);
  GreenPair g3 = approx_green(sys3, y, 0.1, false);

  int nu = sys1.n_velocity(), np = sys1.n_pressure();
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd u1 = g1.col[k].sol.z.head(nu);
    Eigen::VectorXd u3 = g3.col[k].sol.z.head(nu);
    double uscale = u1.lpNorm<Eigen::Infinity>();
    CHECK((3.0 * u3 - u1).lpNorm<Eigen::Infinity>() <= 1e-9 * uscale);

    Eigen::VectorXd p1 = g1.col[k].sol.z.segment(nu, np);
    Eigen::VectorXd p3 = g3.col[k].sol.z.segment(nu, np);
    double pscale = p1.lpNorm<Eigen::Infinity>();
    CHECK((p3 - p1).lpNorm<Eigen::Infinity>() <= 1e-9 * pscale);
  }
}

TEST_CASE("halving the radius barely moves far-field values") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = graded_mesh(dom, 0.05, {0.3, 0.3}, 5.0);
  CoefficientField coeff = CoefficientField::checkerboard(2.0, 4, 0.0, 0.35);
  StokesSystem sys(mesh, dom, coeff);

  Vec2 y{0.3, 0.3};
  GreenPair ga = approx_green(sys, y, 0.04, false);
  GreenPair gb = approx_green(sys, y, 0.02, false);

  std::vector<Vec2> far{{0.75, 0.7}, {0.8, 0.35}, {0.35, 0.85}};
  for (Vec2 p : far) {
    REQUIRE(dist(p, y) >= 10.0 * 0.04);
    Mat2 A = ga.velocity(p), B = gb.velocity(p);
    CHECK((A - B).max_abs() <= 0.01 * A.max_abs());
  }
}

TEST_CASE("duality pairing is exact for matched systems") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.07);
  CoefficientField coeff = CoefficientField::checkerboard(4.0, 8, 0.4, 0.15);
  StokesSystem sys(mesh, dom, coeff);

  Vec2 y{0.35, 0.4}, x{0.7, 0.65};
  GreenPair direct = approx_green(sys, y, 0.08, false);
  GreenPair adj = approx_green(sys, x, 0.06, true);

  DualityCheck d = duality_identity(direct, adj);
  CHECK(d.scale > 0.0);
  CHECK(d.defect.max_abs() <= 1e-7 * d.scale);

  // the columns themselves differ across orientations (non-symmetric
  // coefficients), so the vanishing defect is not vacuous
  GreenPair direct_x = approx_green(sys, x, 0.06, false);
  double diff = 0.0;
  for (int k = 0; k < 2; ++k)
    diff = std::max(diff, (direct_x.col[k].sol.z - adj.col[k].sol.z)
                              .lpNorm<Eigen::Infinity>());
  CHECK(diff > 1e-4 * adj.col[0].sol.z.lpNorm<Eigen::Infinity>());
}

TEST_CASE("self-adjoint coefficients make the pairing symmetric") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.08);
  StokesSystem sys(mesh, dom, CoefficientField::identity());

  Vec2 y{0.4, 0.45}, x{0.68, 0.6};
  GreenPair direct = approx_green(sys, y, 0.08, false);
  GreenPair adj = approx_green(sys, x, 0.08, true);
  DualityCheck d = duality_identity(direct, adj);
  CHECK(d.defect.max_abs() <= 1e-9 * d.scale);

  // adjoint columns coincide with direct columns at the same pole
  GreenPair direct_x = approx_green(sys, x, 0.08, false);
  for (int k = 0; k < 2; ++k) {
    double scale = direct_x.col[k].sol.z.lpNorm<Eigen::Infinity>();
    CHECK((direct_x.col[k].sol.z - adj.col[k].sol.z)
              .lpNorm<Eigen::Infinity>() <= 1e-9 * scale);
  }
}

TEST_CASE("broken pairings are detected") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.08);
  CoefficientField coeff = CoefficientField::checkerboard(4.0, 8, 0.4, 0.15);
  StokesSystem sys(mesh, dom, coeff);

  Vec2 y{0.35, 0.4}, x{0.7, 0.65};
  GreenPair direct = approx_green(sys, y, 0.08, false);

  // negative control: adjoint columns from unrelated coefficients on the
  // same mesh slip past the pairing checks but leave an order-one defect
  StokesSystem other(mesh, dom, CoefficientField::identity());
  GreenPair bad = approx_green(other, x, 0.08, true);
  DualityCheck db = duality_identity(direct, bad);
  CHECK(db.defect.max_abs() >= 1e-3 * db.scale);

  // matched defect on the same configuration, for contrast
  GreenPair good = approx_green(sys, x, 0.08, true);
  DualityCheck dg = duality_identity(direct, good);
  CHECK(dg.defect.max_abs() <= 1e-7 * dg.scale);

  // orientation and mesh mismatches never produce numbers
  CHECK_THROWS_AS(duality_identity(direct, direct), InvalidPairing);
  CHECK_THROWS_AS(duality_identity(direct, approx_green(sys, y, 0.08, true)),
                  InvalidPairing);
  Mesh mesh2 = square_mesh(dom, 0.09);
  StokesSystem sys2(mesh2, dom, coeff);
  CHECK_THROWS_AS(
      duality_identity(direct, approx_green(sys2, x, 0.08, true)),
      InvalidPairing);
}

TEST_CASE("averaged reproduction identity") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.07);
  CoefficientField coeff = CoefficientField::checkerboard(3.0, 4, 0.2, 0.25);
  StokesSystem sys(mesh, dom, coeff);

  Vec2 y{0.45, 0.55};
  GreenPair greens = approx_green(sys, y, 0.09, false);

  // zero data reproduces zero
  RepCheck z = representation_check(sys, greens, nullptr, nullptr, nullptr);
  CHECK(z.defect.x == 0.0);
  CHECK(z.defect.y == 0.0);
  CHECK(z.lhs.x == 0.0);
  CHECK(z.rhs.y == 0.0);

  // pure divergence data
  auto gone = [](Vec2) { return 1.0; };
  RepCheck rg = representation_check(sys, greens, nullptr, nullptr, gone);
  CHECK(rg.defect.x <= 1e-7);
  CHECK(rg.defect.y <= 1e-7);
  CHECK(std::abs(rg.lhs.x) + std::abs(rg.lhs.y) > 0.0);

  // smooth flux data
  auto fa = [](Vec2 p) {
    Mat2 m;
    m(0, 0) = std::cos(p.y);
    m(1, 1) = std::sin(p.x);
    return m;
  };
  RepCheck rf = representation_check(sys, greens, nullptr, fa, nullptr);
  CHECK(rf.defect.x <= 1e-7);
  CHECK(rf.defect.y <= 1e-7);
}

TEST_CASE("reproduction identity across meshes tightens under refinement") {
  PolygonalDomain dom = certified_square();
  Mesh coarse = square_mesh(dom, 0.08);
  Mesh fine = square_mesh(dom, 0.04);
  CoefficientField coeff = CoefficientField::checkerboard(2.0, 4, 0.0, 0.35);
  StokesSystem sys_c(coarse, dom, coeff);
  StokesSystem sys_f(fine, dom, coeff);

  Vec2 y{0.45, 0.55};
  double eps = 0.09;
  GreenPair g_c = approx_green(sys_c, y, eps, false);
  GreenPair g_f = approx_green(sys_f, y, eps, false);

  auto gone = [](Vec2) { return 1.0; };
  // same-system identity is exact; columns from the other mesh leave a
  // discretization gap that shrinks as their mesh refines
  RepCheck same = representation_check(sys_c, g_c, nullptr, nullptr, gone);
  RepCheck cross_cf = representation_check(sys_c, g_f, nullptr, nullptr, gone);
  RepCheck cross_fc = representation_check(sys_f, g_c, nullptr, nullptr, gone);

  CHECK(same.defect.x <= 1e-7);
  double dc = std::max(cross_fc.defect.x, cross_fc.defect.y);
  double df = std::max(cross_cf.defect.x, cross_cf.defect.y);
  CHECK(dc <= 0.02);
  CHECK(df <= 0.02);
  CHECK(df <= dc);
}

TEST_CASE("radius ladder study: uniform weak norms and settling probes") {
  PolygonalDomain dom = certified_square();
  Vec2 y{0.3, 0.3};
  Mesh mesh = graded_mesh(dom, 0.05, y, 8.0);
  CoefficientField coeff = CoefficientField::checkerboard(2.0, 4, 0.2, 0.3);
  StokesSystem sys(mesh, dom, coeff);

  EpsStudyOptions opt;
  opt.J = 3;
  opt.eps0 = 0.08;
  opt.probe = {0.92, 0.92};
  opt.ball_R = 0.12;
  REQUIRE(dist(opt.probe, y) >= 10.0 * opt.eps0);

  std::vector<EpsStudyRow> rows = eps_sequence_study(sys, y, opt);
  REQUIRE(rows.size() == 4);

  for (const EpsStudyRow& r : rows) {
    CHECK(std::isfinite(r.weak_dg));
    CHECK(std::isfinite(r.weak_pi));
    CHECK(r.weak_dg > 0.0);
    CHECK(r.local_ls > 0.0);
    CHECK(r.annulus_ls > 0.0);
  }

  // far probe settles: successive differences shrink
  double d1 = (rows[1].G_probe - rows[0].G_probe).max_abs();
  double d2 = (rows[2].G_probe - rows[1].G_probe).max_abs();
  double d3 = (rows[3].G_probe - rows[2].G_probe).max_abs();
  CHECK(d2 < d1);
  CHECK(d3 < d2);

  // weak norms stay in a band once the ladder leaves the largest radii
  double lo = std::min(rows[2].weak_dg, rows[3].weak_dg);
  double hi = std::max(rows[2].weak_dg, rows[3].weak_dg);
  CHECK(hi - lo <= 0.25 * lo);

  CHECK_THROWS_AS(
      [&] {
        EpsStudyOptions bad = opt;
        bad.J = 7;
        eps_sequence_study(sys, y, bad);
      }(),
      InvalidParameter);
}

TEST_CASE("sampled table and its serialized form") {
  PolygonalDomain dom = certified_square();
  Mesh mesh = square_mesh(dom, 0.08);
  StokesSystem sys(mesh, dom, CoefficientField::identity());

  Vec2 y{0.5, 0.5};
  double eps = 0.1;
  GreenPair pair = approx_green(sys, y, eps, false);
  std::vector<Vec2> probes = probe_points(dom, y, eps, 1.0);
  REQUIRE(!probes.empty());
  for (Vec2 p : probes) {
    CHECK(dom.contains_strict(p));
    CHECK(dist(p, y) >= 2.0 * eps - 1e-12);
  }

  GreenTable t = sample_table(pair, probes);
  CHECK(t.x.size() == probes.size());
  std::string csv = to_csv(t);
  CHECK(csv.rfind("x1,x2,y1,y2,eps,G11,G12,G21,G22,Pi1,Pi2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + (long)t.x.size());
  CHECK(csv == to_csv(t));

  CHECK_THROWS_AS(sample_table(pair, {y + Vec2{eps / 4.0, 0.0}}),
                  InvalidParameter);
}
