#include "greenlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "greenlab/errors.hpp"

namespace greenlab {

bool Region::contains(Vec2 p) const {
  switch (kind) {
    case Kind::whole:
      return true;
    case Kind::ball:
      return dist(p, center) <= radius;
    case Kind::complement:
      return dist(p, center) > radius;
  }
  return false;
}

WeightedPoints region_quadrature(const Mesh& mesh, const Region& region,
                                 int degree) {
  if (region.kind != Region::Kind::whole && !(region.radius >= 0.0))
    throw InvalidParameter("region radius must be nonnegative");

  WeightedPoints out;
  const TriRule& rule = tri_rule(degree);
  auto plain = [&](int t) { mesh.tri_quadrature(t, rule, out); };

  switch (region.kind) {
    case Region::Kind::whole:
      for (int t = 0; t < mesh.num_triangles(); ++t) plain(t);
      break;
    case Region::Kind::ball: {
      if (region.radius > 0.0)
        for (int t : mesh.tris_near(region.center, region.radius)) {
          const MeshTri& tr = mesh.tri(t);
          out.append(triangle_disk_quadrature(
              mesh.vertex(tr.v[0]), mesh.vertex(tr.v[1]), mesh.vertex(tr.v[2]),
              region.center, region.radius, degree));
        }
      break;
    }
    case Region::Kind::complement: {
      if (region.radius == 0.0) {
        for (int t = 0; t < mesh.num_triangles(); ++t) plain(t);
        break;
      }
      std::vector<int> near = mesh.tris_near(region.center, region.radius);
      std::size_t k = 0;
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (k < near.size() && near[k] == t) {
          ++k;
          const MeshTri& tr = mesh.tri(t);
          out.append(triangle_minus_disk_quadrature(
              mesh.vertex(tr.v[0]), mesh.vertex(tr.v[1]), mesh.vertex(tr.v[2]),
              region.center, region.radius, degree));
        } else {
          plain(t);
        }
      }
      break;
    }
  }
  return out;
}

namespace {

// Report labels: a ball region reports its center as x, a complement
// region as y.  The whole domain is the complement of an empty disk.
void label_region(NormReport& r, const Region& region) {
  switch (region.kind) {
    case Region::Kind::ball:
      r.x = region.center;
      r.R = region.radius;
      break;
    case Region::Kind::complement:
      r.y = region.center;
      r.R = region.radius;
      break;
    case Region::Kind::whole:
      break;
  }
}

const char* lq_kind(const Region& region) {
  return region.kind == Region::Kind::ball ? "lq_ball" : "lq_annulus";
}

double vdc(int i, int base) {
  double f = 1.0, r = 0.0;
  for (int n = i; n > 0; n /= base) {
    f /= base;
    r += f * (n % base);
  }
  return r;
}

}  // namespace

NormReport weak_l2(const Mesh& mesh, const Region& region,
                   const ScalarField& magnitude) {
  WeightedPoints pts = region_quadrature(mesh, region);
  if (pts.x.empty() || !(pts.area > 0.0))
    throw InvalidParameter("weak_l2: region is empty");

  std::vector<std::pair<double, double>> vw(pts.x.size());
  for (std::size_t i = 0; i < pts.x.size(); ++i)
    vw[i] = {std::abs(magnitude(pts.x[i])), pts.w[i]};
  std::sort(vw.begin(), vw.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  // As t rises to a sampled value v, the superlevel set {|u| > t} still
  // carries every point with |u| >= v, so ties accumulate before the
  // candidate is scored.
  double best = 0.0, cum = 0.0;
  for (std::size_t i = 0; i < vw.size(); ++i) {
    cum += vw[i].second;
    if (i + 1 == vw.size() || vw[i + 1].first < vw[i].first)
      best = std::max(best, vw[i].first * std::sqrt(cum));
  }

  NormReport r;
  r.kind = "weak_l2";
  label_region(r, region);
  r.value = best;
  r.samples = static_cast<int>(vw.size());
  return r;
}

NormReport lq_norm(const Mesh& mesh, const Region& region, double q,
                   const ScalarField& magnitude) {
  if (!(q >= 1.0) || !std::isfinite(q))
    throw InvalidParameter("lq_norm: q must lie in [1, infinity)");
  WeightedPoints pts = region_quadrature(mesh, region);
  if (pts.x.empty() || !(pts.area > 0.0))
    throw InvalidParameter("lq_norm: region is empty");

  double s = 0.0;
  for (std::size_t i = 0; i < pts.x.size(); ++i)
    s += pts.w[i] * std::pow(std::abs(magnitude(pts.x[i])), q);

  NormReport r;
  r.kind = lq_kind(region);
  label_region(r, region);
  r.q = q;
  r.value = std::pow(s, 1.0 / q);
  r.samples = static_cast<int>(pts.x.size());
  return r;
}

std::vector<Vec2> holder_sample_points(const Mesh& mesh, const Region& region,
                                       int pair_budget) {
  if (pair_budget < 1) throw InvalidParameter("pair budget must be positive");
  int n = static_cast<int>((1.0 + std::sqrt(1.0 + 8.0 * pair_budget)) / 2.0);
  n = std::max(n, 2);

  Vec2 lo{std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec2 hi{-lo.x, -lo.y};
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    lo.x = std::min(lo.x, mesh.vertex(i).x);
    lo.y = std::min(lo.y, mesh.vertex(i).y);
    hi.x = std::max(hi.x, mesh.vertex(i).x);
    hi.y = std::max(hi.y, mesh.vertex(i).y);
  }
  if (region.kind == Region::Kind::ball) {
    lo.x = std::max(lo.x, region.center.x - region.radius);
    lo.y = std::max(lo.y, region.center.y - region.radius);
    hi.x = std::min(hi.x, region.center.x + region.radius);
    hi.y = std::min(hi.y, region.center.y + region.radius);
  }
  if (!(hi.x > lo.x) || !(hi.y > lo.y))
    throw InvalidParameter("sample region has no extent");

  std::vector<Vec2> pts;
  pts.reserve(n);
  for (int i = 1; static_cast<int>(pts.size()) < n && i <= 200000; ++i) {
    Vec2 p{lo.x + vdc(i, 2) * (hi.x - lo.x),
           lo.y + vdc(i, 3) * (hi.y - lo.y)};
    if (region.contains(p) && mesh.locate(p) >= 0) pts.push_back(p);
  }
  if (pts.size() < 2)
    throw InvalidParameter("region offers fewer than two evaluation points");
  return pts;
}

NormReport holder_seminorm(const Mesh& mesh, const Region& region, double mu,
                           int pair_budget, const ScalarField& field) {
  if (!(mu > 0.0) || !(mu < 1.0))
    throw InvalidParameter("holder exponent must lie in (0, 1)");
  std::vector<Vec2> pts = holder_sample_points(mesh, region, pair_budget);

  std::vector<double> vals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = field(pts[i]);

  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d = dist(pts[i], pts[j]);
      if (d > 0.0)
        best = std::max(best,
                        std::abs(vals[i] - vals[j]) / std::pow(d, mu));
    }

  NormReport r;
  r.kind = "holder";
  label_region(r, region);
  r.mu = mu;
  r.value = best;
  r.samples = static_cast<int>(pts.size());
  return r;
}

LogFit log_slope_fit(const std::vector<double>& radii,
                     const std::vector<double>& values, double K, double eps) {
  if (radii.size() != values.size())
    throw InvalidParameter("log_slope_fit: size mismatch");
  if (radii.size() < 6)
    throw InvalidParameter("log_slope_fit: needs at least 6 probe radii");
  if (!(K > 0.0)) throw InvalidParameter("log_slope_fit: K must be positive");
  double rmin = radii[0], rmax = radii[0];
  for (double r : radii) {
    if (!(r > 0.0)) throw InvalidParameter("log_slope_fit: radii must be positive");
    if (!(r >= 2.0 * eps))
      throw InvalidParameter("log_slope_fit: radii must clear twice the smoothing width");
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  if (!(rmax >= 4.0 * rmin))
    throw FitError("log_slope_fit: radii span fewer than two octaves");

  int n = static_cast<int>(radii.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double xi = std::log(K / radii[i]);
    sx += xi;
    sy += values[i];
    sxx += xi * xi;
    sxy += xi * values[i];
  }
  double det = n * sxx - sx * sx;
  if (!(det > 1e-12 * n * sxx)) throw FitError("log_slope_fit: degenerate spread");

  LogFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = values[i] - (f.slope * std::log(K / radii[i]) + f.intercept);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / n);
  f.samples = n;
  return f;
}

namespace {

double lq_over(const WeightedPoints& pts, double q,
               const std::function<double(Vec2)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.x.size(); ++i)
    s += pts.w[i] * std::pow(std::abs(f(pts.x[i])), q);
  return std::pow(s, 1.0 / q);
}

double mean_over(const WeightedPoints& pts, const ScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.x.size(); ++i) s += pts.w[i] * f(pts.x[i]);
  return s / pts.area;
}

double safe_ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

}  // namespace

NormReport inequality_ratio(const Mesh& mesh, RatioKind kind, double q,
                            Vec2 x0, double R, const ScalarField& u,
                            const GradField& du, int pair_budget) {
  auto grad_mag = [&](Vec2 p) { return norm(du(p)); };

  NormReport r;
  r.kind = "ratio";
  r.q = q;
  r.x = x0;
  r.R = R;

  switch (kind) {
    case RatioKind::sobolev_poincare_local:
    case RatioKind::sobolev_poincare_global: {
      if (!(q > 1.0) || !(q < 2.0))
        throw InvalidParameter("sobolev-poincare ratio needs q in (1, 2)");
      bool local = kind == RatioKind::sobolev_poincare_local;
      if (local && !(R > 0.0))
        throw InvalidParameter("sobolev-poincare ratio needs R > 0");
      Region inner = local ? Region::ball(x0, R / 8.0) : Region::whole();
      Region outer = local ? Region::ball(x0, R) : Region::whole();
      WeightedPoints pin = region_quadrature(mesh, inner);
      WeightedPoints pout = region_quadrature(mesh, outer);
      if (pin.x.empty() || !(pin.area > 0.0))
        throw InvalidParameter("inequality_ratio: region is empty");
      double qs = 2.0 * q / (2.0 - q);
      double mean = mean_over(pin, u);
      double lhs = lq_over(pin, qs, [&](Vec2 p) { return u(p) - mean; });
      double rhs = lq_over(pout, q, grad_mag);
      // mean subtraction leaves rounding residue on constant fields
      if (lhs <= 1e-12 * std::abs(mean) * std::pow(pin.area, 1.0 / qs))
        lhs = 0.0;
      r.value = safe_ratio(lhs, rhs);
      r.samples = static_cast<int>(pin.x.size());
      break;
    }
    case RatioKind::morrey: {
      if (!(q > 2.0)) throw InvalidParameter("morrey ratio needs q > 2");
      if (!(R > 0.0)) throw InvalidParameter("morrey ratio needs R > 0");
      double mu = 1.0 - 2.0 / q;
      Region inner = Region::ball(x0, R / 8.0);
      WeightedPoints pin = region_quadrature(mesh, inner);
      if (pin.x.empty() || !(pin.area > 0.0))
        throw InvalidParameter("inequality_ratio: region is empty");
      NormReport hol = holder_seminorm(mesh, inner, mu, pair_budget, u);
      double rhs =
          lq_over(region_quadrature(mesh, Region::ball(x0, R)), q, grad_mag) +
          std::pow(R, -2.0) * lq_over(pin, 1.0, u);
      r.mu = mu;
      r.value = safe_ratio(hol.value, rhs);
      r.samples = hol.samples;
      break;
    }
    case RatioKind::reverse_holder: {
      if (!(q > 2.0)) throw InvalidParameter("reverse-holder ratio needs q > 2");
      if (!(R > 0.0)) throw InvalidParameter("reverse-holder ratio needs R > 0");
      WeightedPoints half = region_quadrature(mesh, Region::ball(x0, R / 2.0));
      WeightedPoints full = region_quadrature(mesh, Region::ball(x0, R));
      if (half.x.empty() || !(half.area > 0.0))
        throw InvalidParameter("inequality_ratio: region is empty");
      double lhs = lq_over(half, q, grad_mag) / std::pow(half.area, 1.0 / q);
      double rhs = lq_over(full, 2.0, grad_mag) / std::sqrt(full.area);
      r.value = safe_ratio(lhs, rhs);
      r.samples = static_cast<int>(half.x.size());
      break;
    }
  }
  return r;
}

std::string to_json(const NormReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["q"] = r.q;
  j["R"] = r.R;
  j["mu"] = r.mu;
  j["x"] = {r.x.x, r.x.y};
  j["y"] = {r.y.x, r.y.y};
  j["value"] = r.value;
  j["samples"] = r.samples;
  j["residual"] = r.residual;
  return j.dump();
}

}  // namespace greenlab
