#include "greenlab/coefficients.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "greenlab/errors.hpp"

namespace greenlab {

namespace {

CoeffTensor block_diag_identity(double s) {
  CoeffTensor t;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i) t(a, a, i, i) = s;
  return t;
}

// Face points belong to the cell on their lower-left side.
int cell_index(double v, int grid) {
  double scaled = v * grid;
  double c = std::ceil(scaled);
  return static_cast<int>(c) - 1;
}

Eigen::Matrix4d as_matrix(const CoeffTensor& t) {
  Eigen::Matrix4d m;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i)
      for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 2; ++j) m(a * 2 + i, b * 2 + j) = t(a, b, i, j);
  return m;
}

}  // namespace

CoefficientField CoefficientField::identity() {
  CoefficientField f;
  f.kind_ = Kind::identity;
  f.lambda_ = 1.0;
  return f;
}

CoefficientField CoefficientField::checkerboard(double contrast, int grid,
                                                double skew, double lambda) {
  if (!(contrast > 0.0) || grid < 1 || !(lambda > 0.0) || !std::isfinite(skew))
    throw InvalidParameter("checkerboard: need contrast > 0, grid >= 1, lambda > 0");
  CoefficientField f;
  f.kind_ = Kind::checkerboard;
  f.contrast_ = contrast;
  f.grid_ = grid;
  f.skew_ = skew;
  f.lambda_ = lambda;
  return f;
}

CoefficientField CoefficientField::rotated(double strength, double lambda) {
  if (!(strength >= 0.0) || !(lambda > 0.0))
    throw InvalidParameter("rotated: need strength >= 0 and lambda > 0");
  CoefficientField f;
  f.kind_ = Kind::rotated;
  f.strength_ = strength;
  f.lambda_ = lambda;
  return f;
}

CoeffTensor CoefficientField::eval(Vec2 x) const {
  CoeffTensor base;
  switch (kind_) {
    case Kind::identity:
      base = block_diag_identity(1.0);
      break;
    case Kind::checkerboard: {
      int ix = cell_index(x.x, grid_);
      int iy = cell_index(x.y, grid_);
      bool odd = ((ix + iy) % 2 + 2) % 2 == 1;
      if (!odd) {
        base = block_diag_identity(1.0);
      } else {
        base = block_diag_identity(contrast_);
        // Symmetric off-diagonal block coupling between the two gradient
        // slots; the adjoint moves it to the opposite block.
        base(0, 1, 0, 1) = skew_;
        base(0, 1, 1, 0) = skew_;
      }
      break;
    }
    case Kind::rotated: {
      double theta = 0.3 + M_PI * x.x;
      Vec2 n = dir(theta);
      base = block_diag_identity(1.0);
      for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) base(a, a, i, j) += strength_ * n[i] * n[j];
      break;
    }
  }
  CoeffTensor out;
  if (adjoint_) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) out(a, b, i, j) = base(b, a, j, i);
  } else {
    out = base;
  }
  if (scale_ != 1.0) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) out(a, b, i, j) *= scale_;
  }
  return out;
}

CoefficientField CoefficientField::adjoint() const {
  CoefficientField f = *this;
  f.adjoint_ = !adjoint_;
  return f;
}

CoefficientField CoefficientField::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidParameter("scaled: factor must be positive");
  CoefficientField f = *this;
  f.scale_ = scale_ * factor;
  f.lambda_ = lambda_ * std::min(factor, 1.0 / factor);
  return f;
}

CoefficientField::EllipticityCheck CoefficientField::verify_ellipticity(
    int samples, unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  EllipticityCheck chk;
  chk.min_form = 1e300;
  chk.max_norm = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec2 x{uni(rng), uni(rng)};
    // For cell structures also probe points near faces.
    if (kind_ == Kind::checkerboard && s % 4 == 0) {
      x.x = std::round(x.x * grid_) / grid_ + (uni(rng) - 0.5) * 1e-9;
    }
    Eigen::Matrix4d m = as_matrix(eval(x));
    Eigen::Matrix4d sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(sym);
    chk.min_form = std::min(chk.min_form, es.eigenvalues().minCoeff());
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(m);
    chk.max_norm = std::max(chk.max_norm, svd.singularValues().maxCoeff());
  }
  chk.pass = chk.min_form >= lambda_ - 1e-12 &&
             chk.max_norm <= 1.0 / lambda_ + 1e-12;
  return chk;
}

CoefficientField CoefficientField::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::string kind = j.value("kind", "identity");
  CoefficientField f;
  if (kind == "identity") {
    f = identity();
  } else if (kind == "checkerboard") {
    f = checkerboard(j.value("contrast", 3.0), j.value("grid", 8),
                     j.value("skew", 0.25), j.value("lambda", 0.3));
  } else if (kind == "rotated") {
    f = rotated(j.value("strength", 1.5), j.value("lambda", 0.4));
  } else {
    throw InvalidParameter("unknown coefficient kind: " + kind);
  }
  if (j.value("adjoint", false)) f = f.adjoint();
  if (j.contains("scale")) f = f.scaled(j["scale"].get<double>());
  return f;
}

std::string CoefficientField::to_json_text() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::identity:
      j["kind"] = "identity";
      break;
    case Kind::checkerboard:
      j["kind"] = "checkerboard";
      j["contrast"] = contrast_;
      j["grid"] = grid_;
      j["skew"] = skew_;
      break;
    case Kind::rotated:
      j["kind"] = "rotated";
      j["strength"] = strength_;
      break;
  }
  j["lambda"] = lambda_;
  if (adjoint_) j["adjoint"] = true;
  if (scale_ != 1.0) j["scale"] = scale_;
  return j.dump(2);
}

}  // namespace greenlab
