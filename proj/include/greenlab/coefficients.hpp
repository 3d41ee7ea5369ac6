#pragma once

#include <string>

#include "greenlab/vec2.hpp"

namespace greenlab {

// Rank-4 coefficient tensor at a point: block (alpha, beta) couples the
// beta-derivative of the solution to the alpha-derivative of the test
// function; (i, j) are the vector components.
struct CoeffTensor {
  double t[2][2][2][2] = {};

  double& operator()(int a, int b, int i, int j) { return t[a][b][i][j]; }
  double operator()(int a, int b, int i, int j) const { return t[a][b][i][j]; }
};

// Measurable coefficient field presets.  Only boundedness and the
// ellipticity constant lambda are assumed; no continuity.
class CoefficientField {
public:
  enum class Kind { identity, checkerboard, rotated };

  static CoefficientField identity();
  // Alternating cells of size 1/grid: plain blocks on even parity,
  // contrast-scaled plus a skew off-diagonal block coupling on odd parity
  // (skew != 0 makes the operator non-self-adjoint).
  static CoefficientField checkerboard(double contrast, int grid, double skew,
                                       double lambda);
  // Smooth anisotropy d * n(x) tensor n(x) with rotating direction n.
  static CoefficientField rotated(double strength, double lambda);

  static CoefficientField from_json_text(const std::string& text);
  std::string to_json_text() const;

  CoeffTensor eval(Vec2 x) const;
  CoefficientField adjoint() const;
  CoefficientField scaled(double factor) const;

  double lambda() const { return lambda_; }
  Kind kind() const { return kind_; }
  bool is_adjoint() const { return adjoint_; }
  double scale() const { return scale_; }

  // Measured ellipticity over samples: min Rayleigh quotient of the
  // symmetrized 4x4 form and max operator norm.  Throws
  // InvalidParameter when the declared lambda is violated.
  struct EllipticityCheck {
    double min_form = 0.0;
    double max_norm = 0.0;
    bool pass = false;
  };
  EllipticityCheck verify_ellipticity(int samples = 4096, unsigned seed = 7) const;

private:
  Kind kind_ = Kind::identity;
  double contrast_ = 1.0;
  int grid_ = 1;
  double skew_ = 0.0;
  double strength_ = 0.0;
  double lambda_ = 1.0;
  bool adjoint_ = false;
  double scale_ = 1.0;
};

}  // namespace greenlab
