#pragma once

namespace diqkd {

/// Affine certificate mu + nu*g dominating the guessing-probability
/// tradeoff curve, anchored (tangent) at g0. nu <= 0 for a sound curve.
struct LinearBound {
  double g0 = 0.0;
  double mu = 0.0;
  double nu = 0.0;

  double eval(double g) const { return mu + nu * g; }
};

}  // namespace diqkd
