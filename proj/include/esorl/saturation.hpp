#ifndef ESORL_SATURATION_HPP_
#define ESORL_SATURATION_HPP_

#include <algorithm>
#include <cmath>

namespace esorl {

struct SoftSat {
  double s;
  double s_prime;
};

/**
 * Odd C1 saturation-like ramp.
 *
 * Identity on [0,1], quadratic blend on [1,1+eps], constant 1+eps/2 beyond;
 * extended to v<0 by oddness. s_prime is the exact derivative, in [0,1],
 * and |s(v) - clamp(v,-1,1)| <= eps/2 everywhere.
 */
inline SoftSat soft_sat(double v, double eps) {
  const double a = std::abs(v);
  const double sign = v < 0.0 ? -1.0 : 1.0;
  if (a <= 1.0) {
    return {v, 1.0};
  }
  if (a <= 1.0 + eps) {
    // Distance to the flat section; subtracting this way keeps the blend
    // below the cap and monotone in spite of rounding.
    const double t = (1.0 + eps) - a;
    const double s = (1.0 + eps / 2.0) - t * t / (2.0 * eps);
    return {sign * s, std::min(1.0, t / eps)};
  }
  return {sign * (1.0 + eps / 2.0), 0.0};
}

}  // namespace esorl

#endif  // ESORL_SATURATION_HPP_
